#include "omninav/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "omninav/error.hpp"

namespace omninav {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& err) {
    throw ScenarioError(what + ": " + err.what());
  }
}

Pose read_pose(const json& j) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3) throw ScenarioError("pose must be [x, y, yaw]");
  return {j[0].get<double>(), j[1].get<double>(), j.size() == 3 ? j[2].get<double>() : 0.0};
}

Vec2 read_vec(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Config read_overrides(const json& j) {
  Config c;
  if (!j.is_object()) return c;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      c.set(key, value.get<std::string>());
    } else {
      std::ostringstream s;
      s.precision(17);
      if (value.is_number_integer()) {
        s << value.get<long long>();
      } else if (value.is_number()) {
        s << value.get<double>();
      } else if (value.is_boolean()) {
        s << (value.get<bool>() ? "true" : "false");
      } else {
        throw ScenarioError("config override `" + key + "` must be a scalar");
      }
      c.set(key, s.str());
    }
  }
  return c;
}

std::vector<Waypoint> read_waypoints(const json& j) {
  std::vector<Waypoint> out;
  if (!j.is_array()) return out;
  for (const auto& w : j) {
    Waypoint wp;
    wp.label = w.value("label", "");
    if (w.contains("point")) wp.point = read_vec(w["point"]);
    wp.region = w.value("region", "");
    wp.entity = w.value("entity", "");
    wp.radius = w.value("radius", 0.5);
    out.push_back(std::move(wp));
  }
  return out;
}

// Fields shared by scenario and suite files.
void read_common(const json& j, const std::filesystem::path& base_dir, Scenario& s) {
  const std::string world = j.at("world").get<std::string>();
  s.world_path = std::filesystem::path(world).is_absolute() ? std::filesystem::path(world)
                                                            : base_dir / world;
  try {
    s.world = load_world(s.world_path);
  } catch (const IoError& err) {
    throw ScenarioError(err.what());
  } catch (const ParseError& err) {
    throw ScenarioError(err.what());
  }
  s.origin = read_pose(j.at("origin"));
  s.trials = j.value("trials", 1);
  s.seed = j.value("seed", std::uint64_t{0});
  s.timeout_s = j.value("timeout_s", 30.0);
  s.stop_on_collision = j.value("stop_on_collision", true);
  if (j.contains("jitter")) {
    s.jitter_xy = j["jitter"].value("xy", s.jitter_xy);
    s.jitter_yaw = j["jitter"].value("yaw", s.jitter_yaw);
  }
  s.sim = SimConfig::from_config(read_overrides(j.value("config", json::object())));
  if (j.contains("strategy")) s.sim.reflex.strategy = parse_strategy(j["strategy"].get<std::string>());
}

// Uniform double in [-1, 1) from the top 53 bits; identical on every platform.
double symmetric_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

const std::string* Scenario::instruction_at(double t) const {
  const std::string* current = nullptr;
  for (const auto& e : schedule) {
    if (e.t <= t + 1e-9) current = &e.text;
  }
  return current;
}

void Scenario::validate() const {
  if (trials < 1) throw ScenarioError("trial count must be at least 1");
  if (!(timeout_s >= 0.0)) throw ScenarioError("timeout must be non-negative");
  if (schedule.empty()) throw ScenarioError("instruction schedule is empty");
  if (schedule.front().t != 0.0) throw ScenarioError("instruction schedule must start at t=0");
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i].t < schedule[i - 1].t) throw ScenarioError("schedule times must not decrease");
  }
  for (const auto& e : schedule) {
    if (e.text.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw ScenarioError("schedule contains an empty instruction");
    }
  }
  for (const auto& w : waypoints) {
    if (!w.region.empty() && !world.find_region(w.region)) {
      throw ScenarioError("waypoint references unknown region " + w.region);
    }
    if (!w.entity.empty() && !world.find_entity(w.entity)) {
      throw ScenarioError("waypoint references unknown entity " + w.entity);
    }
    if (!w.point && w.region.empty() && w.entity.empty()) {
      throw ScenarioError("waypoint needs a point, region or entity");
    }
  }
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  const json j = parse_json(text, "scenario file");
  Scenario s;
  try {
    s.name = j.value("name", "scenario");
    s.group = j.value("group", s.name);
    read_common(j, base_dir, s);
    const json& target = j.at("target");
    s.target = read_vec(target.at("point"));
    s.target_label = target.value("label", "");
    for (const auto& e : j.at("schedule")) {
      s.schedule.push_back({e.at("t").get<double>(), e.at("text").get<std::string>()});
    }
    s.waypoints = read_waypoints(j.value("waypoints", json::array()));
  } catch (const json::exception& err) {
    throw ScenarioError(std::string("scenario file: ") + err.what());
  } catch (const ParameterError& err) {
    throw ScenarioError(err.what());
  } catch (const ParseError& err) {
    throw ScenarioError(err.what());
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_file(path), path.parent_path());
}

std::vector<Scenario> parse_suite(const std::string& text, const std::filesystem::path& base_dir) {
  const json j = parse_json(text, "suite file");
  std::vector<Scenario> out;
  try {
    Scenario base;
    read_common(j, base_dir, base);
    const std::string suite_name = j.value("name", "suite");
    std::vector<Strategy> strategies;
    for (const auto& s : j.value("strategies", json::array({"all", "clip", "detic"}))) {
      strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    for (const auto& inst : j.at("instructions")) {
      for (const Strategy strategy : strategies) {
        Scenario s = base;
        s.group = inst.at("label").get<std::string>();
        s.name = suite_name + "_" + s.group + "_" + to_string(strategy);
        s.target = read_vec(inst.at("target"));
        s.target_label = s.group;
        s.schedule = {{0.0, inst.at("text").get<std::string>()}};
        s.sim.reflex.strategy = strategy;
        s.validate();
        out.push_back(std::move(s));
      }
    }
  } catch (const json::exception& err) {
    throw ScenarioError(std::string("suite file: ") + err.what());
  } catch (const ParameterError& err) {
    throw ScenarioError(err.what());
  } catch (const ParseError& err) {
    throw ScenarioError(err.what());
  }
  if (out.empty()) throw ScenarioError("suite has no instructions");
  return out;
}

std::vector<Scenario> load_suite(const std::filesystem::path& path) {
  return parse_suite(read_file(path), path.parent_path());
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kCollision: return "collision";
    case Termination::kTimeout: return "timeout";
    case Termination::kOperator: return "operator";
  }
  return "timeout";
}

Pose jittered_origin(const Scenario& s, int trial) {
  std::mt19937_64 rng(s.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(trial) + 1);
  Pose p = s.origin;
  p.x += s.jitter_xy * symmetric_unit(rng);
  p.y += s.jitter_xy * symmetric_unit(rng);
  p.yaw = wrap_angle(p.yaw + s.jitter_yaw * symmetric_unit(rng));
  return p;
}

TrialResult run_trial(const Scenario& scenario, int trial, const TrialOptions& options) {
  std::optional<OracleScorers> oracles;
  ScorerPair scorers = options.scorers;
  if (!scorers.clip || !scorers.detic) {
    oracles.emplace(scenario.world);
    if (!scorers.clip) scorers.clip = &oracles->clip;
    if (!scorers.detic) scorers.detic = &oracles->detic;
  }

  TrialResult result;
  result.scenario = scenario.name;
  result.group = scenario.group;
  result.strategy = scenario.strategy();
  result.trial = trial;
  result.origin = jittered_origin(scenario, trial);
  result.target = scenario.target;

  Simulation sim(scenario.world, result.origin, scenario.sim, scorers.clip, scorers.detic);
  const long max_ticks = std::lround(scenario.timeout_s / scenario.sim.reflex.tick_s);
  result.termination = Termination::kTimeout;
  for (long k = 0; k < max_ticks; ++k) {
    const std::string* instruction = scenario.instruction_at(sim.time());
    TickRecord rec = sim.tick(*instruction);
    const bool collided = rec.collision;
    result.ticks.push_back(std::move(rec));
    if (collided && scenario.stop_on_collision) {
      result.termination = Termination::kCollision;
      break;
    }
    if (options.operator_stop && options.operator_stop(result.ticks.back())) {
      result.termination = Termination::kOperator;
      break;
    }
  }
  result.final_pose = sim.robot().pose;
  result.duration = sim.time();
  result.final_error = (Vec2(result.final_pose.x, result.final_pose.y) - scenario.target).norm();
  return result;
}

std::vector<WaypointVisit> visit_waypoints(const Scenario& scenario, const TrialResult& trial) {
  std::vector<WaypointVisit> out;
  std::size_t k = 0;
  for (const auto& w : scenario.waypoints) {
    const Region* region = w.region.empty() ? nullptr : scenario.world.find_region(w.region);
    const Entity* entity = w.entity.empty() ? nullptr : scenario.world.find_entity(w.entity);
    const auto distance = [&](const Vec2& p) {
      if (region) return point_in_polygon(p, region->polygon) ? 0.0 : point_polygon_distance(p, region->polygon);
      if (entity) return point_entity_distance(p, *entity);
      return (p - *w.point).norm();
    };
    WaypointVisit visit{w.label, std::nullopt, std::numeric_limits<double>::infinity()};
    for (; k < trial.ticks.size(); ++k) {
      const double d = distance(Vec2(trial.ticks[k].pose.x, trial.ticks[k].pose.y));
      visit.closest = std::min(visit.closest, d);
      if (d <= w.radius) {
        visit.t = trial.ticks[k].t;
        break;
      }
    }
    out.push_back(visit);
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<TrialResult>& trials) {
  std::map<std::pair<std::string, int>, SummaryRow> rows;
  for (const auto& t : trials) {
    auto& row = rows[{t.group, static_cast<int>(t.strategy)}];
    row.group = t.group;
    row.strategy = t.strategy;
    row.errors.push_back(t.final_error);
  }
  std::vector<SummaryRow> out;
  for (auto& [key, row] : rows) {
    row.trials = static_cast<int>(row.errors.size());
    row.mean_error = mean_of(row.errors);
    double var = 0.0;
    for (double e : row.errors) var += (e - row.mean_error) * (e - row.mean_error);
    row.variance = var / static_cast<double>(row.errors.size());
    out.push_back(std::move(row));
  }
  return out;
}

ComparisonResult run_comparison(const std::vector<Scenario>& scenarios, int workers) {
  struct Job {
    std::size_t scenario;
    int trial;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    for (int k = 0; k < scenarios[i].trials; ++k) jobs.push_back({i, k});
  }
  ComparisonResult result;
  result.trials.resize(jobs.size());
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(jobs.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        result.trials[j] = run_trial(scenarios[jobs[j].scenario], jobs[j].trial);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  result.summary = summarize(result.trials);
  return result;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "instruction,strategy,trials,mean_error,variance_error\n";
  for (const auto& r : rows) {
    out += r.group + "," + to_string(r.strategy) + "," + std::to_string(r.trials) + "," +
           fmt("%.6f", r.mean_error) + "," + fmt("%.6f", r.variance) + "\n";
  }
  return out;
}

std::string trajectory_svg(const WorldModel& world, const std::vector<const TrialResult*>& trials,
                           const std::vector<Vec2>& targets) {
  constexpr double scale = 200.0;  // px per metre
  constexpr double margin = 20.0;
  const double w = world.bounds.width() * scale;
  const double h = world.bounds.height() * scale;
  const auto px = [&](double x) { return fmt("%.2f", margin + (x - world.bounds.min.x()) * scale); };
  const auto py = [&](double y) { return fmt("%.2f", margin + (world.bounds.max.y() - y) * scale); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt("%.0f", w + 2 * margin)
      << "\" height=\"" << fmt("%.0f", h + 2 * margin) << "\">\n";
  svg << "<rect id=\"bounds\" x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << fmt("%.0f", w)
      << "\" height=\"" << fmt("%.0f", h) << "\" fill=\"white\" stroke=\"black\"/>\n";
  for (const auto& r : world.regions) {
    svg << "<polygon class=\"region\" points=\"";
    for (const auto& p : r.polygon) svg << px(p.x()) << ',' << py(p.y()) << ' ';
    svg << "\" fill=\"#e8f0ff\" stroke=\"#8aa\"/>\n";
    svg << "<text x=\"" << px(r.polygon.front().x()) << "\" y=\"" << py(r.polygon.front().y())
        << "\" font-size=\"10\">" << r.name << "</text>\n";
  }
  for (const auto& wall : world.walls) {
    svg << "<line x1=\"" << px(wall.segment.a.x()) << "\" y1=\"" << py(wall.segment.a.y()) << "\" x2=\""
        << px(wall.segment.b.x()) << "\" y2=\"" << py(wall.segment.b.y()) << "\" stroke=\""
        << (wall.opaque ? "black" : "#996633") << "\" stroke-width=\"3\"/>\n";
  }
  for (const auto& e : world.entities) {
    if (e.shape == EntityShape::kDisc) {
      svg << "<circle class=\"entity\" cx=\"" << px(e.position.x()) << "\" cy=\"" << py(e.position.y())
          << "\" r=\"" << fmt("%.2f", e.radius * scale) << "\" fill=\"#ccc\"/>\n";
    } else {
      svg << "<polygon class=\"entity\" points=\"";
      for (const auto& p : e.polygon) svg << px(p.x()) << ',' << py(p.y()) << ' ';
      svg << "\" fill=\"#ccc\"/>\n";
    }
  }
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd"};
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto* t = trials[i];
    svg << "<polyline class=\"trajectory\" fill=\"none\" stroke=\"" << colors[i % 5] << "\" points=\""
        << px(t->origin.x) << ',' << py(t->origin.y);
    for (const auto& tick : t->ticks) svg << ' ' << px(tick.pose.x) << ',' << py(tick.pose.y);
    svg << "\"/>\n";
    svg << "<circle class=\"origin\" cx=\"" << px(t->origin.x) << "\" cy=\"" << py(t->origin.y)
        << "\" r=\"4\" fill=\"black\"/>\n";
  }
  for (const auto& target : targets) {
    svg << "<circle class=\"target\" cx=\"" << px(target.x()) << "\" cy=\"" << py(target.y())
        << "\" r=\"6\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::filesystem::path> export_artifacts(const std::vector<Scenario>& scenarios,
                                                    const ComparisonResult& results,
                                                    const std::filesystem::path& out_dir) {
  if (results.trials.empty()) throw ScenarioError("no results to export");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  const auto write = [&](const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
    written.push_back(path);
  };

  for (const auto& t : results.trials) {
    const auto* scenario = &*std::find_if(scenarios.begin(), scenarios.end(),
                                          [&](const Scenario& s) { return s.name == t.scenario; });
    write(out_dir / (t.scenario + "_trial" + std::to_string(t.trial) + ".csv"),
          episode_csv(t.ticks, scenario->sim.reflex.n_split));
  }
  for (const auto& s : scenarios) {
    std::vector<const TrialResult*> mine;
    for (const auto& t : results.trials) {
      if (t.scenario == s.name) mine.push_back(&t);
    }
    if (mine.empty()) continue;
    write(out_dir / (s.name + ".svg"), trajectory_svg(s.world, mine, {s.target}));
  }
  write(out_dir / "summary.csv", summary_csv(results.summary));
  return written;
}

}  // namespace omninav
