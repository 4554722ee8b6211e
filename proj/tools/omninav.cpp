// omninav: batch runs, strategy comparisons, stitching and live serving.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "omninav/error.hpp"
#include "omninav/harness.hpp"
#include "omninav/stitch.hpp"

#ifdef OMNINAV_WITH_GATEWAY
#include "omninav/gateway.hpp"
#endif

namespace {

constexpr int kExitScenario = 2;
constexpr int kExitIo = 3;

void print_summary(const omninav::ComparisonResult& result) {
  std::cout << omninav::summary_csv(result.summary);
}

int run_command(const std::string& scenario_path, const std::string& strategy, int trials,
                long long seed, const std::string& out_dir) {
  auto scenario = omninav::load_scenario(scenario_path);
  if (!strategy.empty()) scenario.sim.reflex.strategy = omninav::parse_strategy(strategy);
  if (trials > 0) scenario.trials = trials;
  if (seed >= 0) scenario.seed = static_cast<std::uint64_t>(seed);
  const std::vector<omninav::Scenario> scenarios{scenario};
  const auto result = omninav::run_comparison(scenarios);
  for (const auto& t : result.trials) {
    std::cout << t.scenario << " trial " << t.trial << ": error " << t.final_error << " m, "
              << omninav::to_string(t.termination) << " after " << t.duration << " s\n";
    for (const auto& v : omninav::visit_waypoints(scenario, t)) {
      std::cout << "  waypoint " << v.label << ": ";
      if (v.t) std::cout << "reached at " << *v.t << " s\n";
      else std::cout << "missed (closest " << v.closest << " m)\n";
    }
  }
  print_summary(result);
  if (!out_dir.empty()) omninav::export_artifacts(scenarios, result, out_dir);
  return 0;
}

int compare_command(const std::string& suite_path, const std::string& out_dir) {
  const auto scenarios = omninav::load_suite(suite_path);
  const auto result = omninav::run_comparison(scenarios);
  print_summary(result);
  if (!out_dir.empty()) omninav::export_artifacts(scenarios, result, out_dir);
  return 0;
}

int stitch_command(const std::string& front, const std::string& rear, const std::string& cps,
                   const std::string& out, const std::string& config_path, bool full) {
  omninav::Config config;
  if (!config_path.empty()) config = omninav::Config::load(config_path);
  const auto options = omninav::StitchOptions::from_config(config);
  const auto result = omninav::stitch(omninav::read_png(front), omninav::read_png(rear),
                                      omninav::load_control_points(cps), options);
  omninav::write_png(full ? result.full.pixels() : result.band.pixels(), out);
  std::cout << "alignment yaw " << result.alignment.yaw() << " rad, residual "
            << result.alignment.residual_rms << " rad"
            << (result.alignment.degenerate ? " (yaw-only fit)" : "") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reflex-based open-vocabulary navigation toolkit"};
  app.require_subcommand(1);

  std::string scenario, strategy, out_dir;
  int trials = 0;
  long long seed = -1;
  auto* run = app.add_subcommand("run", "Run the trials of one scenario");
  run->add_option("--scenario", scenario, "Scenario file")->required();
  run->add_option("--strategy", strategy, "all | clip | detic");
  run->add_option("--trials", trials, "Override the trial count");
  run->add_option("--seed", seed, "Override the seed");
  run->add_option("--out", out_dir, "Directory for CSV and SVG artifacts");

  std::string suite;
  auto* compare = app.add_subcommand("compare", "Run a strategy comparison suite");
  compare->add_option("--suite", suite, "Suite file")->required();
  compare->add_option("--out", out_dir, "Directory for CSV and SVG artifacts");

  std::string front, rear, cps, out_png, config_path;
  bool full = false;
  auto* stitch = app.add_subcommand("stitch", "Stitch a dual-fisheye pair into a panorama band");
  stitch->add_option("--front", front, "Front fisheye PNG")->required();
  stitch->add_option("--rear", rear, "Rear fisheye PNG")->required();
  stitch->add_option("--cps", cps, "Control point file")->required();
  stitch->add_option("--out", out_png, "Output PNG")->required();
  stitch->add_option("--config", config_path, "key=value lens/vignette/crop configuration");
  stitch->add_flag("--full", full, "Write the full panorama instead of the cropped band");

#ifdef OMNINAV_WITH_GATEWAY
  std::string world;
  int session_port = -1;
  int scorer_port = -1;
  double serve_seconds = 0.0;
  auto* serve = app.add_subcommand("serve", "Serve a live simulation to the operator console");
  serve->add_option("--world", world, "World file");
  serve->add_option("--port", session_port, "Session port (default 7472 or OMNINAV_SESSION_PORT)");
  serve->add_option("--scorer-port", scorer_port, "Scorer port (default 7471 or OMNINAV_SCORER_PORT)");
  serve->add_option("--scenario", scenario, "Scenario providing world, origin, instruction and config");
  serve->add_option("--duration", serve_seconds, "Stop after this many seconds (0 = run until killed)");
#endif

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(scenario, strategy, trials, seed, out_dir);
    if (*compare) return compare_command(suite, out_dir);
    if (*stitch) return stitch_command(front, rear, cps, out_png, config_path, full);
#ifdef OMNINAV_WITH_GATEWAY
    if (*serve) {
      if (world.empty() && scenario.empty()) {
        std::cerr << "serve needs --world or --scenario\n";
        return kExitScenario;
      }
      return omninav::serve_main(world, scenario, session_port, serve_seconds, scorer_port);
    }
#endif
  } catch (const omninav::ScenarioError& err) {
    std::cerr << "scenario error: " << err.what() << "\n";
    return kExitScenario;
  } catch (const omninav::ParameterError& err) {
    std::cerr << "scenario error: " << err.what() << "\n";
    return kExitScenario;
  } catch (const omninav::ParseError& err) {
    std::cerr << "scenario error: " << err.what() << "\n";
    return kExitScenario;
  } catch (const omninav::IoError& err) {
    std::cerr << "i/o error: " << err.what() << "\n";
    return kExitIo;
  } catch (const omninav::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
