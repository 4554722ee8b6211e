#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>

#include "omninav/error.hpp"
#include "omninav/sim.hpp"
#include "omninav/simulation.hpp"
#include "oracles.hpp"

using namespace omninav;
constexpr double kPi = std::numbers::pi;

namespace {

const std::filesystem::path kData = OMNINAV_DATA_DIR;

WorldModel open_world(double w = 10, double h = 10) {
  WorldModel world;
  world.bounds = {{0, 0}, {w, h}};
  return world;
}

WorldModel box(double w, double h) {
  WorldModel world = open_world(w, h);
  world.walls = {{{{0, 0}, {w, 0}}}, {{{w, 0}, {w, h}}}, {{{w, h}, {0, h}}}, {{{0, h}, {0, 0}}}};
  return world;
}

RobotState at(double x, double y, double yaw) {
  RobotState s;
  s.pose = {x, y, yaw};
  return s;
}

Entity disc(const std::string& label, Vec2 p, double r, HeightClass h = HeightClass::kFloor) {
  return {label, EntityShape::kDisc, p, r, {}, h};
}

const SliceVisibility* slice_seeing(const VisibilitySummary& v, const std::string& label, int* index = nullptr) {
  for (std::size_t i = 0; i < v.slices.size(); ++i)
    for (const auto& e : v.slices[i].entities)
      if (e.label == label) {
        if (index) *index = static_cast<int>(i);
        return &v.slices[i];
      }
  return nullptr;
}

double size_of(const SliceVisibility& s, const std::string& label) {
  for (const auto& e : s.entities)
    if (e.label == label) return e.apparent_size;
  return 0.0;
}

}  // namespace

TEST_CASE("kinematics: straight line and pure rotation") {
  const WorldModel w = open_world();
  auto r = step_kinematics(w, at(5, 5, 0), {1.0, 0.0, false}, 0.1);
  CHECK(r.state.pose.x == doctest::Approx(5.1));
  CHECK(r.state.pose.y == doctest::Approx(5.0));
  CHECK_FALSE(r.collision);
  r = step_kinematics(w, at(5, 5, 0), {0.0, 0.5, false}, 0.1);
  CHECK(r.state.pose.yaw == doctest::Approx(0.05));
  CHECK(r.state.pose.x == 5.0);
  CHECK_THROWS_AS(step_kinematics(w, at(5, 5, 0), {}, 0.0), ParameterError);
}

TEST_CASE("kinematics: wall 5 cm ahead blocks the position") {
  WorldModel w = open_world();
  w.walls.push_back({{{5.35, 0}, {5.35, 10}}});
  const auto r = step_kinematics(w, at(5.0, 5.0, 0.0), {1.0, 0.2, false}, 0.1);
  CHECK(r.collision);
  CHECK(r.state.pose.x == 5.0);
  CHECK(r.state.pose.y == 5.0);
  CHECK(r.state.pose.yaw == doctest::Approx(0.02));
}

TEST_CASE("kinematics: yaw wraps") {
  const auto r = step_kinematics(open_world(), at(5, 5, kPi - 0.01), {0.0, 1.0, false}, 0.1);
  CHECK(r.state.pose.yaw == doctest::Approx(-kPi + 0.09));
}

TEST_CASE("kinematics: an overlapping robot may back away but not push in") {
  WorldModel w = open_world();
  w.walls.push_back({{{5.25, 0}, {5.25, 10}}});
  REQUIRE(footprint_collides(w, {5.0, 5.0, 0.0}, 0.6));
  const auto away = step_kinematics(w, at(5.0, 5.0, kPi), {1.0, 0.0, false}, 0.1);
  CHECK_FALSE(away.collision);
  CHECK(away.state.pose.x == doctest::Approx(4.9));
  const auto in = step_kinematics(w, at(5.0, 5.0, 0.0), {1.0, 0.0, false}, 0.1);
  CHECK(in.collision);
}

TEST_CASE("kinematics: raised entities do not block, floor entities do") {
  WorldModel w = open_world();
  w.entities.push_back(disc("lamp", {5.4, 5.0}, 0.1, HeightClass::kRaised));
  CHECK_FALSE(step_kinematics(w, at(5.0, 5.0, 0.0), {1.0, 0.0, false}, 0.1).collision);
  w.entities[0].height = HeightClass::kFloor;
  CHECK(step_kinematics(w, at(5.0, 5.0, 0.0), {1.0, 0.0, false}, 0.1).collision);
}

TEST_CASE("kinematics: with zero rotation the robot follows its heading") {
  const WorldModel w = open_world(100, 100);
  RobotState s = at(50, 50, 0.7);
  double travelled = 0;
  for (int k = 0; k < 100; ++k) {
    const double v = 0.3 + 0.7 * (k % 3) / 2.0;
    const auto r = step_kinematics(w, s, {v, 0.0, false}, 0.1);
    travelled += v * 0.1;
    s = r.state;
  }
  const double dx = s.pose.x - 50, dy = s.pose.y - 50;
  CHECK(std::hypot(dx, dy) == doctest::Approx(travelled));
  CHECK(std::atan2(dy, dx) == doctest::Approx(0.7));
}

TEST_CASE("kinematics: translation never creates a new overlap") {
  const WorldModel w = load_world(kData / "worlds" / "basic.world");
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> ux(0.35, 2.15), uy(0.35, 1.25), uyaw(-kPi, kPi), urot(-1.5, 1.5);
  int moves = 0;
  for (int k = 0; k < 400; ++k) {
    RobotState s = at(ux(rng), uy(rng), uyaw(rng));
    for (int step = 0; step < 40; ++step) {
      const VelocityCommand cmd{(rng() % 3) ? 1.0 : 0.0, urot(rng), false};
      const Pose turned{s.pose.x, s.pose.y, wrap_angle(s.pose.yaw + cmd.rotate * 0.1)};
      const bool clear_before = !footprint_collides(w, turned, s.footprint);
      const auto r = step_kinematics(w, s, cmd, 0.1);
      if (clear_before) CHECK_FALSE(footprint_collides(w, r.state.pose, s.footprint));
      if (r.state.pose.x != turned.x) ++moves;
      s = r.state;
    }
  }
  CHECK(moves > 1000);
}

TEST_CASE("ray scan") {
  RobotState s = at(1.25, 0.8, 0.0);
  const auto empty = ray_scan(open_world(), s, 36, 4.0);
  REQUIRE(empty.ranges.size() == 36);
  for (const auto& r : empty.ranges) CHECK(r.distance == 4.0);
  CHECK(empty.ranges[0].bearing == doctest::Approx(-kPi));

  WorldModel wall = open_world();
  wall.walls.push_back({{{2.25, -5}, {2.25, 5}}});
  const auto ahead = ray_scan(wall, s, 8, 10.0);
  CHECK(std::abs(ahead.ranges[4].distance - 1.0) < 1e-9);  // bearing 0

  const auto in_box = ray_scan(box(2.5, 1.6), s, 8, 10.0);
  CHECK(in_box.ranges[4].distance == doctest::Approx(1.25));  // forward
  CHECK(in_box.ranges[6].distance == doctest::Approx(0.8));   // left
  CHECK(in_box.ranges[2].distance == doctest::Approx(0.8));   // right
  CHECK(in_box.ranges[0].distance == doctest::Approx(1.25));  // back
  CHECK_THROWS_AS(ray_scan(box(2.5, 1.6), s, 4, 10.0), ParameterError);
}

TEST_CASE("visibility: entity dead ahead, occlusion and distance") {
  WorldModel w = open_world(20, 20);
  w.entities.push_back(disc("vase", {11.0, 10.0}, 0.1));
  const SliceSet slices = make_slices(2000, 8);
  const RobotState s = at(10.0, 10.0, 0.0);
  const auto v = visibility(w, s, slices);
  int idx = -1;
  REQUIRE(slice_seeing(v, "vase", &idx));
  CHECK(slices[idx].contains_column(1000, 2000));
  for (std::size_t i = 0; i < v.slices.size(); ++i)
    if (slices[i].contains_column(1000, 2000)) CHECK(size_of(v.slices[i], "vase") > 0);

  WorldModel hidden = w;
  hidden.walls.push_back({{{10.5, 5}, {10.5, 15}}});
  CHECK_FALSE(slice_seeing(visibility(hidden, s, slices), "vase"));
  WorldModel low = hidden;
  low.walls[0].opaque = false;
  CHECK(slice_seeing(visibility(low, s, slices), "vase"));

  WorldModel far = open_world(20, 20);
  far.entities.push_back(disc("vase", {12.0, 10.0}, 0.1));
  const double near_size = size_of(*slice_seeing(v, "vase"), "vase");
  const double far_size = size_of(*slice_seeing(visibility(far, s, slices), "vase"), "vase");
  const double quantum = slices.angular_width() / kDefaultRaysPerSlice;
  CHECK(std::abs(near_size / 2.0 - far_size) <= quantum);
  CHECK_THROWS_AS(visibility(w, s, slices, 4), ParameterError);
}

TEST_CASE("visibility summary invariants on the shipped worlds") {
  for (const char* name : {"basic.world", "advanced.world"}) {
    const WorldModel w = load_world(kData / "worlds" / name);
    const SliceSet slices = make_slices(2000, 8);
    std::mt19937 rng(2);
    for (int k = 0; k < 30; ++k) {
      const RobotState s = at(std::uniform_real_distribution<double>(0.4, w.bounds.max.x() - 0.4)(rng),
                              std::uniform_real_distribution<double>(0.4, w.bounds.max.y() - 0.4)(rng),
                              std::uniform_real_distribution<double>(-kPi, kPi)(rng));
      const auto v = visibility(w, s, slices);
      for (const auto& sl : v.slices) {
        double sum = 0;
        for (const auto& r : sl.regions) {
          CHECK(r.fraction >= 0.0);
          CHECK(r.fraction <= 1.0);
          sum += r.fraction;
        }
        CHECK(sum <= 1.0 + 1e-12);
        for (const auto& e : sl.entities) CHECK(e.apparent_size <= slices.angular_width() + 1e-12);
      }
    }
  }
}

TEST_CASE("removing an occluding wall never shrinks an entity") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(1.0, 9.0);
  const SliceSet slices = make_slices(2000, 8);
  for (int k = 0; k < 60; ++k) {
    WorldModel w = open_world();
    for (int i = 0; i < 4; ++i) w.entities.push_back(disc("e" + std::to_string(i), {u(rng), u(rng)}, 0.3));
    WorldModel walled = w;
    walled.walls.push_back({{{u(rng), u(rng)}, {u(rng), u(rng)}}});
    const RobotState s = at(5, 5, 0);
    const auto open = visibility(w, s, slices), blocked = visibility(walled, s, slices);
    for (std::size_t i = 0; i < slices.size(); ++i)
      for (const auto& e : blocked.slices[i].entities) CHECK(size_of(open.slices[i], e.label) >= e.apparent_size);
  }
}

TEST_CASE("oracles on the basic world with four slices") {
  const WorldModel w = load_world(kData / "worlds" / "basic.world");
  const SliceSet slices = make_slices(2000, 4);
  const RobotState s = at(1.25, 0.8, 0.0);
  const auto v = visibility(w, s, slices);
  SliceObservation obs{&slices, &v, nullptr};
  RegionOracle clip(w);
  ObjectOracle detic;

  const auto kitchen = score_slices(clip, "Go to the kitchen", obs);
  const auto top2 = top_indices(kitchen.transformed, 2);
  // slices 0 and 3 face backwards, where the kitchen is
  CHECK(std::set<int>(top2.begin(), top2.end()) == std::set<int>{0, 3});

  const auto micro_clip = score_slices(clip, "Please look at the microwave oven", obs);
  CHECK(testsupport::pearson(micro_clip.raw, kitchen.raw) > 0.5);

  const auto micro = score_slices(detic, "Please look at the microwave oven", obs);
  int micro_slice = -1;
  double best = 0;
  for (std::size_t i = 0; i < v.slices.size(); ++i)
    if (size_of(v.slices[i], "microwave oven") > best) {
      best = size_of(v.slices[i], "microwave oven");
      micro_slice = static_cast<int>(i);
    }
  CHECK(top_indices(micro.transformed, 1)[0] == micro_slice);

  for (Scorer* sc : std::initializer_list<Scorer*>{&clip, &detic}) {
    const auto p = score_slices(*sc, "See the bookshelf", obs);
    int seen = -1;
    REQUIRE(slice_seeing(v, "bookshelf", &seen));
    const int arg = top_indices(p.transformed, 1)[0];
    CHECK(size_of(v.slices[arg], "bookshelf") > 0);
  }
}

TEST_CASE("object oracle: empty slice scores 0, sentence lists labels by size") {
  ObjectOracle o;
  CHECK(o.sentence({}) == "");
  SliceVisibility sv;
  sv.entities = {{"cup", 0.05, 1.0}, {"table", 0.25, 1.0}};
  CHECK(o.sentence(sv) == "table, table, cup");
  const SliceSet slices = make_slices(400, 2);
  VisibilitySummary v{{SliceVisibility{}, sv}};
  SliceObservation obs{&slices, &v, nullptr};
  const auto raw = o.score("a cup", obs);
  CHECK(raw.values[0] == 0.0);
  CHECK(raw.values[1] > 0.0);
}

TEST_CASE("oracles: nothing visible gives a uniform profile") {
  const WorldModel w = box(3, 3);
  const SliceSet slices = make_slices(2000, 8);
  const auto v = visibility(w, at(1.5, 1.5, 0), slices);
  SliceObservation obs{&slices, &v, nullptr};
  RegionOracle clip(w);
  ObjectOracle detic;
  CHECK(score_slices(clip, "Go to the kitchen", obs).transformed == std::vector<double>(8, 1.0));
  CHECK(score_slices(detic, "Go to the kitchen", obs).transformed == std::vector<double>(8, 1.0));
  CHECK_THROWS_AS(clip.score("x", SliceObservation{&slices, nullptr, nullptr}), ScorerError);
}

TEST_CASE("oracle consistency under vocabulary permutation and region edits") {
  WorldModel w = load_world(kData / "worlds" / "basic.world");
  const SliceSet slices = make_slices(2000, 8);
  const auto v = visibility(w, at(1.25, 0.8, 0.4), slices);
  SliceObservation obs{&slices, &v, nullptr};
  RegionOracle before(w);
  WorldModel shuffled = w;
  for (auto& r : shuffled.regions) std::reverse(r.vocab.begin(), r.vocab.end());
  RegionOracle after(shuffled);
  CHECK(before.score("Go to the kitchen", obs).values == after.score("Go to the kitchen", obs).values);

  ObjectOracle detic;
  WorldModel no_regions = w;
  no_regions.regions.clear();
  const auto v2 = visibility(no_regions, at(1.25, 0.8, 0.4), slices);
  SliceObservation obs2{&slices, &v2, nullptr};
  CHECK(detic.score("See the desk with chairs", obs).values == detic.score("See the desk with chairs", obs2).values);
}
