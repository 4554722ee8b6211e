#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "omninav/control.hpp"
#include "omninav/error.hpp"
#include "oracles.hpp"

using namespace omninav;
constexpr double kPi = std::numbers::pi;

namespace {

std::vector<std::array<double, 2>> ring(int n, double offset = 0.0) {
  std::vector<std::array<double, 2>> d;
  for (int i = 0; i < n; ++i) {
    const double a = offset + kPi - 2 * kPi * (i + 0.5) / n;
    d.push_back({std::cos(a), std::sin(a)});
  }
  return d;
}

RangeScan scan_with(std::vector<RangeReading> r) { return {std::move(r), 10.0}; }

}  // namespace

TEST_CASE("single contributor takes the argmax direction") {
  const std::vector<double> e{0.2, 0.9, 0.4, 0.1};
  const auto dirs = ring(4);
  const auto d = select_direction(e, dirs, 1);
  CHECK(d.b[0] == doctest::Approx(dirs[1][0]));
  CHECK(d.b[1] == doctest::Approx(dirs[1][1]));
  REQUIRE(d.contributors.size() == 1);
  CHECK(d.contributors[0] == Contributor{1, 1.0});
}

TEST_CASE("two contributors blend 2:1") {
  const std::vector<double> e{0.9, 0.2, 0.7, 0.1};
  const std::vector<std::array<double, 2>> dirs{{1, 0}, {0, -1}, {0, 1}, {-1, 0}};
  const auto d = select_direction(e, dirs, 2);
  CHECK(d.b[0] == doctest::Approx(2.0 / 3));
  CHECK(d.b[1] == doctest::Approx(1.0 / 3));
  CHECK(d.theta == doctest::Approx(0.4636).epsilon(1e-4));
  CHECK(d.contributors[0].weight == 2.0);
  CHECK(d.contributors[1].weight == 1.0);
}

TEST_CASE("ties go to the lower slice index") {
  const std::vector<double> e{0.5, 0.5};
  const std::vector<std::array<double, 2>> dirs{{1, 0}, {-1, 0}};
  const auto d = select_direction(e, dirs, 2);
  CHECK(d.b[0] == doctest::Approx(1.0 / 3));
  CHECK(d.b[1] == doctest::Approx(0.0));
  CHECK(d.contributors[0].slice == 0);
}

TEST_CASE("cancelling blend keeps the previous heading") {
  const std::vector<double> e{0.5, 0.5, 0.5};
  // weights 3,2,1 on directions chosen to cancel exactly
  const std::vector<std::array<double, 2>> dirs{{1, 0}, {-1, 0}, {-1, 0}};
  const auto d = select_direction(e, dirs, 3, 0.7);
  CHECK(std::hypot(d.b[0], d.b[1]) < kCancelNorm);
  CHECK(d.theta == 0.7);
}

TEST_CASE("n_extract out of range is rejected") {
  const std::vector<double> e{0.1, 0.2};
  const auto dirs = ring(2);
  CHECK_THROWS_AS(select_direction(e, dirs, 0), ParameterError);
  CHECK_THROWS_AS(select_direction(e, dirs, 3), ParameterError);
  CHECK_THROWS_AS(select_direction(e, ring(3), 1), ParameterError);
}

TEST_CASE("selection equals the brute-force subset oracle") {
  std::mt19937 rng(99);
  for (int k = 0; k < 2000; ++k) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const int m = 1 + static_cast<int>(rng() % std::min(n, 4));
    std::vector<double> e(n);
    // coarse levels force plenty of ties
    for (auto& v : e) v = (k % 2) ? (1 + rng() % 3) / 3.0 : std::uniform_real_distribution<double>(0.01, 1)(rng);
    const auto dirs = ring(n);
    const auto d = select_direction(e, dirs, m);
    const auto want = testsupport::brute_force_top(e, m);
    REQUIRE(d.contributors.size() == want.size());
    for (int j = 0; j < m; ++j) {
      CHECK(d.contributors[j].slice == want[j]);
      CHECK(d.contributors[j].weight == m - j);
    }
    const auto b = testsupport::reference_blend(want, dirs);
    CHECK(d.b[0] == doctest::Approx(b[0]));
    CHECK(d.b[1] == doctest::Approx(b[1]));
    for (std::size_t j = 1; j < d.contributors.size(); ++j) CHECK(d.contributors[j].weight < d.contributors[j - 1].weight);
  }
}

TEST_CASE("rotating every slice direction rotates b and theta") {
  std::mt19937 rng(4);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> e(8);
    for (auto& v : e) v = std::uniform_real_distribution<double>(0.01, 1)(rng);
    const double rho = std::uniform_real_distribution<double>(-kPi, kPi)(rng);
    const auto a = select_direction(e, ring(8), 2);
    const auto b = select_direction(e, ring(8, rho), 2);
    CHECK(b.contributors == a.contributors);
    CHECK(std::abs(wrap_angle(b.theta - a.theta - rho)) < 1e-9);
    CHECK(b.b[0] == doctest::Approx(std::cos(rho) * a.b[0] - std::sin(rho) * a.b[1]));
  }
}

TEST_CASE("diff drive examples") {
  DirectionCommand d;
  d.theta = 0.0;
  auto v = diff_drive_command(d, 0.5, 0.6);
  CHECK(v.linear == 1.0);
  CHECK(v.rotate == 0.0);
  d.theta = 0.3;
  v = diff_drive_command(d, 0.5, 0.6);
  CHECK(v.linear == 1.0);
  CHECK(v.rotate == doctest::Approx(0.15));
  d.theta = kPi / 2;
  v = diff_drive_command(d, 0.5, 0.6);
  CHECK(v.linear == 0.0);
  CHECK(v.rotate == doctest::Approx(0.785).epsilon(1e-3));
}

TEST_CASE("diff drive symmetry") {
  for (double t = -kPi; t <= kPi; t += 0.0137) {
    DirectionCommand p, n;
    p.theta = t;
    n.theta = -t;
    const auto vp = diff_drive_command(p, 0.5, 0.6), vn = diff_drive_command(n, 0.5, 0.6);
    CHECK(vp.rotate == -vn.rotate);
    CHECK(vp.linear == vn.linear);
  }
}

TEST_CASE("omni command normalises b") {
  DirectionCommand d;
  d.b = {1, 0};
  CHECK(omni_command(d, 1.0) == std::array<double, 2>{1.0, 0.0});
  d.b = {2.0 / 3, 1.0 / 3};
  const auto v = omni_command(d, 1.0);
  CHECK(v[0] == doctest::Approx(0.894).epsilon(1e-3));
  CHECK(v[1] == doctest::Approx(0.447).epsilon(1e-3));
  d.b = {1e-9, 0};
  CHECK(omni_command(d, 1.0) == std::array<double, 2>{0.0, 0.0});
}

TEST_CASE("obstacle gate") {
  DirectionCommand d;
  d.theta = 0.0;
  const VelocityCommand v{1.0, 0.2, false};
  auto g = obstacle_gate(v, d, scan_with({{0.0, 0.2}, {kPi / 2, 5.0}}), 0.4, 0.5);
  CHECK(g.linear == 0.0);
  CHECK(g.gated);
  CHECK(g.rotate == 0.2);
  g = obstacle_gate(v, d, scan_with({{-kPi, 0.1}, {0.0, 3.0}}), 0.4, 0.5);
  CHECK(g.linear == 1.0);
  CHECK_FALSE(g.gated);
  g = obstacle_gate(v, d, scan_with({}), 0.4, 0.5);
  CHECK(g.linear == 0.0);
  CHECK(g.gated);
  CHECK(g.rotate == 0.2);
  // cone edges wrap around +-pi
  d.theta = kPi - 0.1;
  g = obstacle_gate(v, d, scan_with({{-kPi + 0.2, 0.1}}), 0.4, 0.5);
  CHECK(g.gated);
  CHECK_THROWS_AS(obstacle_gate(v, d, scan_with({}), 0.0, 0.5), ParameterError);
}

TEST_CASE("gate never increases speed and gated implies stopped") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> ang(-kPi, kPi), dist(0.05, 3.0);
  for (int k = 0; k < 500; ++k) {
    std::vector<RangeReading> r;
    for (int i = 0; i < 16; ++i) r.push_back({ang(rng), dist(rng)});
    DirectionCommand d;
    d.theta = ang(rng);
    const VelocityCommand v{k % 2 ? 1.0 : 0.0, 0.3, false};
    const auto g = obstacle_gate(v, d, scan_with(r), 0.4, 0.5);
    CHECK(std::abs(g.linear) <= std::abs(v.linear));
    if (g.gated) CHECK(g.linear == 0.0);
  }
}
