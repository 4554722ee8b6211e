#include <doctest.h>

#include <algorithm>
#include <random>

#include "omninav/error.hpp"
#include "omninav/scoring.hpp"
#include "oracles.hpp"

using namespace omninav;

namespace {

std::vector<double> random_scores(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> s(n);
  for (auto& v : s) v = u(rng);
  return s;
}

struct FixedScorer : Scorer {
  std::vector<double> values;
  bool fail = false;
  std::string id() const override { return "fixed"; }
  RawScores score(const std::string&, const SliceObservation&) override {
    if (fail) throw ScorerError("down");
    return {values, false};
  }
};

}  // namespace

TEST_CASE("transform_scores hand example") {
  const std::vector<double> s{0.2, 0.5, 0.8, 0.5};
  const auto a = transform_scores(s);
  CHECK(a[0] == doctest::Approx(0.1));
  CHECK(a[1] == doctest::Approx(0.55));
  CHECK(a[2] == doctest::Approx(1.0));
  CHECK(a[3] == doctest::Approx(0.55));
}

TEST_CASE("transform_scores degenerate and empty input") {
  const std::vector<double> s{0.4, 0.4, 0.4};
  CHECK(transform_scores(s) == std::vector<double>{1.0, 1.0, 1.0});
  CHECK_THROWS_AS(transform_scores(std::vector<double>{}), ParameterError);
}

TEST_CASE("transform_scores properties on random vectors") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> alpha(0.01, 10.0), beta(-5.0, 5.0);
  for (int k = 0; k < 500; ++k) {
    const auto s = random_scores(rng, 2 + k % 9);
    const auto a = transform_scores(s);
    const auto ref = testsupport::reference_transform(s);
    const auto lo = std::min_element(s.begin(), s.end()) - s.begin();
    const auto hi = std::max_element(s.begin(), s.end()) - s.begin();
    CHECK(a[lo] == 0.1);
    CHECK(a[hi] == 1.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(a[i] == doctest::Approx(ref[i]).epsilon(1e-12));
      CHECK(a[i] >= 0.1);
      CHECK(a[i] <= 1.0);
      for (std::size_t j = 0; j < s.size(); ++j)
        if (s[i] <= s[j]) CHECK(a[i] <= a[j]);
    }
    const double al = alpha(rng), be = beta(rng);
    std::vector<double> t(s);
    for (auto& v : t) v = al * v + be;
    const auto at = transform_scores(t);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(at[i] - a[i]) <= 1e-12);
  }
}

TEST_CASE("fuse examples") {
  const std::vector<double> a{0.1, 1.0}, b{1.0, 0.1};
  CHECK(fuse(a, b).e == std::vector<double>{0.1, 0.1});
  const std::vector<double> ones{1.0, 1.0, 1.0}, x{0.3, 0.7, 1.0};
  CHECK(fuse(ones, x).e == x);
  const std::vector<double> low{0.1, 0.1};
  const auto f = fuse(low, low).e;
  CHECK(f[0] == doctest::Approx(0.01));
  CHECK(f[1] == doctest::Approx(0.01));
  CHECK_THROWS_AS(fuse(a, x), ParameterError);
}

TEST_CASE("fused profile stays in [0.01, 1] with a slice at or above 0.1") {
  std::mt19937 rng(8);
  for (int k = 0; k < 300; ++k) {
    const auto a = transform_scores(random_scores(rng, 8));
    const auto b = transform_scores(random_scores(rng, 8));
    const auto e = fuse(a, b).e;
    for (double v : e) {
      CHECK(v >= 0.01 - 1e-15);
      CHECK(v <= 1.0);
    }
    CHECK(*std::max_element(e.begin(), e.end()) >= 0.1);
  }
}

TEST_CASE("detection sentence examples") {
  const std::vector<Detection> d{{"table", {0, 0, 100, 50}}, {"monitor", {0, 0, 60, 50}},
                                 {"monitor", {0, 0, 56, 50}}, {"apple", {0, 0, 10, 10}}};
  CHECK(detections_to_sentence(d) == "table, monitor, monitor, apple");
  CHECK(detections_to_sentence(std::vector<Detection>{}) == "");
  const std::vector<Detection> tie{{"knife", {0, 0, 10, 10}}, {"cup", {5, 5, 20, 5}}};
  CHECK(detections_to_sentence(tie) == "knife, cup");
  const std::vector<Detection> tie_rev{tie[1], tie[0]};
  CHECK(detections_to_sentence(tie_rev) == "cup, knife");
}

TEST_CASE("detection sentence matches a brute-force stable sort") {
  std::mt19937 rng(21);
  const char* labels[] = {"cup", "knife", "table", "monitor", "apple"};
  for (int k = 0; k < 300; ++k) {
    std::vector<Detection> d;
    std::vector<testsupport::LabeledArea> ref;
    const int n = static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      const double w = 1 + rng() % 4, h = 1 + rng() % 3;  // small range forces ties
      d.push_back({labels[rng() % 5], {0, 0, w, h}});
      ref.push_back({d.back().label, w * h});
    }
    const auto s = detections_to_sentence(d);
    CHECK(s == testsupport::reference_sentence(ref));
    const auto commas = std::count(s.begin(), s.end(), ',');
    CHECK((n == 0 ? s.empty() : commas == n - 1));
  }
}

TEST_CASE("low-confidence detections are dropped") {
  const std::vector<Detection> d{{"cup", {0, 0, 10, 10}, 0.9}, {"ghost", {0, 0, 50, 50}, 0.3}};
  CHECK(detections_to_sentence(d, kDetectionConfidence) == "cup");
}

TEST_CASE("split detections by bbox centre column") {
  const SliceSet s = make_slices(2000, 8, 0.25);  // width 312.5 -> 313 columns
  // slice 3 is centred at 875 and covers [719, 1031); 800 lies in slice 3 only
  const std::vector<Detection> only3{{"a", {780, 0, 40, 10}}};
  const auto p = split_detections(only3, s);
  for (int i = 0; i < 8; ++i) CHECK(p[i].size() == (i == 3 ? 1u : 0u));
  // 1020 lies in slice 3 [719,1031) and slice 4 [969,1281)
  const std::vector<Detection> overlap{{"b", {1000, 0, 40, 10}}};
  const auto q = split_detections(overlap, s);
  CHECK(q[3].size() == 1);
  CHECK(q[4].size() == 1);
  // centre at W-1 belongs to the slice that wraps over the seam
  const SliceSet wrap = make_slices(2000, 4, 0.2);
  const std::vector<Detection> edge{{"c", {1998.5, 0, 1, 10}}};
  const auto r = split_detections(edge, wrap);
  CHECK(r[0].size() == 1);
  // a centre beyond W is taken modulo W
  const std::vector<Detection> beyond{{"d", {2090, 0, 20, 10}}};
  CHECK(split_detections(beyond, wrap)[0].size() == 1);
}

TEST_CASE("score_slices transforms and falls back") {
  const SliceSet s = make_slices(400, 4);
  SliceObservation obs{&s, nullptr, nullptr};
  FixedScorer fx;
  fx.values = {0.0, 0.5, 1.0, 0.5};
  const auto p = score_slices(fx, "x", obs);
  CHECK(p.scorer_id == "fixed");
  CHECK(p.transformed == std::vector<double>{0.1, 0.55, 1.0, 0.55});
  CHECK_FALSE(p.stale);

  fx.fail = true;
  const auto reused = score_slices(fx, "x", obs, &p);
  CHECK(reused.stale);
  CHECK(reused.transformed == p.transformed);
  const auto uniform = score_slices(fx, "x", obs);
  CHECK(uniform.stale);
  CHECK(uniform.transformed == std::vector<double>{1.0, 1.0, 1.0, 1.0});

  fx.fail = false;
  fx.values = {0.3, 0.3, 0.3, 0.3};
  CHECK(score_slices(fx, "x", obs).transformed == std::vector<double>{1.0, 1.0, 1.0, 1.0});
  fx.values = {0.3, 0.3};
  CHECK(score_slices(fx, "x", obs).stale);
}

TEST_CASE("instruction text must not be blank") {
  CHECK_THROWS_AS(Instruction::make("  \n"), ParameterError);
  CHECK(Instruction::make("Go to the kitchen", 2.0).issued_at == 2.0);
}
