#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <thread>

#include "net_clients.hpp"
#include "omninav/error.hpp"
#include "omninav/gateway.hpp"

using namespace omninav;
using namespace std::chrono_literals;
using testsupport::FrameClient;
using testsupport::StubScorer;

namespace {

const std::filesystem::path kData = OMNINAV_DATA_DIR;

RobotState make_robot() {
  RobotState r;
  r.pose = {1.25, 0.8, 0.0};
  return r;
}

struct Fixture {
  WorldModel world = load_world(kData / "worlds" / "basic.world");
  RobotState robot = make_robot();
  SliceSet slices = make_slices(2000, 8);
  VisibilitySummary vis = visibility(world, robot, slices);
  SliceObservation obs{&slices, &vis, nullptr};
  OracleScorers oracles{world};
};

std::vector<double> zeros(const nlohmann::json& req) { return std::vector<double>(req["n_split"].get<std::size_t>(), 0.0); }

}  // namespace

TEST_CASE("port resolution") {
  CHECK(resolve_port(9000, "OMNINAV_TEST_PORT", 1) == 9000);
  ::unsetenv("OMNINAV_TEST_PORT");
  CHECK(resolve_port(std::nullopt, "OMNINAV_TEST_PORT", 7471) == 7471);
  ::setenv("OMNINAV_TEST_PORT", "8123", 1);
  CHECK(resolve_port(std::nullopt, "OMNINAV_TEST_PORT", 7471) == 8123);
  CHECK(resolve_port(-1, "OMNINAV_TEST_PORT", 7471) == 8123);
  ::setenv("OMNINAV_TEST_PORT", "80x", 1);
  CHECK_THROWS_AS(resolve_port(std::nullopt, "OMNINAV_TEST_PORT", 7471), ParameterError);
  ::unsetenv("OMNINAV_TEST_PORT");
  CHECK_THROWS_AS(resolve_port(70000, nullptr, 1), ParameterError);
}

TEST_CASE("all-zero remote scores rescale to all ones") {
  Fixture f;
  ScorerEndpoint ep(0);
  StubScorer stub(ep.port(), "clip", zeros);
  REQUIRE(ep.wait_for_scorer("clip", 2s));
  RemoteScorer remote(ep, "clip", &f.oracles.clip);
  const RawScores raw = remote.score("Go to the kitchen", f.obs);
  CHECK_FALSE(raw.stale);
  CHECK(raw.values == std::vector<double>(8, 0.0));
  CHECK(transform_scores(raw.values) == std::vector<double>(8, 1.0));
  CHECK(remote.remote_count() == 1);
  CHECK(stub.answered() == 1);
}

TEST_CASE("a slow scorer falls back to the oracle and is flagged stale") {
  Fixture f;
  ScorerEndpoint ep(0);
  StubScorer stub(ep.port(), "clip", zeros, 200ms);
  REQUIRE(ep.wait_for_scorer("clip", 2s));
  RemoteScorer remote(ep, "clip", &f.oracles.clip);
  const auto t0 = std::chrono::steady_clock::now();
  const RawScores raw = remote.score("Go to the kitchen", f.obs);
  CHECK(std::chrono::steady_clock::now() - t0 < 180ms);
  CHECK(raw.stale);
  CHECK(raw.values == f.oracles.clip.score("Go to the kitchen", f.obs).values);
  CHECK(remote.fallback_count() == 1);
}

TEST_CASE("a missing scorer falls back without waiting") {
  Fixture f;
  ScorerEndpoint ep(0);
  RemoteScorer remote(ep, "detic", &f.oracles.detic);
  const RawScores raw = remote.score("cup", f.obs);
  CHECK(raw.stale);
  RemoteScorer bare(ep, "detic", nullptr);
  CHECK_THROWS_AS(bare.score("cup", f.obs), ScorerError);
}

TEST_CASE("requests are routed by scorer id") {
  Fixture f;
  ScorerEndpoint ep(0);
  StubScorer a(ep.port(), "clip", [](const nlohmann::json& r) { return std::vector<double>(r["n_split"].get<std::size_t>(), 1.0); });
  StubScorer b(ep.port(), "detic", [](const nlohmann::json& r) {
    std::vector<double> v(r["n_split"].get<std::size_t>(), 0.0);
    v[2] = 5;
    return v;
  });
  REQUIRE(ep.wait_for_scorer("clip", 2s));
  REQUIRE(ep.wait_for_scorer("detic", 2s));
  RemoteScorer ra(ep, "clip", nullptr), rb(ep, "detic", nullptr);
  for (int i = 0; i < 5; ++i) {
    CHECK(ra.score("x", f.obs).values == std::vector<double>(8, 1.0));
    CHECK(rb.score("x", f.obs).values[2] == 5.0);
  }
  CHECK(a.answered() == 5);
  CHECK(b.answered() == 5);
}

TEST_CASE("wrong-length answers fall back") {
  Fixture f;
  ScorerEndpoint ep(0);
  StubScorer stub(ep.port(), "clip", [](const nlohmann::json&) { return std::vector<double>{1, 2}; });
  REQUIRE(ep.wait_for_scorer("clip", 2s));
  RemoteScorer remote(ep, "clip", &f.oracles.clip);
  CHECK(remote.score("Go to the kitchen", f.obs).stale);
}

TEST_CASE("version mismatch gets an error frame and a close") {
  ScorerEndpoint ep(0);
  FrameClient c(ep.port());
  c.send_json({{"type", "hello"}, {"v", 2}, {"scorer_id", "clip"}});
  const auto reply = c.read_frame(2s);
  REQUIRE(reply);
  const auto j = nlohmann::json::parse(*reply);
  CHECK(j["type"] == "error");
  CHECK(j["code"] == "version");
  CHECK(c.wait_closed(2s));
  CHECK(ep.scorers().empty());
}

TEST_CASE("malformed frames get an error frame and a close") {
  ScorerEndpoint ep(0);
  {
    FrameClient c(ep.port());
    c.send_raw(testsupport::frame("{not json"));
    const auto reply = c.read_frame(2s);
    REQUIRE(reply);
    CHECK(nlohmann::json::parse(*reply)["code"] == "bad_frame");
    CHECK(c.wait_closed(2s));
  }
  {
    FrameClient c(ep.port());
    c.send_json({{"type", "score_resp"}, {"id", 1}, {"scores", {1}}});
    const auto reply = c.read_frame(2s);
    REQUIRE(reply);
    CHECK(nlohmann::json::parse(*reply)["code"] == "bad_request");
    CHECK(c.wait_closed(2s));
  }
  {
    FrameClient c(ep.port());
    c.send_raw(std::string("\xff\xff\xff\xff", 4));
    const auto reply = c.read_frame(2s);
    REQUIRE(reply);
    CHECK(nlohmann::json::parse(*reply)["code"] == "bad_frame");
    CHECK(c.wait_closed(2s));
  }
}

TEST_CASE("the gateway answers hello and a reconnect replaces the scorer") {
  Fixture f;
  ScorerEndpoint ep(0);
  FrameClient old(ep.port());
  old.send_json({{"type", "hello"}, {"v", 1}, {"scorer_id", "clip"}});
  const auto reply = old.read_frame(2s);
  REQUIRE(reply);
  CHECK(nlohmann::json::parse(*reply) == nlohmann::json{{"type", "hello"}, {"v", 1}});
  REQUIRE(ep.wait_for_scorer("clip", 2s));

  StubScorer stub(ep.port(), "clip", zeros);
  RemoteScorer remote(ep, "clip", &f.oracles.clip);
  for (int i = 0; i < 100 && stub.answered() == 0; ++i) {
    std::this_thread::sleep_for(10ms);
    remote.score("x", f.obs);
  }
  CHECK(stub.answered() >= 1);
  CHECK(ep.scorers() == std::vector<std::string>{"clip"});
}
