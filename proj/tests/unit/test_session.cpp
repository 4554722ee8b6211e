#include <doctest.h>

#include <filesystem>
#include <thread>

#include "net_clients.hpp"
#include "omninav/gateway.hpp"

using namespace omninav;
using namespace std::chrono_literals;
using nlohmann::json;
using testsupport::WsClient;

namespace {

const std::filesystem::path kData = OMNINAV_DATA_DIR;
const Pose kOrigin{1.25, 0.8, 0.0};

struct Core {
  WorldModel world = load_world(kData / "worlds" / "basic.world");
  OracleScorers oracles{world};
  SessionCore core;
  explicit Core(std::string instruction = "Go to the kitchen")
      : core(world, kOrigin, SimConfig{}, std::move(instruction), &oracles.clip, &oracles.detic) {}
};

wire::Command cmd(std::uint64_t id, wire::CommandKind k, std::string text = "", std::string strategy = "") {
  return {id, k, std::move(text), std::move(strategy)};
}

bool is(const json& j, const char* type) { return j.value("type", "") == type; }

}  // namespace

TEST_CASE("session core advances only while running") {
  Core c;
  const auto s1 = c.core.step();
  CHECK(s1.t == doctest::Approx(0.1));
  CHECK(s1.e.size() == 8);
  CHECK(s1.scorers.size() == 2);

  CHECK(c.core.apply(cmd(1, wire::CommandKind::kPause)).ok);
  const auto p1 = c.core.step();
  const auto p2 = c.core.step();
  CHECK(p1.paused);
  CHECK(p1.t == s1.t);
  CHECK(p2.t == s1.t);
  CHECK(p2.pose == s1.pose);
  CHECK(p2.e == s1.e);
  CHECK(c.core.apply(cmd(2, wire::CommandKind::kResume)).ok);
  CHECK(c.core.step().t == doctest::Approx(0.2));
  CHECK(c.core.log().size() == 2);
}

TEST_CASE("set_instruction takes effect on the next tick") {
  Core c;
  c.core.step();
  const auto ack = c.core.apply(cmd(5, wire::CommandKind::kSetInstruction, "Please look at the microwave oven"));
  CHECK(ack == wire::Ack{5, wire::CommandKind::kSetInstruction, true, ""});
  c.core.step();
  CHECK(c.core.log().back().instruction == "Please look at the microwave oven");
  const auto bad = c.core.apply(cmd(6, wire::CommandKind::kSetInstruction, "  "));
  CHECK_FALSE(bad.ok);
  CHECK(c.core.instruction() == "Please look at the microwave oven");
}

TEST_CASE("reset returns to the origin and holds one tick") {
  Core c;
  for (int i = 0; i < 20; ++i) c.core.step();
  CHECK_FALSE(c.core.simulation().robot().pose == kOrigin);
  const double t = c.core.simulation().time();
  c.core.apply(cmd(1, wire::CommandKind::kReset));
  const auto held = c.core.step();
  CHECK(held.pose == kOrigin);
  CHECK(held.t == t);
  CHECK(c.core.step().t == doctest::Approx(t + 0.1));
}

TEST_CASE("no instruction means no motion") {
  Core c("");
  CHECK(c.core.step().t == 0.0);
  CHECK(c.core.log().empty());
  c.core.apply(cmd(1, wire::CommandKind::kSetInstruction, "Go to the kitchen"));
  CHECK(c.core.step().t == doctest::Approx(0.1));
}

TEST_CASE("set_strategy validates its argument") {
  Core c;
  CHECK(c.core.apply(cmd(1, wire::CommandKind::kSetStrategy, "", "clip")).ok);
  CHECK(c.core.step().scorers.size() == 1);
  const auto bad = c.core.apply(cmd(2, wire::CommandKind::kSetStrategy, "", "radar"));
  CHECK_FALSE(bad.ok);
  CHECK_FALSE(bad.message.empty());
  CHECK(c.core.hello().strategy == "clip");
}

TEST_CASE("hello carries the world and the origin") {
  Core c;
  const auto h = c.core.hello();
  CHECK(h.n_split == 8);
  CHECK(h.origin == kOrigin);
  CHECK(h.world.contains("walls"));
}

TEST_CASE("observers over WebSocket") {
  Core c;
  SessionServer server(0);
  server.set_hello(wire::serialize(c.core.hello()));
  std::stop_source stop;
  std::thread loop([&] { run_session_loop(c.core, server, stop.get_token()); });

  WsClient a(server.port());
  const auto hello = a.read(2s);
  REQUIRE(hello);
  CHECK(is(*hello, "hello"));
  CHECK((*hello)["v"] == 1);

  a.send({{"type", "command"}, {"id", 11}, {"command", "pause"}});
  auto ack = a.read_until([](const json& j) { return is(j, "ack"); }, 2s);
  REQUIRE(ack);
  CHECK((*ack)["id"] == 11);
  CHECK((*ack)["ok"] == true);
  const auto paused = a.read_until([](const json& j) { return is(j, "snapshot") && j["paused"] == true; }, 2s);
  REQUIRE(paused);
  const auto later = a.read_until([](const json& j) { return is(j, "snapshot"); }, 2s);
  REQUIRE(later);
  CHECK((*later)["t"] == (*paused)["t"]);

  a.send({{"type", "command"}, {"id", 12}, {"command", "set_instruction"}, {"text", "See the desk with chairs"}});
  a.send({{"type", "command"}, {"id", 13}, {"command", "resume"}});
  int acks = 0;
  std::optional<json> moving;
  const auto deadline = std::chrono::steady_clock::now() + 3s;
  while (std::chrono::steady_clock::now() < deadline && !(acks == 2 && moving)) {
    const auto m = a.read(500ms);
    if (!m) continue;
    if (is(*m, "ack")) ++acks;
    if (is(*m, "snapshot") && (*m)["paused"] == false && (*m)["t"] > (*paused)["t"]) moving = m;
  }
  CHECK(acks == 2);
  REQUIRE(moving);
  CHECK((*moving)["instruction"] == "See the desk with chairs");

  a.send({{"type", "command"}, {"id", 14}, {"command", "reset"}});
  const auto reset = a.read_until([](const json& j) {
    return is(j, "snapshot") && j["pose"]["x"] == 1.25 && j["pose"]["y"] == 0.8;
  }, 2s);
  CHECK(reset);

  a.send({{"type", "command"}, {"id", 15}, {"command", "fly"}});
  const auto err = a.read_until([](const json& j) { return is(j, "error"); }, 2s);
  REQUIRE(err);
  CHECK((*err)["code"] == "bad_command");

  // a late observer gets a hello reflecting the current instruction
  WsClient b(server.port());
  const auto hb = b.read(2s);
  REQUIRE(hb);
  CHECK((*hb)["instruction"] == "See the desk with chairs");

  stop.request_stop();
  loop.join();
}

TEST_CASE("the loop keeps its period with four observers") {
  Core c;
  SessionServer server(0);
  std::vector<std::unique_ptr<WsClient>> clients;
  for (int i = 0; i < 4; ++i) clients.push_back(std::make_unique<WsClient>(server.port()));
  for (int i = 0; i < 200 && server.observer_count() < 4; ++i) std::this_thread::sleep_for(10ms);
  REQUIRE(server.observer_count() == 4);
  std::stop_source stop;
  LoopStats stats;
  std::thread loop([&] { stats = run_session_loop(c.core, server, stop.get_token()); });
  std::this_thread::sleep_for(3s);
  stop.request_stop();
  loop.join();
  CHECK(stats.ticks >= 29);
  CHECK(stats.max_period_error <= 0.010);
  for (auto& cl : clients) {
    const auto s = cl->read_until([](const json& j) { return is(j, "snapshot"); }, 1s);
    CHECK(s);
  }
}

TEST_CASE("a slow observer loses snapshots but not acks") {
  SessionServer server(0);
  server.set_hello(R"({"type":"hello","v":1})");
  WsClient a(server.port());
  REQUIRE(a.read(2s));
  const std::string pad(100000, 'x');
  for (int i = 0; i < 300; ++i) {
    server.broadcast(json{{"type", "snapshot"}, {"seq", i}, {"pad", pad}}.dump());
    if (i == 150) server.send(1, R"({"type":"ack","id":99,"command":"pause","ok":true})");
  }
  bool got_ack = false;
  int last = -1;
  const auto deadline = std::chrono::steady_clock::now() + 10s;
  while (std::chrono::steady_clock::now() < deadline && last != 299) {
    const auto m = a.read(1s);
    if (!m) continue;
    if (is(*m, "ack")) got_ack = true;
    if (is(*m, "snapshot")) {
      CHECK((*m)["seq"].get<int>() > last);
      last = (*m)["seq"];
    }
  }
  CHECK(got_ack);
  CHECK(last == 299);
  CHECK(server.dropped_snapshots() > 0);
}
