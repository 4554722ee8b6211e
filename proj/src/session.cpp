#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <csignal>
#include <deque>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "omninav/error.hpp"
#include "omninav/gateway.hpp"
#include "omninav/harness.hpp"

namespace omninav {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using asio::ip::tcp;

// ---------------------------------------------------------------- SessionCore

SessionCore::SessionCore(WorldModel world, Pose origin, SimConfig config, std::string instruction,
                         Scorer* clip, Scorer* detic)
    : sim_(std::move(world), origin, config, clip, detic), origin_(origin), instruction_(std::move(instruction)) {}

wire::Ack SessionCore::apply(const wire::Command& command) {
  wire::Ack ack{command.id, command.kind, true, ""};
  switch (command.kind) {
    case wire::CommandKind::kSetInstruction:
      if (command.text.find_first_not_of(" \t\r\n") == std::string::npos) {
        ack.ok = false;
        ack.message = "instruction is empty";
      } else {
        instruction_ = command.text;
      }
      break;
    case wire::CommandKind::kPause: paused_ = true; break;
    case wire::CommandKind::kResume: paused_ = false; break;
    case wire::CommandKind::kReset:
      sim_.reset_pose(origin_);
      hold_ = true;
      break;
    case wire::CommandKind::kSetStrategy:
      try {
        sim_.set_strategy(parse_strategy(command.strategy));
      } catch (const Error& err) {
        ack.ok = false;
        ack.message = err.what();
      }
      break;
  }
  return ack;
}

wire::Snapshot SessionCore::snapshot_of(const TickRecord* rec) const {
  wire::Snapshot s;
  s.t = sim_.time();
  s.pose = sim_.robot().pose;
  s.paused = paused_;
  s.instruction = instruction_;
  s.strategy = to_string(sim_.config().reflex.strategy);
  if (rec) {
    s.e = rec->e;
    for (const auto* p : {&rec->clip, &rec->detic}) {
      if (*p) s.scorers.push_back({(*p)->scorer_id, (*p)->transformed, (*p)->stale});
    }
    s.theta = rec->direction.theta;
    s.linear = rec->velocity.linear;
    s.rotate = rec->velocity.rotate;
    s.gated = rec->velocity.gated;
    s.collision = rec->collision;
    s.contributors = rec->direction.contributors;
  } else if (last_) {
    s.e = last_->e;
    s.scorers = last_->scorers;
    s.theta = last_->theta;
    s.contributors = last_->contributors;
  }
  return s;
}

wire::Snapshot SessionCore::step() {
  const bool hold = std::exchange(hold_, false);
  if (paused_ || hold || instruction_.empty()) {
    last_ = snapshot_of(nullptr);
    return *last_;
  }
  log_.push_back(sim_.tick(instruction_));
  last_ = snapshot_of(&log_.back());
  return *last_;
}

wire::SessionHello SessionCore::hello() const {
  wire::SessionHello h;
  h.world = nlohmann::json::parse(dump_world(sim_.world()));
  h.n_split = static_cast<int>(sim_.slices().size());
  h.instruction = instruction_;
  h.strategy = to_string(sim_.config().reflex.strategy);
  h.origin = origin_;
  return h;
}

// -------------------------------------------------------------- SessionServer

namespace {

class Observer;

}  // namespace

struct SessionServer::Impl {
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::thread thread;
  std::uint16_t port = 0;

  // io thread only
  std::map<std::uint64_t, std::weak_ptr<Observer>> observers;
  std::uint64_t next_observer = 1;

  mutable std::mutex mutex;  // guards the fields below
  std::string hello;
  std::vector<Inbound> commands;
  std::atomic<std::size_t> observer_count{0};
  std::atomic<long> dropped{0};

  void accept();
};

namespace {

class Observer : public std::enable_shared_from_this<Observer> {
 public:
  Observer(tcp::socket socket, SessionServer::Impl& owner, std::uint64_t id)
      : ws_(std::move(socket)), owner_(owner), id_(id) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->finish();
      {
        std::lock_guard lock(self->owner_.mutex);
        if (!self->owner_.hello.empty()) self->queue_.push_back(self->owner_.hello);
      }
      self->owner_.observers[self->id_] = self;
      ++self->owner_.observer_count;
      self->open_ = true;
      self->pump();
      self->read();
    });
  }

  void enqueue(std::string message) {
    queue_.push_back(std::move(message));
    pump();
  }

  void offer_snapshot(const std::shared_ptr<const std::string>& snapshot) {
    if (latest_) ++owner_.dropped;
    latest_ = snapshot;
    pump();
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      try {
        const auto message = wire::parse_session_message(text);
        if (const auto* command = std::get_if<wire::Command>(&message)) {
          std::lock_guard lock(self->owner_.mutex);
          self->owner_.commands.push_back({*command, self->id_});
        } else {
          self->enqueue(wire::serialize(wire::ErrorMessage{"unknown_type", "observers may only send commands", std::nullopt}));
        }
      } catch (const ProtocolError& err) {
        self->enqueue(wire::serialize(wire::ErrorMessage{"bad_command", err.what(), std::nullopt}));
      }
      self->read();
    });
  }

  void pump() {
    if (!open_ || writing_) return;
    if (!queue_.empty()) {
      current_ = std::make_shared<const std::string>(std::move(queue_.front()));
      queue_.pop_front();
    } else if (latest_) {
      current_ = std::move(latest_);
      latest_.reset();
    } else {
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(*current_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->finish();
      self->pump();
    });
  }

  void finish() {
    if (!open_) return;
    open_ = false;
    owner_.observers.erase(id_);
    --owner_.observer_count;
  }

  websocket::stream<beast::tcp_stream> ws_;
  SessionServer::Impl& owner_;
  std::uint64_t id_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::shared_ptr<const std::string> latest_;
  std::shared_ptr<const std::string> current_;
  bool writing_ = false;
  bool open_ = false;
};

}  // namespace

void SessionServer::Impl::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    socket.set_option(tcp::no_delay(true));
    std::make_shared<Observer>(std::move(socket), *this, next_observer++)->start();
    accept();
  });
}

SessionServer::SessionServer(std::uint16_t port, const std::string& bind_address)
    : impl_(std::make_shared<Impl>()) {
  try {
    const tcp::endpoint ep(asio::ip::make_address(bind_address), port);
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
    impl_->port = impl_->acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& err) {
    throw IoError("session endpoint cannot listen on port " + std::to_string(port) + ": " + err.what());
  }
  impl_->accept();
  impl_->thread = std::thread([impl = impl_.get()] { impl->io.run(); });
}

SessionServer::~SessionServer() {
  asio::post(impl_->io, [impl = impl_.get()] {
    beast::error_code ignored;
    impl->acceptor.close(ignored);
    impl->io.stop();
  });
  impl_->thread.join();
}

std::uint16_t SessionServer::port() const { return impl_->port; }
std::size_t SessionServer::observer_count() const { return impl_->observer_count.load(); }
long SessionServer::dropped_snapshots() const { return impl_->dropped.load(); }

void SessionServer::set_hello(std::string hello_json) {
  std::lock_guard lock(impl_->mutex);
  impl_->hello = std::move(hello_json);
}

void SessionServer::broadcast(std::string snapshot_json) {
  auto shared = std::make_shared<const std::string>(std::move(snapshot_json));
  asio::post(impl_->io, [impl = impl_.get(), shared] {
    for (auto& [id, weak] : impl->observers) {
      if (auto o = weak.lock()) o->offer_snapshot(shared);
    }
  });
}

std::vector<SessionServer::Inbound> SessionServer::drain_commands() {
  std::lock_guard lock(impl_->mutex);
  return std::exchange(impl_->commands, {});
}

void SessionServer::send(std::uint64_t observer, std::string message_json) {
  asio::post(impl_->io, [impl = impl_.get(), observer, message = std::move(message_json)]() mutable {
    const auto it = impl->observers.find(observer);
    if (it == impl->observers.end()) return;
    if (auto o = it->second.lock()) o->enqueue(std::move(message));
  });
}

// ------------------------------------------------------------------ the loop

LoopStats run_session_loop(SessionCore& core, SessionServer& server, std::stop_token stop) {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(core.simulation().config().reflex.tick_s));
  LoopStats stats;
  server.set_hello(wire::serialize(core.hello()));
  auto next = clock::now();
  auto previous = next;
  while (!stop.stop_requested()) {
    bool changed = false;
    for (auto& in : server.drain_commands()) {
      server.send(in.observer, wire::serialize(core.apply(in.command)));
      changed = true;
    }
    if (changed) server.set_hello(wire::serialize(core.hello()));
    server.broadcast(wire::serialize(core.step()));
    ++stats.ticks;

    next += period;
    std::this_thread::sleep_until(next);
    const auto now = clock::now();
    if (stats.ticks > 1) {
      const double err = std::abs(std::chrono::duration<double>(now - previous - period).count());
      stats.max_period_error = std::max(stats.max_period_error, err);
    }
    previous = now;
  }
  return stats;
}

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

}  // namespace

int serve_main(const std::string& world_path, const std::string& scenario_path, int session_port,
               double duration_s, int scorer_port) {
  WorldModel world;
  Pose origin;
  SimConfig config;
  std::string instruction;
  if (!scenario_path.empty()) {
    const Scenario scenario = load_scenario(scenario_path);
    world = scenario.world;
    origin = scenario.origin;
    config = scenario.sim;
    instruction = *scenario.instruction_at(0.0);
  } else {
    world = load_world(world_path);
    origin = {world.bounds.min.x() + world.bounds.width() / 2.0,
              world.bounds.min.y() + world.bounds.height() / 2.0, 0.0};
  }

  OracleScorers oracles(world);
  ScorerEndpoint endpoint(resolve_port(scorer_port >= 0 ? std::optional<int>(scorer_port) : std::nullopt,
                                       "OMNINAV_SCORER_PORT", wire::kDefaultScorerPort));
  RemoteScorer clip(endpoint, "clip", &oracles.clip);
  RemoteScorer detic(endpoint, "detic", &oracles.detic);
  SessionCore core(world, origin, config, instruction, &clip, &detic);
  SessionServer server(resolve_port(session_port >= 0 ? std::optional<int>(session_port) : std::nullopt,
                                    "OMNINAV_SESSION_PORT", wire::kDefaultSessionPort));
  std::cout << "session on ws://127.0.0.1:" << server.port() << ", scorers on tcp port "
            << endpoint.port() << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::jthread loop([&](std::stop_token st) { run_session_loop(core, server, st); });
  const auto start = std::chrono::steady_clock::now();
  while (!g_interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (duration_s > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= duration_s) {
      break;
    }
  }
  loop.request_stop();
  loop.join();
  std::cout << "stopped at t=" << core.simulation().time() << " s" << std::endl;
  return 0;
}

}  // namespace omninav
