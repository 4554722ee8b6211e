#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "omninav/protocol.hpp"
#include "omninav/simulation.hpp"

namespace omninav {

/// Port from the command line if given, else from the environment variable,
/// else the default. Throws ParameterError for an unusable value.
std::uint16_t resolve_port(std::optional<int> cli, const char* env_var, std::uint16_t fallback);

/// TCP listener that external scorers connect to. Each connection opens with
/// a hello naming its scorer id; a later connection with the same id replaces
/// the earlier one. Runs its own I/O thread.
class ScorerEndpoint {
 public:
  explicit ScorerEndpoint(std::uint16_t port = wire::kDefaultScorerPort,
                          const std::string& bind_address = "127.0.0.1");
  ~ScorerEndpoint();
  ScorerEndpoint(const ScorerEndpoint&) = delete;
  ScorerEndpoint& operator=(const ScorerEndpoint&) = delete;

  std::uint16_t port() const;
  std::vector<std::string> scorers() const;
  bool wait_for_scorer(const std::string& scorer_id, std::chrono::milliseconds timeout) const;

  /// Sends `request` (its id is replaced by a fresh one) and waits for the
  /// matching response. Empty on timeout, disconnect or an error reply.
  std::optional<wire::ScoreResponse> request(const std::string& scorer_id, wire::ScoreRequest request,
                                             std::chrono::milliseconds timeout);

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

/// Scorer backed by a remote process. Falls back to `fallback` (results
/// flagged stale) when the remote side is absent, slow or answers badly.
class RemoteScorer : public Scorer {
 public:
  RemoteScorer(ScorerEndpoint& endpoint, std::string scorer_id, Scorer* fallback,
               std::chrono::milliseconds timeout = std::chrono::milliseconds(100));
  std::string id() const override { return id_; }
  RawScores score(const std::string& instruction, const SliceObservation& obs) override;

  long remote_count() const noexcept { return remote_; }
  long fallback_count() const noexcept { return fallback_count_; }

 private:
  ScorerEndpoint& endpoint_;
  std::string id_;
  Scorer* fallback_;
  std::chrono::milliseconds timeout_;
  long remote_ = 0;
  long fallback_count_ = 0;
};

/// The simulation as seen by observers: applies commands and produces snapshots.
/// No networking; driven by the session loop.
class SessionCore {
 public:
  SessionCore(WorldModel world, Pose origin, SimConfig config, std::string instruction,
              Scorer* clip, Scorer* detic);

  wire::Ack apply(const wire::Command& command);
  /// One control tick. The robot holds still while paused, without an
  /// instruction, or right after a reset; `t` then does not advance.
  wire::Snapshot step();
  wire::SessionHello hello() const;

  const std::vector<TickRecord>& log() const noexcept { return log_; }
  const Simulation& simulation() const noexcept { return sim_; }
  bool paused() const noexcept { return paused_; }
  const std::string& instruction() const noexcept { return instruction_; }

 private:
  wire::Snapshot snapshot_of(const TickRecord* rec) const;

  Simulation sim_;
  Pose origin_;
  std::string instruction_;
  bool paused_ = false;
  bool hold_ = false;
  std::vector<TickRecord> log_;
  std::optional<wire::Snapshot> last_;
};

/// WebSocket endpoint for observers. Snapshots go through a latest-value slot
/// per observer, so a slow observer loses snapshots instead of stalling the
/// loop; hello, acks and errors are queued and always delivered.
class SessionServer {
 public:
  explicit SessionServer(std::uint16_t port = wire::kDefaultSessionPort,
                         const std::string& bind_address = "127.0.0.1");
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  std::uint16_t port() const;
  std::size_t observer_count() const;
  long dropped_snapshots() const;

  /// Hello sent to every new observer.
  void set_hello(std::string hello_json);
  void broadcast(std::string snapshot_json);

  struct Inbound {
    wire::Command command;
    std::uint64_t observer = 0;
  };
  /// Commands received since the last call, in arrival order.
  std::vector<Inbound> drain_commands();
  void send(std::uint64_t observer, std::string message_json);

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

struct LoopStats {
  long ticks = 0;
  double max_period_error = 0.0;  // seconds, worst |actual - nominal| tick period
};

/// Runs the 10 Hz loop until `stop` is requested: drain commands, ack them,
/// step, broadcast. Never blocks on observers.
LoopStats run_session_loop(SessionCore& core, SessionServer& server, std::stop_token stop);

/// `omninav serve` entry point. Returns a process exit code.
int serve_main(const std::string& world_path, const std::string& scenario_path, int session_port,
               double duration_s, int scorer_port = -1);

}  // namespace omninav
