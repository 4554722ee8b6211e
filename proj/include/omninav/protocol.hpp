#pragma once

// Message types shared by the scorer channel (length-prefixed JSON over TCP)
// and the session channel (the same JSON over WebSocket text frames).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "omninav/control.hpp"
#include "omninav/scoring.hpp"
#include "omninav/sim.hpp"

namespace omninav::wire {

inline constexpr int kVersion = 1;
inline constexpr std::uint16_t kDefaultScorerPort = 7471;
inline constexpr std::uint16_t kDefaultSessionPort = 7472;
inline constexpr std::size_t kMaxFrameBytes = 64u << 20;

// ---- scorer channel ----

struct ScorerHello {
  int v = kVersion;
  std::string scorer_id;  // empty in the gateway's reply
  friend bool operator==(const ScorerHello&, const ScorerHello&) = default;
};

struct SliceRange {
  int first_column = 0;
  int width = 0;
  friend bool operator==(const SliceRange&, const SliceRange&) = default;
};

struct ScoreRequest {
  std::uint64_t id = 0;
  std::string instruction;
  int n_split = 0;
  std::string kind = "visibility";  // or "pixels"
  VisibilitySummary visibility;      // kind == "visibility"
  std::vector<std::string> slices;   // kind == "pixels": base64 PNG per slice
  std::string panorama;              // kind == "pixels": base64 PNG of the expanded image
  std::vector<SliceRange> ranges;    // kind == "pixels": column range of each slice
  friend bool operator==(const ScoreRequest&, const ScoreRequest&) = default;
};

struct ScoreResponse {
  std::uint64_t id = 0;
  std::vector<double> scores;
  std::string scorer_id;
  double latency_ms = 0.0;
  friend bool operator==(const ScoreResponse&, const ScoreResponse&) = default;
};

struct ErrorMessage {
  std::string code;  // bad_frame, version, bad_request, bad_command, unknown_type
  std::string message;
  std::optional<std::uint64_t> id;
  friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

using ScorerMessage = std::variant<ScorerHello, ScoreRequest, ScoreResponse, ErrorMessage>;

// ---- session channel ----

struct SessionHello {
  int v = kVersion;
  nlohmann::json world;  // world file contents, for drawing the map
  int n_split = 0;
  std::string instruction;
  std::string strategy;
  Pose origin;
  friend bool operator==(const SessionHello&, const SessionHello&) = default;
};

struct ScorerState {
  std::string id;
  std::vector<double> a;
  bool stale = false;
  friend bool operator==(const ScorerState&, const ScorerState&) = default;
};

struct Snapshot {
  double t = 0.0;
  Pose pose;
  std::vector<double> e;
  std::vector<ScorerState> scorers;
  double theta = 0.0;
  double linear = 0.0;
  double rotate = 0.0;
  bool gated = false;
  bool collision = false;
  bool paused = false;
  std::vector<Contributor> contributors;
  std::string instruction;
  std::string strategy;
  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

enum class CommandKind { kSetInstruction, kPause, kResume, kReset, kSetStrategy };
std::string to_string(CommandKind kind);

struct Command {
  std::uint64_t id = 0;
  CommandKind kind = CommandKind::kPause;
  std::string text;      // set_instruction
  std::string strategy;  // set_strategy: all | clip | detic
  friend bool operator==(const Command&, const Command&) = default;
};

struct Ack {
  std::uint64_t id = 0;
  CommandKind command = CommandKind::kPause;
  bool ok = true;
  std::string message;
  friend bool operator==(const Ack&, const Ack&) = default;
};

using SessionMessage = std::variant<SessionHello, Snapshot, Command, Ack, ErrorMessage>;

/// Compact JSON text. Doubles are written with round-trip precision.
std::string serialize(const ScorerMessage& message);
std::string serialize(const SessionMessage& message);
/// Error frames look the same on both channels.
std::string serialize(const ErrorMessage& message);

/// Throws ProtocolError on malformed JSON, unknown `type` or missing fields.
/// Unknown fields are ignored.
ScorerMessage parse_scorer_message(std::string_view text);
SessionMessage parse_session_message(std::string_view text);

/// 4-byte big-endian length followed by the payload.
std::string encode_frame(std::string_view payload);

/// Incremental splitter for a byte stream of frames.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::size_t max_frame = kMaxFrameBytes) : max_frame_(max_frame) {}
  void feed(std::string_view bytes);
  /// Next complete payload, if any. Throws ProtocolError for an oversized frame.
  std::optional<std::string> next();
  std::size_t buffered() const noexcept { return buffer_.size(); }

 private:
  std::string buffer_;
  std::size_t max_frame_;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ProtocolError on characters outside the alphabet or bad length.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Builds the request for one observation: the visibility summary when
/// present, otherwise per-slice PNGs cut from the panorama.
ScoreRequest make_score_request(std::uint64_t id, const std::string& instruction,
                                const SliceObservation& obs);

}  // namespace omninav::wire
