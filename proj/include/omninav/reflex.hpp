#pragma once

#include <optional>
#include <string>

#include "omninav/config.hpp"
#include "omninav/control.hpp"
#include "omninav/scoring.hpp"

namespace omninav {

enum class Strategy { kAll, kClipOnly, kDeticOnly };

std::string to_string(Strategy s);
/// Accepts "all", "clip", "detic" (case-insensitive). Throws ParameterError.
Strategy parse_strategy(const std::string& text);

struct ReflexConfig {
  int n_split = 8;
  double overlap = kDefaultOverlap;
  int n_extract = 2;
  double c_thre = 0.6;
  double k = 0.5;
  double tick_s = 0.1;
  double stop_dist = 0.4;
  double cone = 0.5;
  Strategy strategy = Strategy::kAll;

  /// Reads control.*, gate.* and slices.* keys on top of the defaults.
  static ReflexConfig from_config(const Config& config);
  static ReflexConfig from_config(const Config& config, ReflexConfig base);
  void validate() const;
};

/// Loop memory carried from one tick to the next.
struct ReflexState {
  double previous_theta = 0.0;
  std::optional<ScoreProfile> clip;
  std::optional<ScoreProfile> detic;
};

struct ReflexOutput {
  VelocityCommand velocity;
  DirectionCommand direction;
  std::optional<ScoreProfile> clip;
  std::optional<ScoreProfile> detic;
  FusedProfile fused;
};

/// One control tick: score -> rescale -> fuse -> select -> velocity law -> gate.
/// `scan` may be null when no range sensor is attached (gate skipped).
/// Scorers not needed by the configured strategy are not queried.
ReflexOutput reflex_step(const std::string& instruction, const SliceObservation& obs,
                         const RangeScan* scan, Scorer* clip, Scorer* detic,
                         const ReflexConfig& config, ReflexState& state);

}  // namespace omninav
