#include "omninav/reflex.hpp"

#include <algorithm>
#include <cctype>
#include <numbers>

#include "omninav/error.hpp"

namespace omninav {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kAll: return "all";
    case Strategy::kClipOnly: return "clip";
    case Strategy::kDeticOnly: return "detic";
  }
  return "all";
}

Strategy parse_strategy(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "all") return Strategy::kAll;
  if (lower == "clip") return Strategy::kClipOnly;
  if (lower == "detic") return Strategy::kDeticOnly;
  throw ParameterError("unknown strategy `" + text + "` (expected all|clip|detic)");
}

ReflexConfig ReflexConfig::from_config(const Config& config) {
  return from_config(config, ReflexConfig());
}

ReflexConfig ReflexConfig::from_config(const Config& config, ReflexConfig base) {
  ReflexConfig c = base;
  c.n_split = config.get_int("slices.n", c.n_split);
  c.overlap = config.get_double("slices.overlap", c.overlap);
  c.n_extract = config.get_int("control.n_extract", c.n_extract);
  c.c_thre = config.get_double("control.c_thre", c.c_thre);
  c.k = config.get_double("control.k", c.k);
  c.tick_s = config.get_double("control.tick_s", c.tick_s);
  c.stop_dist = config.get_double("gate.stop_dist", c.stop_dist);
  c.cone = config.get_double("gate.cone", c.cone);
  if (const auto s = config.get("control.strategy")) c.strategy = parse_strategy(*s);
  c.validate();
  return c;
}

void ReflexConfig::validate() const {
  if (n_split < 2) throw ParameterError("slices.n must be at least 2");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ParameterError("slices.overlap must lie in [0,1)");
  if (n_extract < 1 || n_extract > n_split) throw ParameterError("control.n_extract out of range");
  if (!(k > 0.0)) throw ParameterError("control.k must be positive");
  if (!(c_thre > 0.0 && c_thre <= std::numbers::pi)) throw ParameterError("control.c_thre out of range");
  if (!(tick_s > 0.0)) throw ParameterError("control.tick_s must be positive");
  if (!(stop_dist > 0.0)) throw ParameterError("gate.stop_dist must be positive");
  if (!(cone >= 0.0)) throw ParameterError("gate.cone must be non-negative");
}

ReflexOutput reflex_step(const std::string& instruction, const SliceObservation& obs,
                         const RangeScan* scan, Scorer* clip, Scorer* detic,
                         const ReflexConfig& config, ReflexState& state) {
  if (!obs.slices) throw ParameterError("reflex step needs a slice set");
  const bool use_clip = config.strategy != Strategy::kDeticOnly;
  const bool use_detic = config.strategy != Strategy::kClipOnly;
  if ((use_clip && !clip) || (use_detic && !detic)) {
    throw ParameterError("strategy " + to_string(config.strategy) + " is missing a scorer");
  }

  ReflexOutput out;
  if (use_clip) {
    out.clip = score_slices(*clip, instruction, obs, state.clip ? &*state.clip : nullptr);
    state.clip = out.clip;
  }
  if (use_detic) {
    out.detic = score_slices(*detic, instruction, obs, state.detic ? &*state.detic : nullptr);
    state.detic = out.detic;
  }

  if (use_clip && use_detic) {
    out.fused = fuse(out.clip->transformed, out.detic->transformed);
  } else {
    out.fused.e = use_clip ? out.clip->transformed : out.detic->transformed;
  }

  out.direction = select_direction(out.fused.e, *obs.slices, config.n_extract, state.previous_theta);
  state.previous_theta = out.direction.theta;
  out.velocity = diff_drive_command(out.direction, config.k, config.c_thre);
  if (scan) out.velocity = obstacle_gate(out.velocity, out.direction, *scan, config.stop_dist, config.cone);
  return out;
}

}  // namespace omninav
