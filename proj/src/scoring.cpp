#include "omninav/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "omninav/error.hpp"

namespace omninav {

Instruction Instruction::make(std::string text, double issued_at) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ParameterError("instruction text is empty");
  }
  return Instruction{std::move(text), issued_at};
}

std::vector<double> transform_scores(std::span<const double> raw) {
  if (raw.empty()) throw ParameterError("cannot transform an empty score vector");
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> a(raw.size(), 1.0);
  if (!(hi > lo)) return a;
  const double range = hi - lo;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == lo) {
      a[i] = 0.1;
    } else if (raw[i] == hi) {
      a[i] = 1.0;
    } else {
      a[i] = std::clamp(0.1 + 0.9 * (raw[i] - lo) / range, 0.1, 1.0);
    }
  }
  return a;
}

FusedProfile fuse(std::span<const double> first, std::span<const double> second) {
  if (first.size() != second.size()) throw ParameterError("profile lengths differ");
  FusedProfile out;
  out.e.resize(first.size());
  for (std::size_t i = 0; i < first.size(); ++i) out.e[i] = first[i] * second[i];
  return out;
}

std::string detections_to_sentence(std::span<const Detection> detections) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].bbox.area() > detections[b].bbox.area();
  });
  std::string sentence;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0) sentence += ", ";
    sentence += detections[order[k]].label;
  }
  return sentence;
}

std::string detections_to_sentence(std::span<const Detection> detections, double min_confidence) {
  std::vector<Detection> kept;
  for (const auto& d : detections) {
    if (d.confidence >= min_confidence) kept.push_back(d);
  }
  return detections_to_sentence(kept);
}

std::vector<std::vector<Detection>> split_detections(std::span<const Detection> detections,
                                                     const SliceSet& slices) {
  std::vector<std::vector<Detection>> per_slice(slices.size());
  for (const auto& d : detections) {
    for (std::size_t i = 0; i < slices.size(); ++i) {
      if (slices[i].contains_column(d.bbox.center_x(), slices.panorama_width)) {
        per_slice[i].push_back(d);
      }
    }
  }
  return per_slice;
}

ScoreProfile score_slices(Scorer& scorer, const std::string& instruction,
                          const SliceObservation& obs, const ScoreProfile* previous) {
  const std::size_t n = obs.slices ? obs.slices->size() : 0;
  try {
    RawScores raw = scorer.score(instruction, obs);
    if (raw.values.size() != n) throw ScorerError("scorer returned the wrong number of scores");
    for (double v : raw.values) {
      if (!std::isfinite(v)) throw ScorerError("scorer returned a non-finite score");
    }
    ScoreProfile profile;
    profile.scorer_id = scorer.id();
    profile.transformed = transform_scores(raw.values);
    profile.raw = std::move(raw.values);
    profile.stale = raw.stale;
    return profile;
  } catch (const ScorerError&) {
    if (previous && previous->transformed.size() == n) {
      ScoreProfile reused = *previous;
      reused.stale = true;
      return reused;
    }
    ScoreProfile uniform;
    uniform.scorer_id = scorer.id();
    uniform.raw.assign(n, 0.0);
    uniform.transformed.assign(n, 1.0);
    uniform.stale = true;
    return uniform;
  }
}

}  // namespace omninav
