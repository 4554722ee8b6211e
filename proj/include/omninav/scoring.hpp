#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omninav/panorama.hpp"

namespace omninav {

struct Instruction {
  std::string text;
  double issued_at = 0.0;

  /// Throws ParameterError when the text is blank.
  static Instruction make(std::string text, double issued_at = 0.0);
};

struct BoundingBox {
  double x = 0.0;  // left edge, expanded-image pixels
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double area() const noexcept { return w * h; }
  double center_x() const noexcept { return x + w / 2.0; }
};

struct Detection {
  std::string label;
  BoundingBox bbox;
  double confidence = 1.0;
};

inline constexpr double kDetectionConfidence = 0.5;

/// Per-slice similarities from one scorer: raw cosine and rescaled value.
struct ScoreProfile {
  std::string scorer_id;
  std::vector<double> raw;
  std::vector<double> transformed;
  bool stale = false;
};

struct FusedProfile {
  std::vector<double> e;
};

/// Affine rescale so min -> 0.1 and max -> 1.0. Equal scores all map to 1.0.
std::vector<double> transform_scores(std::span<const double> raw);

/// Elementwise product of two transformed profiles.
FusedProfile fuse(std::span<const double> first, std::span<const double> second);

/// Labels by descending bbox area (stable for ties) joined with ", ".
std::string detections_to_sentence(std::span<const Detection> detections);

/// Drops detections below `min_confidence`, then builds the sentence.
std::string detections_to_sentence(std::span<const Detection> detections, double min_confidence);

/// Assigns every detection to each slice whose column range holds its bbox centre.
std::vector<std::vector<Detection>> split_detections(std::span<const Detection> detections,
                                                     const SliceSet& slices);

/// What a simulated camera sees in one slice window.
struct VisibleEntity {
  std::string label;
  double apparent_size = 0.0;  // radians
  double distance = 0.0;       // metres
  friend bool operator==(const VisibleEntity&, const VisibleEntity&) = default;
};

struct RegionCoverage {
  std::string region;
  double fraction = 0.0;
  friend bool operator==(const RegionCoverage&, const RegionCoverage&) = default;
};

struct SliceVisibility {
  std::vector<VisibleEntity> entities;
  std::vector<RegionCoverage> regions;
  friend bool operator==(const SliceVisibility&, const SliceVisibility&) = default;
};

struct VisibilitySummary {
  std::vector<SliceVisibility> slices;
  friend bool operator==(const VisibilitySummary&, const VisibilitySummary&) = default;
};

/// Inputs a scorer may draw on. Exactly one of `visibility` / `panorama` is set.
struct SliceObservation {
  const SliceSet* slices = nullptr;
  const VisibilitySummary* visibility = nullptr;
  const Panorama* panorama = nullptr;
};

struct RawScores {
  std::vector<double> values;
  bool stale = false;
};

/// A source of raw per-slice similarities between an instruction and the view.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string id() const = 0;
  /// Throws ScorerError on failure.
  virtual RawScores score(const std::string& instruction, const SliceObservation& obs) = 0;
};

/// Scores one observation, falling back to `previous` (flagged stale) when the
/// scorer fails, or to a uniform profile when there is nothing to reuse.
ScoreProfile score_slices(Scorer& scorer, const std::string& instruction,
                          const SliceObservation& obs, const ScoreProfile* previous = nullptr);

}  // namespace omninav
