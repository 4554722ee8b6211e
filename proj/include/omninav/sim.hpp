#pragma once

#include <map>
#include <string>

#include "omninav/control.hpp"
#include "omninav/embedding.hpp"
#include "omninav/scoring.hpp"
#include "omninav/world.hpp"

namespace omninav {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct RobotState {
  Pose pose;
  double footprint = 0.6;  // square side, metres
  VelocityCommand commanded;
};

struct StepResult {
  RobotState state;
  bool collision = false;
};

/// Corners of the square footprint, counterclockwise.
std::array<Vec2, 4> footprint_corners(const Pose& pose, double side);
/// True when the footprint overlaps a wall or a floor-standing entity.
bool footprint_collides(const WorldModel& world, const Pose& pose, double side);

/// Euler step of the differential-drive base. The heading always turns; the
/// position is kept when the swept footprint would run into an obstacle.
/// A footprint that already overlaps something may still back away from it.
StepResult step_kinematics(const WorldModel& world, const RobotState& state,
                           const VelocityCommand& cmd, double dt);

/// Laser scan from the robot centre against walls and floor entities.
/// Bearings are -pi + k*2pi/n_rays in the robot frame.
RangeScan ray_scan(const WorldModel& world, const RobotState& state, int n_rays, double max_range);

inline constexpr int kDefaultRaysPerSlice = 32;
inline constexpr int kDefaultScanRays = 360;

/// Camera analogue: per-slice visible entities and region coverage.
VisibilitySummary visibility(const WorldModel& world, const RobotState& state,
                             const SliceSet& slices, int rays_per_slice = kDefaultRaysPerSlice);

/// Global-context scorer: compares the instruction with the vocabulary of the
/// regions each slice looks into, weighted by coverage.
class RegionOracle : public Scorer {
 public:
  explicit RegionOracle(const WorldModel& world, std::string id = "clip");
  std::string id() const override { return id_; }
  RawScores score(const std::string& instruction, const SliceObservation& obs) override;

 private:
  std::map<std::string, std::string> context_;
  std::string id_;
};

/// Per-object scorer: builds a detection sentence per slice from visible
/// entities (larger apparent size repeats the label) and compares it with the
/// instruction.
class ObjectOracle : public Scorer {
 public:
  explicit ObjectOracle(std::string id = "detic", double size_quantum = 0.1);
  std::string id() const override { return id_; }
  RawScores score(const std::string& instruction, const SliceObservation& obs) override;

  /// The detection sentence for one slice.
  std::string sentence(const SliceVisibility& slice) const;

 private:
  std::string id_;
  double size_quantum_;
};

}  // namespace omninav
