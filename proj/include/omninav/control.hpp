#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "omninav/panorama.hpp"

namespace omninav {

struct Contributor {
  int slice = 0;  // 0-based slice index
  double weight = 0.0;
  friend bool operator==(const Contributor&, const Contributor&) = default;
};

/// Heading request in the robot frame (x forward, y left).
struct DirectionCommand {
  std::array<double, 2> b{0.0, 0.0};
  double theta = 0.0;
  std::vector<Contributor> contributors;
};

struct VelocityCommand {
  double linear = 0.0;  // m/s
  double rotate = 0.0;  // rad/s
  bool gated = false;
};

struct RangeReading {
  double bearing = 0.0;   // radians, robot frame
  double distance = 0.0;  // metres
};

struct RangeScan {
  std::vector<RangeReading> ranges;
  double max_range = 0.0;
};

inline constexpr double kCancelNorm = 1e-6;

/// Indices of the `n_extract` largest values, descending; ties favour the lower index.
std::vector<int> top_indices(std::span<const double> e, int n_extract);

/// Rank-weighted blend of the top `n_extract` slice directions.
/// When the blend cancels out, theta falls back to `previous_theta`.
DirectionCommand select_direction(std::span<const double> e, const SliceSet& slices, int n_extract,
                                  double previous_theta = 0.0);
DirectionCommand select_direction(std::span<const double> e,
                                  std::span<const std::array<double, 2>> directions, int n_extract,
                                  double previous_theta = 0.0);

/// Two-wheeled base: rotate = k*theta, full speed forward only while |theta| < c_thre.
VelocityCommand diff_drive_command(const DirectionCommand& d, double k, double c_thre);

/// Omnidirectional base: translate along b at `speed`.
std::array<double, 2> omni_command(const DirectionCommand& d, double speed);

/// Zeroes linear velocity when any return within +-cone of theta is closer than stop_dist.
VelocityCommand obstacle_gate(const VelocityCommand& v, const DirectionCommand& d,
                              const RangeScan& scan, double stop_dist, double cone);

}  // namespace omninav
