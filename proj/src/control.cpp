#include "omninav/control.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "omninav/error.hpp"

namespace omninav {

std::vector<int> top_indices(std::span<const double> e, int n_extract) {
  if (n_extract < 1 || n_extract > static_cast<int>(e.size())) {
    throw ParameterError("n_extract must lie in [1, n_split]");
  }
  std::vector<int> order(e.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return e[a] > e[b]; });
  order.resize(static_cast<std::size_t>(n_extract));
  return order;
}

DirectionCommand select_direction(std::span<const double> e,
                                  std::span<const std::array<double, 2>> directions, int n_extract,
                                  double previous_theta) {
  if (e.size() != directions.size()) throw ParameterError("profile and slice counts differ");
  const auto picked = top_indices(e, n_extract);

  DirectionCommand cmd;
  double weight_sum = 0.0;
  for (int j = 0; j < n_extract; ++j) {
    const double w = n_extract - j;
    const auto& dir = directions[static_cast<std::size_t>(picked[j])];
    cmd.b[0] += w * dir[0];
    cmd.b[1] += w * dir[1];
    weight_sum += w;
    cmd.contributors.push_back({picked[j], w});
  }
  cmd.b[0] /= weight_sum;
  cmd.b[1] /= weight_sum;
  cmd.theta = std::hypot(cmd.b[0], cmd.b[1]) < kCancelNorm ? previous_theta
                                                            : std::atan2(cmd.b[1], cmd.b[0]);
  return cmd;
}

DirectionCommand select_direction(std::span<const double> e, const SliceSet& slices, int n_extract,
                                  double previous_theta) {
  std::vector<std::array<double, 2>> dirs;
  dirs.reserve(slices.size());
  for (const auto& s : slices.slices) dirs.push_back(s.direction);
  return select_direction(e, dirs, n_extract, previous_theta);
}

VelocityCommand diff_drive_command(const DirectionCommand& d, double k, double c_thre) {
  VelocityCommand v;
  v.rotate = k * d.theta;
  v.linear = std::abs(d.theta) < c_thre ? 1.0 : 0.0;
  return v;
}

std::array<double, 2> omni_command(const DirectionCommand& d, double speed) {
  const double n = std::hypot(d.b[0], d.b[1]);
  if (n < kCancelNorm) return {0.0, 0.0};
  return {speed * d.b[0] / n, speed * d.b[1] / n};
}

VelocityCommand obstacle_gate(const VelocityCommand& v, const DirectionCommand& d,
                              const RangeScan& scan, double stop_dist, double cone) {
  if (!(stop_dist > 0.0)) throw ParameterError("stop distance must be positive");
  VelocityCommand out = v;
  bool blocked = scan.ranges.empty();
  for (const auto& r : scan.ranges) {
    if (std::abs(wrap_angle(r.bearing - d.theta)) <= cone && r.distance < stop_dist) {
      blocked = true;
      break;
    }
  }
  if (blocked) {
    out.linear = 0.0;
    out.gated = true;
  }
  return out;
}

}  // namespace omninav
