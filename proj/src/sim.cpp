#include "omninav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "omninav/error.hpp"

namespace omninav {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSweepStep = 0.01;  // metres of corner travel between collision checks

bool segment_hits_disc(const Segment& s, const Vec2& centre, double r) {
  return point_segment_distance(centre, s) < r;
}

bool footprint_hits_entity(const std::array<Vec2, 4>& corners, const Entity& e) {
  const std::vector<Vec2> square(corners.begin(), corners.end());
  if (e.shape == EntityShape::kDisc) {
    if (point_in_polygon(e.position, square)) return true;
    for (int i = 0; i < 4; ++i) {
      if (segment_hits_disc({corners[i], corners[(i + 1) % 4]}, e.position, e.radius)) return true;
    }
    return false;
  }
  for (const auto& p : e.polygon) {
    if (point_in_polygon(p, square)) return true;
  }
  for (const auto& c : corners) {
    if (point_in_polygon(c, e.polygon)) return true;
  }
  for (int i = 0; i < 4; ++i) {
    const Segment side{corners[i], corners[(i + 1) % 4]};
    for (std::size_t k = 0; k < e.polygon.size(); ++k) {
      if (segments_intersect(side, {e.polygon[k], e.polygon[(k + 1) % e.polygon.size()]})) return true;
    }
  }
  return false;
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int entity = -1;
};

Hit first_hit(const WorldModel& world, const Vec2& origin, const Vec2& dir, bool camera) {
  Hit hit;
  for (const auto& w : world.walls) {
    if (camera && !w.opaque) continue;
    if (const auto t = ray_segment(origin, dir, w.segment); t && *t < hit.t) {
      hit.t = *t;
      hit.entity = -1;
    }
  }
  for (std::size_t i = 0; i < world.entities.size(); ++i) {
    const auto& e = world.entities[i];
    if (!camera && e.height != HeightClass::kFloor) continue;
    if (const auto t = ray_entity(origin, dir, e); t && *t < hit.t) {
      hit.t = *t;
      hit.entity = static_cast<int>(i);
    }
  }
  return hit;
}

// Largest ray parameter in [0, length] at which the segment is inside the polygon, or -1.
double farthest_inside(const Vec2& origin, const Vec2& dir, double length,
                       const std::vector<Vec2>& poly) {
  const Vec2 end = origin + dir * length;
  if (point_in_polygon(end, poly)) return length;
  double best = -1.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto t = ray_segment(origin, dir, {poly[i], poly[(i + 1) % poly.size()]});
    if (t && *t <= length) best = std::max(best, *t);
  }
  return best;
}

}  // namespace

std::array<Vec2, 4> footprint_corners(const Pose& pose, double side) {
  const double h = side / 2.0;
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  const Vec2 centre(pose.x, pose.y);
  const auto corner = [&](double lx, double ly) -> Vec2 { return centre + Vec2(c * lx - s * ly, s * lx + c * ly); };
  return {corner(h, h), corner(-h, h), corner(-h, -h), corner(h, -h)};
}

namespace {

// Obstacles overlapped by the footprint: wall indices, then floor entities offset by the wall count.
std::vector<std::size_t> overlapped(const WorldModel& world, const Pose& pose, double side) {
  const auto corners = footprint_corners(pose, side);
  const std::vector<Vec2> square(corners.begin(), corners.end());
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < world.walls.size(); ++w) {
    const Segment& seg = world.walls[w].segment;
    bool hit = point_in_polygon(seg.a, square) || point_in_polygon(seg.b, square);
    for (int i = 0; i < 4 && !hit; ++i) hit = segments_intersect({corners[i], corners[(i + 1) % 4]}, seg);
    if (hit) out.push_back(w);
  }
  for (std::size_t e = 0; e < world.entities.size(); ++e) {
    const Entity& ent = world.entities[e];
    if (ent.height == HeightClass::kFloor && footprint_hits_entity(corners, ent)) {
      out.push_back(world.walls.size() + e);
    }
  }
  return out;
}

double obstacle_distance(const WorldModel& world, std::size_t id, const Vec2& p) {
  if (id < world.walls.size()) return point_segment_distance(p, world.walls[id].segment);
  return point_entity_distance(p, world.entities[id - world.walls.size()]);
}

// Translation from `from` to `to` at fixed heading, checked every kSweepStep metres.
// Obstacles the robot already overlaps at the start only block motion towards them.
bool translation_blocked(const WorldModel& world, const Pose& from, const Pose& to, double side) {
  const auto initial = overlapped(world, from, side);
  const Vec2 a(from.x, from.y);
  const Vec2 b(to.x, to.y);
  for (const std::size_t id : initial) {
    if (obstacle_distance(world, id, b) <= obstacle_distance(world, id, a)) return true;
  }
  const int steps = std::max(1, static_cast<int>(std::ceil((b - a).norm() / kSweepStep)));
  for (int k = 1; k <= steps; ++k) {
    const double f = static_cast<double>(k) / steps;
    for (const std::size_t id : overlapped(world, {a.x() + f * (b.x() - a.x()), a.y() + f * (b.y() - a.y()), to.yaw}, side)) {
      if (std::find(initial.begin(), initial.end(), id) == initial.end()) return true;
    }
  }
  return false;
}

}  // namespace

bool footprint_collides(const WorldModel& world, const Pose& pose, double side) {
  return !overlapped(world, pose, side).empty();
}

StepResult step_kinematics(const WorldModel& world, const RobotState& state,
                           const VelocityCommand& cmd, double dt) {
  if (!(dt > 0.0)) throw ParameterError("time step must be positive");
  const Pose& from = state.pose;
  const double yaw = wrap_angle(from.yaw + cmd.rotate * dt);
  const Pose turned{from.x, from.y, yaw};
  const Pose moved{from.x + cmd.linear * std::cos(from.yaw) * dt,
                   from.y + cmd.linear * std::sin(from.yaw) * dt, yaw};

  StepResult out{state, false};
  out.state.commanded = cmd;
  if (cmd.linear != 0.0 && translation_blocked(world, turned, moved, state.footprint)) {
    out.state.pose = turned;
    out.collision = true;
    return out;
  }
  out.state.pose = moved;
  return out;
}

RangeScan ray_scan(const WorldModel& world, const RobotState& state, int n_rays, double max_range) {
  if (n_rays < 8) throw ParameterError("range scan needs at least 8 rays");
  RangeScan scan;
  scan.max_range = max_range;
  scan.ranges.reserve(static_cast<std::size_t>(n_rays));
  const Vec2 origin(state.pose.x, state.pose.y);
  for (int k = 0; k < n_rays; ++k) {
    const double bearing = -kPi + 2.0 * kPi * k / n_rays;
    const double angle = state.pose.yaw + bearing;
    const Hit hit = first_hit(world, origin, {std::cos(angle), std::sin(angle)}, false);
    double d = std::min(hit.t, max_range);
    d = std::max(d, 1e-9);
    scan.ranges.push_back({bearing, d});
  }
  return scan;
}

VisibilitySummary visibility(const WorldModel& world, const RobotState& state,
                             const SliceSet& slices, int rays_per_slice) {
  if (rays_per_slice < 8) throw ParameterError("visibility needs at least 8 rays per slice");
  const double view_range = 2.0 * (world.bounds.width() + world.bounds.height());
  const double width = slices.angular_width();
  const Vec2 origin(state.pose.x, state.pose.y);

  VisibilitySummary summary;
  summary.slices.resize(slices.size());
  for (std::size_t i = 0; i < slices.size(); ++i) {
    std::vector<int> entity_hits(world.entities.size(), 0);
    std::vector<double> entity_dist(world.entities.size(), 0.0);
    std::vector<int> region_hits(world.regions.size(), 0);
    for (int k = 0; k < rays_per_slice; ++k) {
      const double local = slices[i].center_azimuth - width / 2.0 + (k + 0.5) * width / rays_per_slice;
      const double angle = state.pose.yaw + local;
      const Vec2 dir(std::cos(angle), std::sin(angle));
      const Hit hit = first_hit(world, origin, dir, true);
      const double length = std::min(hit.t, view_range);
      if (hit.entity >= 0) {
        ++entity_hits[static_cast<std::size_t>(hit.entity)];
        entity_dist[static_cast<std::size_t>(hit.entity)] += length;
      }
      int best_region = -1;
      double best_t = -1.0;
      for (std::size_t r = 0; r < world.regions.size(); ++r) {
        const double t = farthest_inside(origin, dir, length, world.regions[r].polygon);
        if (t > best_t) {
          best_t = t;
          best_region = static_cast<int>(r);
        }
      }
      if (best_t >= 0.0) ++region_hits[static_cast<std::size_t>(best_region)];
    }
    auto& out = summary.slices[i];
    for (std::size_t e = 0; e < world.entities.size(); ++e) {
      if (entity_hits[e] == 0) continue;
      out.entities.push_back({world.entities[e].label,
                              width * entity_hits[e] / static_cast<double>(rays_per_slice),
                              entity_dist[e] / entity_hits[e]});
    }
    for (std::size_t r = 0; r < world.regions.size(); ++r) {
      if (region_hits[r] == 0) continue;
      out.regions.push_back(
          {world.regions[r].name, region_hits[r] / static_cast<double>(rays_per_slice)});
    }
  }
  return summary;
}

RegionOracle::RegionOracle(const WorldModel& world, std::string id) : id_(std::move(id)) {
  for (const auto& r : world.regions) context_[r.name] = world.context_text(r);
}

RawScores RegionOracle::score(const std::string& instruction, const SliceObservation& obs) {
  if (!obs.visibility || !obs.slices) throw ScorerError("region oracle needs slices and a visibility summary");
  const TextEmbedding query = embed_text(instruction);
  const double width = obs.slices->angular_width();
  RawScores out;
  for (const auto& slice : obs.visibility->slices) {
    std::vector<std::pair<std::string, double>> weighted;
    for (const auto& cov : slice.regions) {
      const auto it = context_.find(cov.region);
      if (it != context_.end()) weighted.emplace_back(it->second, cov.fraction);
    }
    // Objects in view count too, in proportion to the share of the slice they fill.
    for (const auto& e : slice.entities) weighted.emplace_back(e.label, e.apparent_size / width);
    out.values.push_back(cosine(query, embed_weighted(weighted)));
  }
  return out;
}

ObjectOracle::ObjectOracle(std::string id, double size_quantum)
    : id_(std::move(id)), size_quantum_(size_quantum) {}

std::string ObjectOracle::sentence(const SliceVisibility& slice) const {
  std::vector<Detection> detections;
  for (const auto& e : slice.entities) {
    const int repeats = std::max(1, static_cast<int>(std::floor(e.apparent_size / size_quantum_)));
    for (int k = 0; k < repeats; ++k) {
      detections.push_back({e.label, {0.0, 0.0, e.apparent_size, 1.0}, 1.0});
    }
  }
  return detections_to_sentence(detections, kDetectionConfidence);
}

RawScores ObjectOracle::score(const std::string& instruction, const SliceObservation& obs) {
  if (!obs.visibility) throw ScorerError("object oracle needs a visibility summary");
  const TextEmbedding query = embed_text(instruction);
  RawScores out;
  for (const auto& slice : obs.visibility->slices) {
    out.values.push_back(cosine(query, embed_text(sentence(slice))));
  }
  return out;
}

}  // namespace omninav
