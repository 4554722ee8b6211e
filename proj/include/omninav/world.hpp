#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace omninav {

using Vec2 = Eigen::Vector2d;

struct Segment {
  Vec2 a;
  Vec2 b;
};

struct Wall {
  Segment segment;
  bool opaque = true;  // false: low shelf the camera sees over; still blocks motion and the LRF
};

enum class EntityShape { kDisc, kPolygon };

/// kFloor entities stand on the floor (block motion and range returns);
/// kRaised entities sit on furniture and are only seen by the camera.
enum class HeightClass { kFloor, kRaised };

struct Entity {
  std::string label;
  EntityShape shape = EntityShape::kDisc;
  Vec2 position{0.0, 0.0};
  double radius = 0.0;        // discs
  std::vector<Vec2> polygon;  // polygons, world coordinates
  HeightClass height = HeightClass::kFloor;
};

struct Region {
  std::string name;
  std::vector<Vec2> polygon;
  std::vector<std::string> vocab;
};

struct Bounds {
  Vec2 min{0.0, 0.0};
  Vec2 max{0.0, 0.0};
  double width() const { return max.x() - min.x(); }
  double height() const { return max.y() - min.y(); }
  bool contains(const Vec2& p, double eps = 1e-9) const;
};

struct WorldModel {
  std::string name;
  Bounds bounds;
  std::vector<Wall> walls;
  std::vector<Entity> entities;
  std::vector<Region> regions;

  const Region* find_region(const std::string& name) const;
  const Entity* find_entity(const std::string& label) const;
  /// Region vocabulary plus the labels of entities standing inside the region.
  std::string context_text(const Region& region) const;

  /// Throws ScenarioError when an invariant is violated.
  void validate() const;
};

WorldModel parse_world(const std::string& text);
WorldModel load_world(const std::filesystem::path& path);
std::string dump_world(const WorldModel& world);
void save_world(const WorldModel& world, const std::filesystem::path& path);

// Planar geometry used by the simulator.
bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& polygon);
bool polygon_is_simple(const std::vector<Vec2>& polygon);
/// Ray parameter of the first hit with a segment, if any (t in metres for unit dir).
std::optional<double> ray_segment(const Vec2& origin, const Vec2& dir, const Segment& s);
std::optional<double> ray_disc(const Vec2& origin, const Vec2& dir, const Vec2& centre, double r);
std::optional<double> ray_polygon(const Vec2& origin, const Vec2& dir, const std::vector<Vec2>& poly);
std::optional<double> ray_entity(const Vec2& origin, const Vec2& dir, const Entity& e);
bool segments_intersect(const Segment& p, const Segment& q);
double point_segment_distance(const Vec2& p, const Segment& s);
/// Distance from a point to a polygon (0 inside).
double point_polygon_distance(const Vec2& p, const std::vector<Vec2>& poly);
double point_entity_distance(const Vec2& p, const Entity& e);

}  // namespace omninav
