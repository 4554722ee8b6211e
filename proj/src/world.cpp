#include "omninav/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>

#include "omninav/error.hpp"

namespace omninav {

using nlohmann::json;

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

Vec2 read_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError(where + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Vec2> read_polygon(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() < 3) throw ParseError(where + ": polygon needs 3+ points");
  std::vector<Vec2> poly;
  for (std::size_t i = 0; i < j.size(); ++i) {
    poly.push_back(read_point(j[i], where + "/" + std::to_string(i)));
  }
  return poly;
}

json write_point(const Vec2& p) { return json::array({p.x(), p.y()}); }

json write_polygon(const std::vector<Vec2>& poly) {
  json out = json::array();
  for (const auto& p : poly) out.push_back(write_point(p));
  return out;
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing `" + key + "`");
  return j.at(key);
}

}  // namespace

bool Bounds::contains(const Vec2& p, double eps) const {
  return p.x() >= min.x() - eps && p.x() <= max.x() + eps && p.y() >= min.y() - eps &&
         p.y() <= max.y() + eps;
}

const Region* WorldModel::find_region(const std::string& region_name) const {
  for (const auto& r : regions) {
    if (r.name == region_name) return &r;
  }
  return nullptr;
}

const Entity* WorldModel::find_entity(const std::string& label) const {
  for (const auto& e : entities) {
    if (e.label == label) return &e;
  }
  return nullptr;
}

std::string WorldModel::context_text(const Region& region) const {
  std::string text;
  for (const auto& word : region.vocab) text += word + " ";
  for (const auto& e : entities) {
    if (point_in_polygon(e.position, region.polygon)) text += e.label + " ";
  }
  return text;
}

void WorldModel::validate() const {
  if (!(bounds.max.x() > bounds.min.x() && bounds.max.y() > bounds.min.y())) {
    throw ScenarioError("world bounds are empty");
  }
  for (const auto& e : entities) {
    if (e.label.empty()) throw ScenarioError("entity without a label");
    if (e.shape == EntityShape::kDisc) {
      if (!(e.radius > 0.0)) throw ScenarioError("entity " + e.label + " has no radius");
      if (!bounds.contains(e.position)) throw ScenarioError("entity " + e.label + " outside bounds");
    } else {
      for (const auto& p : e.polygon) {
        if (!bounds.contains(p)) throw ScenarioError("entity " + e.label + " outside bounds");
      }
    }
  }
  for (const auto& r : regions) {
    if (r.vocab.empty()) throw ScenarioError("region " + r.name + " has an empty vocabulary");
    if (!polygon_is_simple(r.polygon)) throw ScenarioError("region " + r.name + " is not simple");
    for (const auto& p : r.polygon) {
      if (!bounds.contains(p)) throw ScenarioError("region " + r.name + " outside bounds");
    }
  }
}

WorldModel parse_world(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("world file: ") + err.what(), line_of_offset(text, err.byte));
  }

  WorldModel world;
  try {
    world.name = j.value("name", "");
    const json& bounds = require(j, "bounds", "/");
    world.bounds.min = read_point(require(bounds, "min", "/bounds"), "/bounds/min");
    world.bounds.max = read_point(require(bounds, "max", "/bounds"), "/bounds/max");

    const json walls = j.value("walls", json::array());
    for (std::size_t i = 0; i < walls.size(); ++i) {
      const std::string where = "/walls/" + std::to_string(i);
      Wall w;
      w.segment.a = read_point(require(walls[i], "a", where), where + "/a");
      w.segment.b = read_point(require(walls[i], "b", where), where + "/b");
      w.opaque = walls[i].value("opaque", true);
      world.walls.push_back(w);
    }

    const json entities = j.value("entities", json::array());
    for (std::size_t i = 0; i < entities.size(); ++i) {
      const std::string where = "/entities/" + std::to_string(i);
      const json& src = entities[i];
      Entity e;
      e.label = require(src, "label", where).get<std::string>();
      const std::string shape = src.value("shape", "disc");
      const std::string height = src.value("height", "floor");
      if (height == "floor") {
        e.height = HeightClass::kFloor;
      } else if (height == "raised") {
        e.height = HeightClass::kRaised;
      } else {
        throw ParseError(where + ": unknown height class `" + height + "`");
      }
      if (shape == "disc") {
        e.shape = EntityShape::kDisc;
        e.position = read_point(require(src, "position", where), where + "/position");
        e.radius = require(src, "radius", where).get<double>();
      } else if (shape == "polygon") {
        e.shape = EntityShape::kPolygon;
        e.polygon = read_polygon(require(src, "points", where), where + "/points");
        Vec2 c = Vec2::Zero();
        for (const auto& p : e.polygon) c += p;
        e.position = src.contains("position") ? read_point(src["position"], where + "/position")
                                              : Vec2(c / static_cast<double>(e.polygon.size()));
      } else {
        throw ParseError(where + ": unknown shape `" + shape + "`");
      }
      world.entities.push_back(std::move(e));
    }

    const json regions = j.value("regions", json::array());
    for (std::size_t i = 0; i < regions.size(); ++i) {
      const std::string where = "/regions/" + std::to_string(i);
      Region r;
      r.name = require(regions[i], "name", where).get<std::string>();
      r.polygon = read_polygon(require(regions[i], "polygon", where), where + "/polygon");
      r.vocab = require(regions[i], "vocab", where).get<std::vector<std::string>>();
      world.regions.push_back(std::move(r));
    }
  } catch (const json::exception& err) {
    throw ParseError(std::string("world file: ") + err.what());
  }
  try {
    world.validate();
  } catch (const ScenarioError& err) {
    throw ParseError(std::string("world file: ") + err.what());
  }
  return world;
}

WorldModel load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open world file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_world(buffer.str());
}

std::string dump_world(const WorldModel& world) {
  json j;
  j["name"] = world.name;
  j["bounds"] = {{"min", write_point(world.bounds.min)}, {"max", write_point(world.bounds.max)}};
  j["walls"] = json::array();
  for (const auto& w : world.walls) {
    json jw = {{"a", write_point(w.segment.a)}, {"b", write_point(w.segment.b)}};
    if (!w.opaque) jw["opaque"] = false;
    j["walls"].push_back(jw);
  }
  j["entities"] = json::array();
  for (const auto& e : world.entities) {
    json je = {{"label", e.label}, {"height", e.height == HeightClass::kFloor ? "floor" : "raised"}};
    if (e.shape == EntityShape::kDisc) {
      je["shape"] = "disc";
      je["position"] = write_point(e.position);
      je["radius"] = e.radius;
    } else {
      je["shape"] = "polygon";
      je["points"] = write_polygon(e.polygon);
      je["position"] = write_point(e.position);
    }
    j["entities"].push_back(je);
  }
  j["regions"] = json::array();
  for (const auto& r : world.regions) {
    j["regions"].push_back({{"name", r.name}, {"polygon", write_polygon(r.polygon)}, {"vocab", r.vocab}});
  }
  return j.dump(2) + "\n";
}

void save_world(const WorldModel& world, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write world file " + path.string());
  out << dump_world(world);
}

bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& polygon) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

bool segments_intersect(const Segment& p, const Segment& q) {
  const Vec2 r = p.b - p.a;
  const Vec2 s = q.b - q.a;
  const double denom = cross(r, s);
  const Vec2 qp = q.a - p.a;
  if (std::abs(denom) < 1e-15) {
    if (std::abs(cross(qp, r)) > 1e-12) return false;
    const double rr = r.squaredNorm();
    if (rr < 1e-30) return (p.a - q.a).norm() < 1e-12;
    const double t0 = qp.dot(r) / rr;
    const double t1 = t0 + s.dot(r) / rr;
    return std::max(t0, t1) >= 0.0 && std::min(t0, t1) <= 1.0;
  }
  const double t = cross(qp, s) / denom;
  const double u = cross(qp, r) / denom;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

bool polygon_is_simple(const std::vector<Vec2>& polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Segment a{polygon[i], polygon[(i + 1) % n]};
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      const Segment b{polygon[j], polygon[(j + 1) % n]};
      if (segments_intersect(a, b)) return false;
    }
  }
  return true;
}

std::optional<double> ray_segment(const Vec2& origin, const Vec2& dir, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double denom = cross(dir, e);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const Vec2 d = s.a - origin;
  const double t = cross(d, e) / denom;
  const double u = cross(d, dir) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

std::optional<double> ray_disc(const Vec2& origin, const Vec2& dir, const Vec2& centre, double r) {
  const Vec2 oc = origin - centre;
  const double b = oc.dot(dir);
  const double c = oc.squaredNorm() - r * r;
  if (c <= 0.0) return 0.0;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(disc);
  if (t < 0.0) return std::nullopt;
  return t;
}

std::optional<double> ray_polygon(const Vec2& origin, const Vec2& dir, const std::vector<Vec2>& poly) {
  if (point_in_polygon(origin, poly)) return 0.0;
  std::optional<double> best;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto t = ray_segment(origin, dir, {poly[i], poly[(i + 1) % poly.size()]});
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

std::optional<double> ray_entity(const Vec2& origin, const Vec2& dir, const Entity& e) {
  if (e.shape == EntityShape::kDisc) return ray_disc(origin, dir, e.position, e.radius);
  return ray_polygon(origin, dir, e.polygon);
}

double point_segment_distance(const Vec2& p, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double len2 = e.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - s.a).dot(e) / len2, 0.0, 1.0) : 0.0;
  return (s.a + t * e - p).norm();
}

double point_polygon_distance(const Vec2& p, const std::vector<Vec2>& poly) {
  if (point_in_polygon(p, poly)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    best = std::min(best, point_segment_distance(p, {poly[i], poly[(i + 1) % poly.size()]}));
  }
  return best;
}

double point_entity_distance(const Vec2& p, const Entity& e) {
  if (e.shape == EntityShape::kDisc) return std::max(0.0, (p - e.position).norm() - e.radius);
  return point_polygon_distance(p, e.polygon);
}

}  // namespace omninav
