// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sforge/error.hpp"
#include "sforge/geometry.hpp"

namespace sforge::map {

struct PhaseLine {
  std::string name;
  int order = 0;  // west -> east rank
  Polyline points;
};

struct Obstacle {
  std::string name;
  Polygon polygon;
  bool impassable = true;
  double cost = 1.0;  // multiplier when passable
};

struct Corridor {
  std::string name;
  Polyline points;
  double width = 1.0;  // km, full width
  double cost = 1.0;   // in (0, 1]
};

struct Area {
  std::string name;
  Polygon polygon;
};

struct NamedLine {
  std::string name;
  Polyline points;
};

enum class Affiliation { Friendly, Enemy };

struct UnitMarker {
  std::string id;
  std::string echelon;
  Affiliation affiliation = Affiliation::Friendly;
  Point position;
};

/// Optional explicit waypoint graph carried in the map document.
struct ExplicitWaypoints {
  std::vector<Point> nodes;
  struct Edge {
    std::size_t a = 0, b = 0;
    std::optional<double> weight;
  };
  std::vector<Edge> edges;
};

struct MapModel {
  Rect bounds;
  std::optional<double> resolution;
  std::vector<PhaseLine> phase_lines;
  std::vector<Obstacle> obstacles;
  std::vector<Corridor> corridors;
  std::vector<Area> areas;
  std::vector<NamedLine> routes;
  std::vector<NamedLine> lanes;
  std::vector<UnitMarker> units;
  std::optional<ExplicitWaypoints> waypoints;

  const UnitMarker* find_unit(std::string_view id) const {
    for (const auto& u : units)
      if (u.id == id) return &u;
    return nullptr;
  }
  const Area* find_area(std::string_view name) const {
    for (const auto& a : areas)
      if (a.name == name) return &a;
    return nullptr;
  }
  const PhaseLine* find_phase_line(std::string_view name) const {
    for (const auto& p : phase_lines)
      if (p.name == name) return &p;
    return nullptr;
  }

  /// True when `name` is any named element (phase line, area, route, lane,
  /// corridor, obstacle or unit).
  bool has_element(std::string_view name) const {
    auto in = [&](const auto& v) {
      for (const auto& e : v)
        if (e.name == name) return true;
      return false;
    };
    return in(phase_lines) || in(areas) || in(routes) || in(lanes) || in(corridors) || in(obstacles) ||
           find_unit(name) != nullptr;
  }
};

namespace detail {

inline Point point_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SchemaError(where + ": point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<Point> points_from_json(const nlohmann::json& j, const std::string& where,
                                           std::size_t min_points) {
  if (!j.is_array()) throw SchemaError(where + ": expected a point list");
  std::vector<Point> out;
  for (const auto& p : j) out.push_back(point_from_json(p, where));
  if (out.size() < min_points) throw SchemaError(where + ": needs at least " + std::to_string(min_points) + " points");
  return out;
}

inline std::string name_of(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty())
    throw SchemaError(where + ": missing \"" + key + "\"");
  return j.at(key).get<std::string>();
}

inline const nlohmann::json& array_or_empty(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::array();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_array()) throw SchemaError(std::string("\"") + key + "\" must be an array");
  return j.at(key);
}

inline void check_in_bounds(const Rect& b, const std::vector<Point>& pts, const std::string& where) {
  for (auto p : pts)
    if (!b.contains(p)) throw SchemaError(where + ": geometry outside map bounds");
}

template <class T>
void check_unique(const std::vector<T>& v, const char* category) {
  std::set<std::string> seen;
  for (const auto& e : v)
    if (!seen.insert(e.name).second) throw SchemaError(std::string("duplicate ") + category + " name: " + e.name);
}

}  // namespace detail

/// Parses and validates a `map.json` document.
inline MapModel map_from_json(const nlohmann::json& j) {
  using namespace detail;
  if (!j.is_object()) throw SchemaError("map document must be an object");
  if (!j.contains("bounds")) throw SchemaError("map: missing \"bounds\"");
  const auto& b = j.at("bounds");
  if (!b.is_array() || b.size() != 4) throw SchemaError("map: bounds must be [x0, y0, x1, y1]");
  MapModel m;
  m.bounds = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  if (!(m.bounds.x1 > m.bounds.x0 && m.bounds.y1 > m.bounds.y0)) throw SchemaError("map: empty bounds");
  if (j.contains("resolution")) {
    const double r = j.at("resolution").get<double>();
    if (!(r > 0)) throw SchemaError("map: resolution must be positive");
    m.resolution = r;
  }

  std::set<int> orders;
  for (const auto& pj : array_or_empty(j, "phase_lines")) {
    PhaseLine pl;
    pl.name = name_of(pj, "name", "phase line");
    if (!pj.contains("order") || !pj.at("order").is_number_integer())
      throw SchemaError("phase line " + pl.name + ": missing integer \"order\"");
    pl.order = pj.at("order").get<int>();
    pl.points = points_from_json(pj.value("points", nlohmann::json()), "phase line " + pl.name, 2);
    if (!orders.insert(pl.order).second) throw SchemaError("phase line " + pl.name + ": duplicate order");
    if (polyline_self_intersects(pl.points)) throw SchemaError("phase line " + pl.name + ": self-intersecting");
    check_in_bounds(m.bounds, pl.points, "phase line " + pl.name);
    m.phase_lines.push_back(std::move(pl));
  }

  std::size_t index = 0;
  for (const auto& oj : array_or_empty(j, "obstacles")) {
    Obstacle o;
    o.name = oj.contains("name") ? name_of(oj, "name", "obstacle") : "OBSTACLE " + std::to_string(index);
    o.polygon = points_from_json(oj.value("polygon", nlohmann::json()), "obstacle " + o.name, 3);
    if (!polygon_is_simple(o.polygon)) throw SchemaError("obstacle " + o.name + ": polygon is not simple");
    const auto& kind = oj.value("kind", nlohmann::json("impassable"));
    if (kind.is_string() && kind.get<std::string>() == "impassable") {
      o.impassable = true;
    } else if (kind.is_object() && kind.contains("cost") && kind.at("cost").is_number()) {
      o.impassable = false;
      o.cost = kind.at("cost").get<double>();
      if (!std::isfinite(o.cost) || o.cost < 1.0)
        throw SchemaError("obstacle " + o.name + ": cost multiplier must be finite and >= 1");
    } else {
      throw SchemaError("obstacle " + o.name + ": kind must be \"impassable\" or {\"cost\": m}");
    }
    check_in_bounds(m.bounds, o.polygon, "obstacle " + o.name);
    m.obstacles.push_back(std::move(o));
    ++index;
  }

  for (const auto& cj : array_or_empty(j, "corridors")) {
    Corridor c;
    c.name = name_of(cj, "name", "corridor");
    c.points = points_from_json(cj.value("points", nlohmann::json()), "corridor " + c.name, 2);
    c.width = cj.value("width", 1.0);
    c.cost = cj.value("cost", 1.0);
    if (!(c.width > 0)) throw SchemaError("corridor " + c.name + ": width must be positive");
    if (!(c.cost > 0 && c.cost <= 1.0)) throw SchemaError("corridor " + c.name + ": cost must be in (0, 1]");
    check_in_bounds(m.bounds, c.points, "corridor " + c.name);
    m.corridors.push_back(std::move(c));
  }

  for (const auto& aj : array_or_empty(j, "areas")) {
    Area a;
    a.name = name_of(aj, "name", "area");
    a.polygon = points_from_json(aj.value("polygon", nlohmann::json()), "area " + a.name, 3);
    check_in_bounds(m.bounds, a.polygon, "area " + a.name);
    m.areas.push_back(std::move(a));
  }

  auto lines = [&](const char* key, std::vector<NamedLine>& out) {
    for (const auto& rj : array_or_empty(j, key)) {
      NamedLine r;
      r.name = name_of(rj, "name", key);
      r.points = points_from_json(rj.value("points", nlohmann::json()), std::string(key) + " " + r.name, 2);
      check_in_bounds(m.bounds, r.points, std::string(key) + " " + r.name);
      out.push_back(std::move(r));
    }
  };
  lines("routes", m.routes);
  lines("lanes", m.lanes);

  std::set<std::string> ids;
  for (const auto& uj : array_or_empty(j, "units")) {
    UnitMarker u;
    u.id = name_of(uj, "id", "unit");
    u.echelon = uj.value("echelon", std::string{});
    const auto aff = uj.value("affiliation", std::string("friendly"));
    if (aff != "friendly" && aff != "enemy") throw SchemaError("unit " + u.id + ": affiliation must be friendly|enemy");
    u.affiliation = aff == "friendly" ? Affiliation::Friendly : Affiliation::Enemy;
    if (!uj.contains("pos")) throw SchemaError("unit " + u.id + ": missing \"pos\"");
    u.position = point_from_json(uj.at("pos"), "unit " + u.id);
    if (!m.bounds.contains(u.position)) throw SchemaError("unit " + u.id + ": position outside map bounds");
    if (!ids.insert(u.id).second) throw SchemaError("duplicate unit id: " + u.id);
    m.units.push_back(std::move(u));
  }

  check_unique(m.phase_lines, "phase line");
  check_unique(m.obstacles, "obstacle");
  check_unique(m.corridors, "corridor");
  check_unique(m.areas, "area");
  check_unique(m.routes, "route");
  check_unique(m.lanes, "lane");

  if (j.contains("waypoints")) {
    const auto& wj = j.at("waypoints");
    ExplicitWaypoints w;
    w.nodes = points_from_json(wj.value("nodes", nlohmann::json()), "waypoints", 1);
    check_in_bounds(m.bounds, w.nodes, "waypoints");
    for (const auto& ej : array_or_empty(wj, "edges")) {
      if (!ej.is_array() || (ej.size() != 2 && ej.size() != 3)) throw SchemaError("waypoint edges are [a, b] or [a, b, w]");
      ExplicitWaypoints::Edge e{ej[0].get<std::size_t>(), ej[1].get<std::size_t>(), std::nullopt};
      if (e.a >= w.nodes.size() || e.b >= w.nodes.size() || e.a == e.b)
        throw SchemaError("waypoint edge references an unknown node");
      if (ej.size() == 3) {
        e.weight = ej[2].get<double>();
        if (!(*e.weight > 0)) throw SchemaError("waypoint edge weights must be positive");
      }
      w.edges.push_back(e);
    }
    m.waypoints = std::move(w);
  }
  return m;
}

}  // namespace sforge::map
