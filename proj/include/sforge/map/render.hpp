// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sforge/error.hpp"
#include "sforge/geometry.hpp"
#include "sforge/io.hpp"
#include "sforge/map/model.hpp"
#include "sforge/map/progress.hpp"

namespace sforge::map {

/// Names of the map elements to draw on top of the base layer.
struct ElementSelector {
  std::vector<std::string> units;
  std::vector<std::string> areas;
  std::vector<std::string> routes;
  std::vector<std::string> obstacles;
  std::vector<std::string> corridors;
  std::vector<std::string> lanes;

  bool empty() const {
    return units.empty() && areas.empty() && routes.empty() && obstacles.empty() && corridors.empty() &&
           lanes.empty();
  }
};

/// A computed route to draw, with progress markers at the given fractions.
struct RouteOverlay {
  std::string id;
  Route route;
  std::vector<double> fractions;
};

/// Element ids: spaces and other non [A-Za-z0-9_-] characters become '_'.
inline std::string element_id(std::string_view prefix, std::string_view name) {
  std::string out(prefix);
  out += '-';
  for (char c : name) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    out += ok ? c : '_';
  }
  return out;
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

class SvgWriter {
 public:
  explicit SvgWriter(const Rect& b) : b_(b) {}

  std::string x(double v) const { return format_fixed(v * 10.0); }
  std::string y(double v) const { return format_fixed((b_.y0 + b_.y1 - v) * 10.0); }

  std::string points(const std::vector<Point>& pts) const {
    std::string s;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) s += ' ';
      s += x(pts[i].x) + "," + y(pts[i].y);
    }
    return s;
  }

  void line(const std::string& text) { out_ += text + "\n"; }
  std::string take() { return std::move(out_); }

 private:
  Rect b_;
  std::string out_;
};

template <class T>
const T& find_named(const std::vector<T>& v, const std::string& name, const char* category) {
  for (const auto& e : v)
    if (e.name == name) return e;
  throw UnknownElement(std::string("unknown ") + category + ": " + name);
}

}  // namespace detail

/// Focused overlay: frame and phase lines always, then only the selected
/// elements. Output is a pure function of its inputs.
inline std::string render_overlay(const MapModel& map, const ElementSelector& focus,
                                  const std::vector<RouteOverlay>& route_markers = {}) {
  using detail::xml_escape;
  for (const auto& u : focus.units)
    if (!map.find_unit(u)) throw UnknownElement("unknown unit: " + u);

  detail::SvgWriter w(map.bounds);
  const Rect& b = map.bounds;
  const std::string vb = format_fixed(b.x0 * 10) + " " + format_fixed(b.y0 * 10) + " " + format_fixed(b.width() * 10) +
                         " " + format_fixed(b.height() * 10);
  w.line(R"(<?xml version="1.0" encoding="UTF-8"?>)");
  w.line(R"(<svg xmlns="http://www.w3.org/2000/svg" viewBox=")" + vb + R"(" width=")" + format_fixed(b.width() * 10) +
         R"(" height=")" + format_fixed(b.height() * 10) + R"(">)");
  w.line(
      "<style>.frame{fill:#f4f1e8;stroke:#333;stroke-width:4}"
      ".phase-line{fill:none;stroke:#555;stroke-width:3;stroke-dasharray:12 6}"
      ".obstacle{fill:#8b5a2b;fill-opacity:0.45;stroke:#5c3a1a;stroke-width:2}"
      ".corridor{fill:none;stroke:#2e8b57;stroke-opacity:0.35;stroke-linecap:round}"
      ".area{fill:#ffd27f;fill-opacity:0.4;stroke:#b8860b;stroke-width:2}"
      ".route{fill:none;stroke:#6a5acd;stroke-width:4}"
      ".lane{fill:none;stroke:#708090;stroke-width:3;stroke-dasharray:4 4}"
      ".path{fill:none;stroke:#d2691e;stroke-width:5}"
      ".waypoint{fill:#d2691e;stroke:#000;stroke-width:1}"
      ".friendly{fill:#1f5fbf;stroke:#000;stroke-width:2}"
      ".enemy{fill:#c0392b;stroke:#000;stroke-width:2}"
      ".label{font-family:sans-serif;font-size:22px;fill:#111}</style>");

  w.line(R"(<g id="base">)");
  w.line(R"(<rect id="frame" class="frame" x=")" + w.x(b.x0) + R"(" y=")" + format_fixed(b.y0 * 10) + R"(" width=")" +
         format_fixed(b.width() * 10) + R"(" height=")" + format_fixed(b.height() * 10) + R"("/>)");
  for (const auto& pl : map.phase_lines) {
    w.line(R"(<g id=")" + element_id("pl", pl.name) + R"(" class="phase-line"><polyline points=")" +
           w.points(pl.points) + R"("/><text class="label" x=")" + w.x(pl.points.front().x) + R"(" y=")" +
           w.y(pl.points.front().y) + R"(">)" + xml_escape(pl.name) + "</text></g>");
  }
  w.line("</g>");

  for (const auto& name : focus.obstacles) {
    const auto& o = detail::find_named(map.obstacles, name, "obstacle");
    w.line(R"(<polygon id=")" + element_id("obstacle", o.name) + R"(" class="obstacle" points=")" +
           w.points(o.polygon) + R"("/>)");
  }
  for (const auto& name : focus.corridors) {
    const auto& c = detail::find_named(map.corridors, name, "corridor");
    w.line(R"(<polyline id=")" + element_id("corridor", c.name) + R"(" class="corridor" stroke-width=")" +
           format_fixed(c.width * 10) + R"(" points=")" + w.points(c.points) + R"("/>)");
  }
  for (const auto& name : focus.areas) {
    const auto& a = detail::find_named(map.areas, name, "area");
    const Point c = centroid(a.polygon);
    w.line(R"(<g id=")" + element_id("obj", a.name) + R"(" class="area"><polygon points=")" + w.points(a.polygon) +
           R"("/><text class="label" x=")" + w.x(c.x) + R"(" y=")" + w.y(c.y) + R"(">)" + xml_escape(a.name) +
           "</text></g>");
  }
  for (const auto& name : focus.routes) {
    const auto& r = detail::find_named(map.routes, name, "route");
    w.line(R"(<polyline id=")" + element_id("route", r.name) + R"(" class="route" points=")" + w.points(r.points) +
           R"("/>)");
  }
  for (const auto& name : focus.lanes) {
    const auto& l = detail::find_named(map.lanes, name, "lane");
    w.line(R"(<polyline id=")" + element_id("lane", l.name) + R"(" class="lane" points=")" + w.points(l.points) +
           R"("/>)");
  }
  for (const auto& id : focus.units) {
    const auto& u = *map.find_unit(id);
    const char* cls = u.affiliation == Affiliation::Friendly ? "friendly" : "enemy";
    const std::string label = u.echelon.empty() ? u.id : u.id + " (" + u.echelon + ")";
    w.line(R"(<g id=")" + element_id("unit", u.id) + R"(" class=")" + cls + R"("><rect x=")" +
           format_fixed(u.position.x * 10 - 15) + R"(" y=")" + format_fixed((b.y0 + b.y1 - u.position.y) * 10 - 10) +
           R"(" width="30" height="20"/><text class="label" x=")" + format_fixed(u.position.x * 10 + 18) + R"(" y=")" +
           w.y(u.position.y) + R"(">)" + xml_escape(label) + "</text></g>");
  }

  std::size_t marker = 0;
  for (const auto& ov : route_markers) {
    w.line(R"(<polyline id=")" + element_id("path", ov.id) + R"(" class="path" points=")" +
           w.points(ov.route.geometry) + R"("/>)");
    for (double f : ov.fractions) {
      const Point p = route_point_at_fraction(ov.route, f);
      w.line(R"(<circle id="wp-)" + std::to_string(marker++) + R"(" class="waypoint" cx=")" + w.x(p.x) +
             R"(" cy=")" + w.y(p.y) + R"(" r="8"/>)");
    }
  }
  w.line("</svg>");
  return w.take();
}

}  // namespace sforge::map
