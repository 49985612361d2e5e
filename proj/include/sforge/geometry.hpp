// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace sforge {

/// Planar coordinate in km; x grows eastward, y northward.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

using Polyline = std::vector<Point>;
using Polygon = std::vector<Point>;  // implicitly closed

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(Point p, double eps = 1e-9) const {
    return p.x >= x0 - eps && p.x <= x1 + eps && p.y >= y0 - eps && p.y <= y1 + eps;
  }
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline Point lerp(Point a, Point b, double t) {
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
}

inline Point midpoint(Point a, Point b) { return lerp(a, b, 0.5); }

inline double point_segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, a);
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, {a.x + t * dx, a.y + t * dy});
}

inline double point_polyline_distance(Point p, std::span<const Point> line) {
  if (line.empty()) return INFINITY;
  if (line.size() == 1) return distance(p, line[0]);
  double best = INFINITY;
  for (std::size_t i = 0; i + 1 < line.size(); ++i)
    best = std::min(best, point_segment_distance(p, line[i], line[i + 1]));
  return best;
}

inline double polygon_boundary_distance(Point p, std::span<const Point> poly) {
  double best = INFINITY;
  for (std::size_t i = 0; i < poly.size(); ++i)
    best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  return best;
}

/// Even-odd test; points within `eps` of the boundary are not inside.
inline bool point_strictly_inside(Point p, std::span<const Point> poly, double eps = 1e-9) {
  if (poly.size() < 3) return false;
  if (polygon_boundary_distance(p, poly) <= eps) return false;
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

/// Inside or on the boundary.
inline bool point_in_polygon(Point p, std::span<const Point> poly, double eps = 1e-9) {
  if (poly.size() >= 3 && polygon_boundary_distance(p, poly) <= eps) return true;
  return point_strictly_inside(p, poly, eps);
}

inline double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool segments_intersect(Point a, Point b, Point c, Point d) {
  auto on_segment = [](Point p, Point q, Point r) {
    return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) && std::min(p.y, r.y) <= q.y &&
           q.y <= std::max(p.y, r.y);
  };
  const double d1 = cross(c, d, a), d2 = cross(c, d, b);
  const double d3 = cross(a, b, c), d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && on_segment(c, a, d)) return true;
  if (d2 == 0 && on_segment(c, b, d)) return true;
  if (d3 == 0 && on_segment(a, c, b)) return true;
  if (d4 == 0 && on_segment(a, d, b)) return true;
  return false;
}

/// True when two non-adjacent segments of an open polyline touch.
inline bool polyline_self_intersects(std::span<const Point> line) {
  const std::size_t n = line.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 2; j + 1 < n; ++j)
      if (segments_intersect(line[i], line[i + 1], line[j], line[j + 1])) return true;
  return false;
}

/// Simple (non-self-intersecting) closed polygon with at least 3 vertices.
inline bool polygon_is_simple(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Area centroid; falls back to the vertex mean for degenerate polygons.
inline Point centroid(std::span<const Point> poly) {
  double a = 0, cx = 0, cy = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point p = poly[i], q = poly[(i + 1) % poly.size()];
    const double c = p.x * q.y - q.x * p.y;
    a += c;
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  if (std::abs(a) < 1e-12) {
    Point m{};
    for (auto p : poly) m = {m.x + p.x, m.y + p.y};
    if (!poly.empty()) m = {m.x / poly.size(), m.y / poly.size()};
    return m;
  }
  return {cx / (3 * a), cy / (3 * a)};
}

/// Number of times a ray from `p` toward -x crosses `line` (half-open rule
/// at vertices, so a vertex on the ray is counted once).
inline int westward_ray_crossings(Point p, std::span<const Point> line) {
  int count = 0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Point a = line[i], b = line[i + 1];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x < p.x) ++count;
    }
  }
  return count;
}

inline double polyline_length(std::span<const Point> line) {
  double len = 0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) len += distance(line[i], line[i + 1]);
  return len;
}

}  // namespace sforge
