// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>

#include "sforge/error.hpp"
#include "sforge/geometry.hpp"
#include "sforge/map/model.hpp"
#include "sforge/map/routing.hpp"

namespace sforge::map {

/// Point at weighted arc-length `f * total_length` along the route. Each leg
/// advances by its edge weight, so costly terrain takes a larger share of
/// the schedule; within a leg the point moves linearly.
inline Point route_point_at_fraction(const Route& route, double f) {
  if (route.geometry.empty()) throw PreconditionError("route has no geometry");
  if (!(f >= 0.0 && f <= 1.0)) throw PreconditionError("fraction must be in [0, 1]");
  if (f == 0.0 || route.total_length <= 0.0) return route.geometry.front();
  if (f == 1.0) return route.geometry.back();
  const double target = f * route.total_length;
  double walked = 0.0;
  for (std::size_t i = 0; i < route.legs.size(); ++i) {
    const double leg = route.legs[i];
    if (walked + leg >= target) {
      const double t = leg > 0.0 ? (target - walked) / leg : 0.0;
      return lerp(route.geometry[i], route.geometry[i + 1], std::clamp(t, 0.0, 1.0));
    }
    walked += leg;
  }
  return route.geometry.back();
}

struct Progress {
  Point point;
  double fraction = 0.0;
};

/// Position on `route` at day `query` for a unit that leaves at `start` and
/// arrives at `arrive` (D-plus days).
inline Progress position_at_time(const Route& route, int start, int arrive, int query) {
  if (arrive <= start) throw PreconditionError("arrival must be after start");
  const double f = std::clamp(static_cast<double>(query - start) / static_cast<double>(arrive - start), 0.0, 1.0);
  return {route_point_at_fraction(route, f), f};
}

/// Bracketing pair of phase lines; an empty side means the map edge.
struct PhaseBracket {
  std::optional<std::string> west;
  std::optional<std::string> east;

  std::string west_name() const { return west.value_or("WestEdge"); }
  std::string east_name() const { return east.value_or("EastEdge"); }

  friend bool operator==(const PhaseBracket&, const PhaseBracket&) = default;
};

inline constexpr double kPhaseLineTolerance = 1e-6;

/// A point is east of a phase line when a westward ray from it crosses the
/// line an odd number of times. The bracket is the east-most line the point
/// has passed and the next line by `order`.
inline PhaseBracket locate_between_phase_lines(const MapModel& map, Point p) {
  if (!map.bounds.contains(p)) throw PreconditionError("point outside map bounds");
  std::vector<const PhaseLine*> lines;
  for (const auto& pl : map.phase_lines) lines.push_back(&pl);
  std::sort(lines.begin(), lines.end(), [](const PhaseLine* a, const PhaseLine* b) { return a->order < b->order; });

  const PhaseLine* west = nullptr;
  const PhaseLine* east = nullptr;
  for (const PhaseLine* pl : lines) {
    if (point_polyline_distance(p, pl->points) <= kPhaseLineTolerance)
      throw AmbiguousGeometry("point lies on " + pl->name);
    const bool passed = westward_ray_crossings(p, pl->points) % 2 == 1;
    if (passed) {
      west = pl;
    } else if (!east) {
      east = pl;
    }
  }
  if (west && east && west->order > east->order)
    throw AmbiguousGeometry("phase lines " + east->name + " and " + west->name + " are out of order at this point");
  PhaseBracket b;
  if (west) b.west = west->name;
  if (east) b.east = east->name;
  return b;
}

/// Like `locate_between_phase_lines`, but a point on a line reports that
/// line on both sides instead of failing.
inline PhaseBracket phase_context(const MapModel& map, Point p) {
  for (const auto& pl : map.phase_lines)
    if (point_polyline_distance(p, pl.points) <= kPhaseLineTolerance) return {pl.name, pl.name};
  return locate_between_phase_lines(map, p);
}

}  // namespace sforge::map
