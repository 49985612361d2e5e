// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "sforge/error.hpp"
#include "sforge/geometry.hpp"
#include "sforge/map/model.hpp"

namespace sforge::map {

using NodeId = std::size_t;

/// Undirected weighted graph of traversable points. Adjacency lists are kept
/// sorted by neighbor id.
class WaypointGraph {
 public:
  struct Edge {
    NodeId to;
    double weight;
  };

  WaypointGraph() = default;

  /// Generic constructor; every (a, b, w) becomes a symmetric edge.
  static WaypointGraph from_edges(std::vector<Point> nodes,
                                  const std::vector<std::tuple<NodeId, NodeId, double>>& edges,
                                  double resolution = 0.0) {
    WaypointGraph g;
    g.nodes_ = std::move(nodes);
    g.adj_.assign(g.nodes_.size(), {});
    g.resolution_ = resolution;
    for (const auto& [a, b, w] : edges) g.add_edge(a, b, w);
    g.finish();
    return g;
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  double resolution() const { return resolution_; }
  Point position(NodeId n) const { return nodes_.at(n); }
  const std::vector<Point>& positions() const { return nodes_; }
  const std::vector<Edge>& neighbors(NodeId n) const { return adj_.at(n); }

  std::optional<double> weight(NodeId a, NodeId b) const {
    const auto& row = adj_.at(a);
    auto it = std::lower_bound(row.begin(), row.end(), b, [](const Edge& e, NodeId id) { return e.to < id; });
    if (it == row.end() || it->to != b) return std::nullopt;
    return it->weight;
  }

  /// Nearest node by Euclidean distance; ties go to the lowest id.
  NodeId nearest(Point p) const {
    if (nodes_.empty()) throw EmptyGraph("waypoint graph has no nodes");
    NodeId best = 0;
    double best_d = INFINITY;
    for (NodeId i = 0; i < nodes_.size(); ++i) {
      const double d = distance(p, nodes_[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

 private:
  friend WaypointGraph build_waypoint_graph(const MapModel&, double);

  void add_edge(NodeId a, NodeId b, double w) {
    if (a >= nodes_.size() || b >= nodes_.size() || a == b) throw Error("GraphError", "invalid edge endpoints");
    if (!(w > 0) || !std::isfinite(w)) throw Error("GraphError", "edge weights must be positive and finite");
    adj_[a].push_back({b, w});
    adj_[b].push_back({a, w});
  }

  void finish() {
    edge_count_ = 0;
    for (auto& row : adj_) {
      std::sort(row.begin(), row.end(), [](const Edge& x, const Edge& y) { return x.to < y.to; });
      row.erase(std::unique(row.begin(), row.end(), [](const Edge& x, const Edge& y) { return x.to == y.to; }),
                row.end());
      edge_count_ += row.size();
    }
    edge_count_ /= 2;
  }

  std::vector<Point> nodes_;
  std::vector<std::vector<Edge>> adj_;
  double resolution_ = 0.0;
  std::size_t edge_count_ = 0;
};

/// Weight multiplier for an edge whose midpoint is `mid`, or nullopt when the
/// midpoint lies inside an impassable obstacle. The largest containing
/// obstacle cost applies first, then the smallest containing corridor cost.
inline std::optional<double> edge_multiplier(const MapModel& map, Point mid) {
  double obstacle = 1.0;
  for (const auto& o : map.obstacles) {
    if (!point_strictly_inside(mid, o.polygon)) continue;
    if (o.impassable) return std::nullopt;
    obstacle = std::max(obstacle, o.cost);
  }
  double corridor = 1.0;
  for (const auto& c : map.corridors)
    if (point_polyline_distance(mid, c.points) <= c.width / 2.0) corridor = std::min(corridor, c.cost);
  return obstacle * corridor;
}

/// Grid discretization: nodes at `resolution` spacing inside the bounds
/// (minus points strictly inside impassable obstacles), 8-neighbor edges with
/// Euclidean base weight scaled by `edge_multiplier`. An explicit waypoint
/// list in the map replaces the grid.
inline WaypointGraph build_waypoint_graph(const MapModel& map, double resolution) {
  if (!(resolution > 0)) throw PreconditionError("resolution must be positive");
  WaypointGraph g;
  g.resolution_ = resolution;

  if (map.waypoints) {
    g.nodes_ = map.waypoints->nodes;
    g.adj_.assign(g.nodes_.size(), {});
    for (const auto& e : map.waypoints->edges) {
      const Point a = g.nodes_[e.a], b = g.nodes_[e.b];
      if (e.weight) {
        g.add_edge(e.a, e.b, *e.weight);
      } else if (auto m = edge_multiplier(map, midpoint(a, b))) {
        g.add_edge(e.a, e.b, distance(a, b) * *m);
      }
    }
    g.finish();
    return g;
  }

  const Rect& b = map.bounds;
  const auto nx = static_cast<std::size_t>(std::floor(b.width() / resolution + 1e-9)) + 1;
  const auto ny = static_cast<std::size_t>(std::floor(b.height() / resolution + 1e-9)) + 1;
  constexpr NodeId kNone = static_cast<NodeId>(-1);
  std::vector<NodeId> grid(nx * ny, kNone);

  for (std::size_t row = 0; row < ny; ++row) {
    for (std::size_t col = 0; col < nx; ++col) {
      const Point p{b.x0 + static_cast<double>(col) * resolution, b.y0 + static_cast<double>(row) * resolution};
      const bool blocked = std::any_of(map.obstacles.begin(), map.obstacles.end(), [&](const Obstacle& o) {
        return o.impassable && point_strictly_inside(p, o.polygon);
      });
      if (blocked) continue;
      grid[row * nx + col] = g.nodes_.size();
      g.nodes_.push_back(p);
    }
  }
  if (g.nodes_.empty()) throw EmptyGraph("every grid point lies inside an impassable obstacle");
  g.adj_.assign(g.nodes_.size(), {});

  // Forward half of the 8-neighborhood so each undirected edge is visited once.
  constexpr int offsets[4][2] = {{1, 0}, {0, 1}, {1, 1}, {-1, 1}};
  for (std::size_t row = 0; row < ny; ++row) {
    for (std::size_t col = 0; col < nx; ++col) {
      const NodeId a = grid[row * nx + col];
      if (a == kNone) continue;
      for (const auto& off : offsets) {
        const auto c2 = static_cast<long>(col) + off[0];
        const auto r2 = static_cast<long>(row) + off[1];
        if (c2 < 0 || r2 < 0 || c2 >= static_cast<long>(nx) || r2 >= static_cast<long>(ny)) continue;
        const NodeId bnode = grid[static_cast<std::size_t>(r2) * nx + static_cast<std::size_t>(c2)];
        if (bnode == kNone) continue;
        const Point pa = g.nodes_[a], pb = g.nodes_[bnode];
        if (auto m = edge_multiplier(map, midpoint(pa, pb))) g.add_edge(a, bnode, distance(pa, pb) * *m);
      }
    }
  }
  g.finish();
  return g;
}

}  // namespace sforge::map
