// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "sforge/error.hpp"
#include "sforge/geometry.hpp"
#include "sforge/map/waypoint_graph.hpp"

namespace sforge::map {

/// Loopless path over a WaypointGraph. `legs[i]` is the weight of the edge
/// nodes[i] -> nodes[i+1]; `total_length` is their sum.
struct Route {
  std::vector<NodeId> nodes;
  std::vector<double> legs;
  std::vector<Point> geometry;
  double total_length = 0.0;
};

inline Route make_route(const WaypointGraph& g, std::vector<NodeId> nodes) {
  Route r;
  r.nodes = std::move(nodes);
  for (auto n : r.nodes) r.geometry.push_back(g.position(n));
  for (std::size_t i = 0; i + 1 < r.nodes.size(); ++i) {
    auto w = g.weight(r.nodes[i], r.nodes[i + 1]);
    if (!w) throw Error("GraphError", "route nodes are not adjacent");
    r.legs.push_back(*w);
    r.total_length += *w;
  }
  return r;
}

/// Route over a bare polyline with Euclidean leg weights (no graph).
inline Route route_from_polyline(std::vector<Point> pts) {
  Route r;
  r.geometry = std::move(pts);
  for (std::size_t i = 0; i < r.geometry.size(); ++i) r.nodes.push_back(i);
  for (std::size_t i = 0; i + 1 < r.geometry.size(); ++i) {
    r.legs.push_back(distance(r.geometry[i], r.geometry[i + 1]));
    r.total_length += r.legs.back();
  }
  return r;
}

namespace detail {

using EdgeKey = std::pair<NodeId, NodeId>;

inline EdgeKey edge_key(NodeId a, NodeId b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

/// Dijkstra restricted to non-blocked nodes/edges. Heap order is
/// (distance, node id); predecessors change only on strict improvement, so
/// results are deterministic.
inline std::optional<std::vector<NodeId>> dijkstra(const WaypointGraph& g, NodeId src, NodeId dst,
                                                   const std::vector<char>& blocked_nodes,
                                                   const std::set<EdgeKey>& blocked_edges) {
  const std::size_t n = g.node_count();
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr NodeId none = static_cast<NodeId>(-1);
  std::vector<double> dist(n, inf);
  std::vector<NodeId> prev(n, none);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  dist[src] = 0.0;
  heap.push({0.0, src});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    if (u == dst) break;
    for (const auto& e : g.neighbors(u)) {
      if (!blocked_nodes.empty() && blocked_nodes[e.to]) continue;
      if (!blocked_edges.empty() && blocked_edges.count(edge_key(u, e.to))) continue;
      const double nd = d + e.weight;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        prev[e.to] = u;
        heap.push({nd, e.to});
      }
    }
  }
  if (dist[dst] == inf) return std::nullopt;
  std::vector<NodeId> path;
  for (NodeId v = dst; v != none; v = prev[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

/// Minimum-weight route between two node ids.
inline Route shortest_path(const WaypointGraph& g, NodeId src, NodeId dst) {
  auto p = detail::dijkstra(g, src, dst, {}, {});
  if (!p) throw Unreachable("no path between waypoint " + std::to_string(src) + " and " + std::to_string(dst));
  return make_route(g, std::move(*p));
}

/// Snaps both points to their nearest nodes, then runs Dijkstra.
inline Route shortest_route(const WaypointGraph& g, Point src, Point dst) {
  return shortest_path(g, g.nearest(src), g.nearest(dst));
}

/// Yen's k-shortest loopless paths, produced lazily in non-decreasing length
/// order. Equal-length candidates are ordered by node sequence.
class YenEnumerator {
 public:
  YenEnumerator(const WaypointGraph& g, NodeId src, NodeId dst) : g_(g), src_(src), dst_(dst) {}

  std::optional<Route> next() {
    if (!started_) {
      started_ = true;
      auto p = detail::dijkstra(g_, src_, dst_, {}, {});
      if (!p) return std::nullopt;
      accept(make_route(g_, std::move(*p)));
      return accepted_.back();
    }
    if (accepted_.empty()) return std::nullopt;
    expand(accepted_.back());
    if (candidates_.empty()) return std::nullopt;
    auto best = *candidates_.begin();
    candidates_.erase(candidates_.begin());
    accept(make_route(g_, best.second));
    return accepted_.back();
  }

 private:
  void accept(Route r) {
    seen_.insert(r.nodes);
    accepted_.push_back(std::move(r));
  }

  void expand(const Route& last) {
    const auto& path = last.nodes;
    std::vector<char> blocked(g_.node_count(), 0);
    double root_len = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const NodeId spur = path[i];
      std::set<detail::EdgeKey> removed;
      for (const auto& a : accepted_) {
        if (a.nodes.size() > i + 1 && std::equal(path.begin(), path.begin() + static_cast<long>(i) + 1, a.nodes.begin()))
          removed.insert(detail::edge_key(a.nodes[i], a.nodes[i + 1]));
      }
      if (auto spur_path = detail::dijkstra(g_, spur, dst_, blocked, removed)) {
        std::vector<NodeId> total(path.begin(), path.begin() + static_cast<long>(i));
        total.insert(total.end(), spur_path->begin(), spur_path->end());
        if (!seen_.count(total)) {
          double len = root_len;
          for (std::size_t k = i; k + 1 < total.size(); ++k) len += *g_.weight(total[k], total[k + 1]);
          seen_.insert(total);
          candidates_.insert({len, std::move(total)});
        }
      }
      blocked[spur] = 1;
      root_len += last.legs[i];
    }
  }

  const WaypointGraph& g_;
  NodeId src_, dst_;
  bool started_ = false;
  std::vector<Route> accepted_;
  std::set<std::pair<double, std::vector<NodeId>>> candidates_;
  std::set<std::vector<NodeId>> seen_;
};

/// Share of `r`'s length that runs over edges of `other`.
inline double edge_overlap(const Route& r, const Route& other) {
  if (r.total_length <= 0.0) return 0.0;
  std::set<detail::EdgeKey> theirs;
  for (std::size_t i = 0; i + 1 < other.nodes.size(); ++i)
    theirs.insert(detail::edge_key(other.nodes[i], other.nodes[i + 1]));
  double shared = 0.0;
  for (std::size_t i = 0; i + 1 < r.nodes.size(); ++i)
    if (theirs.count(detail::edge_key(r.nodes[i], r.nodes[i + 1]))) shared += r.legs[i];
  return shared / r.total_length;
}

inline constexpr double kDefaultMaxOverlap = 0.8;

/// Up to `k` diverse routes between two node ids: Yen candidates in length
/// order, dropping any that share more than `max_overlap` of their length
/// with a route already kept. Candidate generation stops after
/// `max(50, 20k)` Yen paths, so fewer than `k` routes may come back.
inline std::vector<Route> k_paths(const WaypointGraph& g, NodeId src, NodeId dst, std::size_t k,
                                  double max_overlap = kDefaultMaxOverlap) {
  if (k < 1) throw PreconditionError("k must be at least 1");
  if (!(max_overlap > 0.0 && max_overlap <= 1.0)) throw PreconditionError("max_overlap must be in (0, 1]");
  YenEnumerator yen(g, src, dst);
  std::vector<Route> kept;
  const std::size_t cap = std::max<std::size_t>(50, 20 * k);
  for (std::size_t examined = 0; kept.size() < k && examined < cap; ++examined) {
    auto r = yen.next();
    if (!r) break;
    const bool diverse = std::all_of(kept.begin(), kept.end(),
                                     [&](const Route& o) { return edge_overlap(*r, o) <= max_overlap; });
    if (diverse) kept.push_back(std::move(*r));
  }
  if (kept.empty()) throw Unreachable("no path between waypoint " + std::to_string(src) + " and " + std::to_string(dst));
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Route& a, const Route& b) { return a.total_length < b.total_length; });
  return kept;
}

inline std::vector<Route> k_routes(const WaypointGraph& g, Point src, Point dst, std::size_t k,
                                   double max_overlap = kDefaultMaxOverlap) {
  return k_paths(g, g.nearest(src), g.nearest(dst), k, max_overlap);
}

}  // namespace sforge::map
