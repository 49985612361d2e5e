// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sforge/block.hpp"
#include "sforge/error.hpp"
#include "sforge/state_machine.hpp"

namespace sforge {

inline std::string node_name(const std::string& s) { return s; }

/// Immutable DAG; an edge (from, to) means `to` consumes `from`.
/// `Node` must be totally ordered; the order doubles as the tie-break for
/// topological sorting (for BlockKind that is the lexicographic name).
template <class Node>
class DependencyGraph {
 public:
  using Edge = std::pair<Node, Node>;

  static DependencyGraph build(const std::vector<Node>& nodes, const std::vector<Edge>& edges) {
    DependencyGraph g;
    for (const auto& n : nodes) {
      g.nodes_.insert(n);
      g.out_[n];
      g.in_[n];
    }
    for (const auto& [from, to] : edges) {
      if (!g.nodes_.count(from) || !g.nodes_.count(to))
        throw DanglingEdge("edge " + node_name(from) + " -> " + node_name(to) + " references an unknown node");
      g.edges_.insert({from, to});
      g.out_[from].insert(to);
      g.in_[to].insert(from);
    }
    if (auto cycle = g.find_cycle(); !cycle.empty()) {
      std::vector<std::string> names;
      for (const auto& n : cycle) names.push_back(node_name(n));
      throw CycleError(std::move(names));
    }
    return g;
  }

  const std::set<Node>& nodes() const { return nodes_; }
  const std::set<Edge>& edges() const { return edges_; }
  bool contains(const Node& n) const { return nodes_.count(n) != 0; }
  const std::set<Node>& parents(const Node& n) const { return in_.at(n); }
  const std::set<Node>& children(const Node& n) const { return out_.at(n); }
  std::size_t in_degree(const Node& n) const { return in_.at(n).size(); }

  /// Every node reachable from `n` by one or more edges.
  std::set<Node> descendants(const Node& n) const {
    std::set<Node> seen;
    std::vector<Node> stack(out_.at(n).begin(), out_.at(n).end());
    while (!stack.empty()) {
      Node cur = stack.back();
      stack.pop_back();
      if (!seen.insert(cur).second) continue;
      for (const auto& c : out_.at(cur))
        if (!seen.count(c)) stack.push_back(c);
    }
    return seen;
  }

 private:
  std::vector<Node> find_cycle() const {
    enum Color { White, Grey, Black };
    std::map<Node, Color> color;
    std::vector<Node> path;
    std::vector<Node> found;
    auto dfs = [&](auto&& self, const Node& n) -> bool {
      color[n] = Grey;
      path.push_back(n);
      for (const auto& c : out_.at(n)) {
        if (color[c] == Grey) {
          auto it = std::find(path.begin(), path.end(), c);
          found.assign(it, path.end());
          found.push_back(c);
          return true;
        }
        if (color[c] == White && self(self, c)) return true;
      }
      path.pop_back();
      color[n] = Black;
      return false;
    };
    for (const auto& n : nodes_)
      if (color[n] == White && dfs(dfs, n)) return found;
    return {};
  }

  std::set<Node> nodes_;
  std::set<Edge> edges_;
  std::map<Node, std::set<Node>> out_;
  std::map<Node, std::set<Node>> in_;
};

/// Kahn's algorithm, always emitting the least available node.
template <class Node>
std::vector<Node> topological_order(const DependencyGraph<Node>& g) {
  std::map<Node, std::size_t> indegree;
  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> ready;
  for (const auto& n : g.nodes()) {
    indegree[n] = g.in_degree(n);
    if (indegree[n] == 0) ready.push(n);
  }
  std::vector<Node> order;
  order.reserve(g.nodes().size());
  while (!ready.empty()) {
    Node n = ready.top();
    ready.pop();
    order.push_back(n);
    for (const auto& c : g.children(n))
      if (--indegree[c] == 0) ready.push(c);
  }
  return order;
}

/// Blocks that may start generating: not yet (or no longer) approved, not in
/// flight, and every parent Approved.
template <class Node>
std::set<Node> ready_blocks(const DependencyGraph<Node>& g, const std::map<Node, BlockState>& states) {
  std::set<Node> out;
  for (const auto& n : g.nodes()) {
    const auto tag = states.at(n).tag;
    if (tag != StateTag::Pending && tag != StateTag::Ready && tag != StateTag::Rejected && tag != StateTag::Stale)
      continue;
    const auto& ps = g.parents(n);
    if (std::all_of(ps.begin(), ps.end(), [&](const Node& p) { return states.at(p).tag == StateTag::Approved; }))
      out.insert(n);
  }
  return out;
}

/// The Approved descendants of `edited`, i.e. what an edit invalidates.
template <class Node>
std::set<Node> invalidated_by(const DependencyGraph<Node>& g, const Node& edited,
                              const std::map<Node, BlockState>& states) {
  std::set<Node> out;
  for (const auto& d : g.descendants(edited))
    if (states.at(d).tag == StateTag::Approved) out.insert(d);
  return out;
}

template <class Node>
std::map<Node, BlockState> invalidate_downstream(const DependencyGraph<Node>& g, const Node& edited,
                                                 std::map<Node, BlockState> states) {
  for (const auto& d : invalidated_by(g, edited, states))
    states[d] = apply_review_event(states[d], AutomationLevel::Green, ReviewEvent::upstream_edited());
  return states;
}

// ---- graph.json ------------------------------------------------------------

using BlockGraph = DependencyGraph<BlockKind>;

inline BlockGraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges"))
    throw SchemaError("graph document needs \"nodes\" and \"edges\"");
  std::vector<BlockKind> nodes;
  for (const auto& n : j.at("nodes")) nodes.push_back(n.get<BlockKind>());
  std::vector<BlockGraph::Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw SchemaError("graph edges are [from, to] pairs");
    edges.emplace_back(e[0].get<BlockKind>(), e[1].get<BlockKind>());
  }
  return BlockGraph::build(nodes, edges);
}

inline nlohmann::json graph_to_json(const BlockGraph& g) {
  nlohmann::json nodes = nlohmann::json::array(), edges = nlohmann::json::array();
  for (const auto& n : g.nodes()) nodes.push_back(n.name());
  for (const auto& [a, b] : g.edges()) edges.push_back({a.name(), b.name()});
  return {{"nodes", nodes}, {"edges", edges}};
}

/// Built-in graph; identical to `config/graph.json`.
inline BlockGraph default_block_graph() {
  using T = BlockTag;
  std::vector<BlockKind> nodes(kFixedBlockTags.begin(), kFixedBlockTags.end());
  std::vector<BlockGraph::Edge> edges = {
      {T::HighLevelUnitPurpose, T::UnitPositionsTimeBased},
      {T::DecisionSupportMatrix, T::UnitPositionsTimeBased},
      {T::MapMcoo, T::UnitPositionsTimeBased},
      {T::HighLevelUnitPurpose, T::OpordSchemeOfManeuver},
      {T::UnitPositionsTimeBased, T::OpordSchemeOfManeuver},
      {T::DecisionSupportMatrix, T::OpordSchemeOfManeuver},
      {T::MapMcoo, T::OpordSchemeOfManeuver},
      // reconstructed from the block descriptions
      {T::Backstory, T::RedBlueObjectives},
      {T::LearningObjectives, T::ForceGroupings},
      {T::ForceGroupings, T::HighLevelUnitPurpose},
      {T::RedBlueObjectives, T::HighLevelUnitPurpose},
      {T::MapMcoo, T::DecisionSupportMatrix},
  };
  return BlockGraph::build(nodes, edges);
}

}  // namespace sforge
