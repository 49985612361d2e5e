// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used by the tests. None of them
// call into the library code they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

// ---- transition table ------------------------------------------------------

/// (state, event, level) -> next state, "" for an illegal cell. Read from the
/// markdown table in docs/block_state_machine.md.
using TransitionTable = std::map<std::tuple<std::string, std::string, std::string>, std::string>;

inline std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (std::size_t i = 1; i < line.size(); ++i) {
    if (line[i] == '|') {
      auto b = cur.find_first_not_of(' ');
      auto e = cur.find_last_not_of(' ');
      cells.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
      cur.clear();
    } else {
      cur += line[i];
    }
  }
  return cells;
}

inline TransitionTable read_markdown_table(const std::string& path) {
  std::ifstream in(path);
  TransitionTable t;
  std::vector<std::string> header;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("| State |", 0) == 0) {
      header = split_row(line);
      continue;
    }
    if (header.empty() || line.empty() || line[0] != '|' || line.rfind("|---", 0) == 0) continue;
    auto cells = split_row(line);
    for (std::size_t c = 2; c < cells.size() && c < header.size(); ++c)
      t[{cells[0], cells[1], header[c]}] = cells[c] == "\xE2\x80\x94" ? "" : cells[c];
  }
  return t;
}

// ---- simple paths ----------------------------------------------------------

struct WeightedEdge {
  std::size_t a, b;
  double w;
};

struct Path {
  std::vector<std::size_t> nodes;
  double length = 0.0;
};

/// Every simple path from src to dst in an undirected graph, sorted by
/// (length, node sequence).
inline std::vector<Path> all_simple_paths(std::size_t n, const std::vector<WeightedEdge>& edges, std::size_t src,
                                          std::size_t dst) {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& e : edges) {
    adj[e.a].push_back({e.b, e.w});
    adj[e.b].push_back({e.a, e.w});
  }
  std::vector<Path> out;
  std::vector<char> on(n, 0);
  Path cur;
  std::function<void(std::size_t)> dfs = [&](std::size_t v) {
    cur.nodes.push_back(v);
    on[v] = 1;
    if (v == dst) {
      out.push_back(cur);
    } else {
      for (auto [u, w] : adj[v]) {
        if (on[u]) continue;
        cur.length += w;
        dfs(u);
        cur.length -= w;
      }
    }
    on[v] = 0;
    cur.nodes.pop_back();
  };
  dfs(src);
  // Recompute lengths left to right so the sums do not carry dfs rounding.
  for (auto& p : out) {
    p.length = 0.0;
    for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i)
      for (auto [u, w] : adj[p.nodes[i]])
        if (u == p.nodes[i + 1]) {
          p.length += w;
          break;
        }
  }
  std::sort(out.begin(), out.end(), [](const Path& x, const Path& y) {
    return std::tie(x.length, x.nodes) < std::tie(y.length, y.nodes);
  });
  return out;
}

/// Random connected undirected graph: a random spanning tree plus extra
/// edges, weights uniform in [1, 10).
inline std::vector<WeightedEdge> random_connected_graph(std::mt19937_64& rng, std::size_t n, double extra_p) {
  std::uniform_real_distribution<double> weight(1.0, 10.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<WeightedEdge> edges;
  for (std::size_t v = 1; v < n; ++v) {
    std::uniform_int_distribution<std::size_t> parent(0, v - 1);
    const auto p = parent(rng);
    seen.insert({p, v});
    edges.push_back({p, v, weight(rng)});
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (!seen.count({a, b}) && coin(rng) < extra_p) {
        seen.insert({a, b});
        edges.push_back({a, b, weight(rng)});
      }
  return edges;
}

// ---- DAGs ------------------------------------------------------------------

struct Dag {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
};

/// Random DAG: nodes get distinct random names; an edge only goes from an
/// earlier to a later position of a random permutation.
inline Dag random_dag(std::mt19937_64& rng, std::size_t n, double p) {
  Dag d;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  std::shuffle(names.begin(), names.end(), rng);
  d.nodes = names;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng) < p) d.edges.push_back({names[i], names[j]});
  std::shuffle(d.nodes.begin(), d.nodes.end(), rng);
  return d;
}

inline bool respects_edges(const Dag& d, const std::vector<std::string>& order) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  if (pos.size() != d.nodes.size()) return false;
  for (const auto& [a, b] : d.edges)
    if (!pos.count(a) || !pos.count(b) || pos[a] >= pos[b]) return false;
  return true;
}

/// Lexicographically least topological order, by depth-first enumeration of
/// orders with candidates tried in ascending name order; the first complete
/// order found is the least one.
inline std::vector<std::string> least_topological_order(const Dag& d) {
  std::vector<std::string> sorted = d.nodes;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::string> order;
  std::set<std::string> used;
  std::function<bool()> extend = [&]() -> bool {
    if (order.size() == sorted.size()) return true;
    for (const auto& n : sorted) {
      if (used.count(n)) continue;
      bool free = true;
      for (const auto& [a, b] : d.edges)
        if (b == n && !used.count(a)) free = false;
      if (!free) continue;
      order.push_back(n);
      used.insert(n);
      if (extend()) return true;
      used.erase(n);
      order.pop_back();
    }
    return false;
  };
  extend();
  return order;
}

/// Minimum over every permutation that respects the edges. Only for small n.
inline std::vector<std::string> least_order_by_permutation(const Dag& d) {
  std::vector<std::string> perm = d.nodes;
  std::sort(perm.begin(), perm.end());
  do {
    if (respects_edges(d, perm)) return perm;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {};
}

/// Nodes reachable from `from` along one or more edges.
inline std::set<std::string> reachable(const Dag& d, const std::string& from) {
  std::set<std::string> seen;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [a, b] : d.edges)
      if ((a == from || seen.count(a)) && !seen.count(b)) {
        seen.insert(b);
        grew = true;
      }
  }
  return seen;
}

// ---- polylines -------------------------------------------------------------

struct Pt {
  double x, y;
};

/// Point at arc length `f * total` measured with Euclidean segment lengths.
inline Pt arclength_point(const std::vector<Pt>& line, double f) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i)
    total += std::hypot(line[i + 1].x - line[i].x, line[i + 1].y - line[i].y);
  double left = f * total;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const double seg = std::hypot(line[i + 1].x - line[i].x, line[i + 1].y - line[i].y);
    if (left <= seg) {
      const double t = seg > 0 ? left / seg : 0.0;
      return {line[i].x + t * (line[i + 1].x - line[i].x), line[i].y + t * (line[i + 1].y - line[i].y)};
    }
    left -= seg;
  }
  return line.back();
}

// ---- BM25 ------------------------------------------------------------------

/// Okapi BM25 over pre-tokenized documents, written out term by term.
inline double bm25(const std::vector<std::vector<std::string>>& docs, std::size_t d,
                   const std::vector<std::string>& query, double k1 = 1.2, double b = 0.75) {
  const double n = static_cast<double>(docs.size());
  double avgdl = 0.0;
  for (const auto& doc : docs) avgdl += static_cast<double>(doc.size());
  avgdl /= n;
  const double dl = static_cast<double>(docs[d].size());
  double score = 0.0;
  for (const auto& q : query) {
    double df = 0.0;
    for (const auto& doc : docs)
      if (std::find(doc.begin(), doc.end(), q) != doc.end()) df += 1.0;
    const double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), q));
    if (tf == 0.0) continue;
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
  }
  return score;
}

}  // namespace oracle
