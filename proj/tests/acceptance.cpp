// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "sforge/sforge.hpp"
#include "support/oracles.hpp"
#include "support/process.hpp"
#include "support/temp_dir.hpp"

using namespace sforge;

namespace {

const std::string kPkg = SFORGE_FIXTURE_DIR;

// Failure messages for one criterion; only the first few are printed.
struct Findings {
  std::vector<std::string> problems;
  void expect(bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  }
};

struct Criterion {
  int number;
  std::string title;
  double limit_s;  // 0 = no runtime bound
  std::function<void(Findings&)> body;
};

bool rel_close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

map::MapModel fixture_map() { return map::map_from_json(nlohmann::json::parse(read_file(kPkg + "/map.json"))); }

// ---- 1 -------------------------------------------------------------------------------------

void path_oracle(Findings& f) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 8;
    const auto edges = oracle::random_connected_graph(rng, n, 0.35);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({static_cast<double>(i), 0.0});
    std::vector<std::tuple<map::NodeId, map::NodeId, double>> es;
    for (const auto& e : edges) es.emplace_back(e.a, e.b, e.w);
    const auto g = map::WaypointGraph::from_edges(pts, es);
    const std::size_t src = rng() % n;
    std::size_t dst = rng() % n;
    if (dst == src) dst = (src + 1) % n;
    const auto paths = oracle::all_simple_paths(n, edges, src, dst);
    const std::string at = "graph " + std::to_string(trial);

    const auto best = map::shortest_path(g, src, dst);
    f.expect(!paths.empty() && rel_close(best.total_length, paths[0].length), at + ": shortest length");
    f.expect(!paths.empty() && best.nodes == std::vector<map::NodeId>(paths[0].nodes.begin(), paths[0].nodes.end()),
             at + ": shortest nodes");

    const std::size_t k = 1 + rng() % 4;
    const auto routes = map::k_paths(g, src, dst, k, 1.0);
    const std::size_t expect = std::min(k, paths.size());
    if (routes.size() != expect) {
      f.expect(false, at + ": k_routes returned " + std::to_string(routes.size()) + ", oracle " + std::to_string(expect));
      continue;
    }
    std::set<std::vector<map::NodeId>> got, want;
    for (std::size_t i = 0; i < expect; ++i) {
      f.expect(rel_close(routes[i].total_length, paths[i].length), at + ": length of route " + std::to_string(i));
      got.insert(routes[i].nodes);
      want.insert(std::vector<map::NodeId>(paths[i].nodes.begin(), paths[i].nodes.end()));
    }
    f.expect(got == want, at + ": node sequences differ");
  }
}

// ---- 2 -------------------------------------------------------------------------------------

void interpolation(Findings& f) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> coord(0.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Point> pts;
    std::vector<oracle::Pt> ref;
    for (std::size_t i = 0, n = 2 + rng() % 8; i < n; ++i) {
      pts.push_back({coord(rng), coord(rng)});
      ref.push_back({pts.back().x, pts.back().y});
    }
    const auto r = map::route_from_polyline(pts);
    const std::string at = "route " + std::to_string(trial);
    f.expect(map::route_point_at_fraction(r, 0.0) == pts.front(), at + ": f=0 is not the start");
    f.expect(map::route_point_at_fraction(r, 1.0) == pts.back(), at + ": f=1 is not the end");
    const auto p = map::position_at_time(r, 0, 5, 3);
    f.expect(p.fraction == 0.6, at + ": fraction " + std::to_string(p.fraction));
    const auto q = oracle::arclength_point(ref, 0.6);
    f.expect(std::abs(p.point.x - q.x) <= 1e-9 && std::abs(p.point.y - q.y) <= 1e-9, at + ": 0.6 point off");
  }
}

// ---- 3 -------------------------------------------------------------------------------------

constexpr AutomationLevel kLevels[] = {AutomationLevel::Green, AutomationLevel::Orange, AutomationLevel::Purple};

ReviewEvent well_formed(EventTag e) {
  switch (e) {
    case EventTag::GenerationStarted: return ReviewEvent::generation_started();
    case EventTag::GenerationFinished: return ReviewEvent::generation_finished("text", {"a", "b", "c"});
    case EventTag::GenerationFailed: return ReviewEvent::generation_failed("boom");
    case EventTag::Approve: return ReviewEvent::approve();
    case EventTag::Reject: return ReviewEvent::reject("needs work");
    case EventTag::Edit: return ReviewEvent::edit("edited");
    case EventTag::SelectOption: return ReviewEvent::select_option(1);
    case EventTag::UpstreamEdited: return ReviewEvent::upstream_edited();
  }
  return {};
}

void state_machine(Findings& f) {
  const auto table = oracle::read_markdown_table(std::string(SFORGE_SOURCE_DIR) + "/docs/block_state_machine.md");
  f.expect(table.size() == 54, "table has " + std::to_string(table.size()) + " rows, expected 54");
  for (auto s : kAllStateTags)
    for (auto l : kLevels)
      for (auto e : kAllEventTags) {
        BlockState from;
        from.tag = s;
        from.content = "draft";
        from.options = {"one", "two", "three"};
        const auto key = std::make_tuple(std::string(state_name(s)), std::string(event_name(e)), std::string(level_name(l)));
        const auto it = table.find(key);
        const std::string expected = it == table.end() ? "" : it->second;
        std::string got;
        try {
          got = state_name(apply_review_event(from, l, well_formed(e)).tag);
        } catch (const IllegalTransition&) {
        }
        f.expect(got == expected, std::get<0>(key) + " × " + std::get<1>(key) + " @" + std::get<2>(key) + ": got '" +
                                      got + "', table '" + expected + "'");
      }

  std::mt19937_64 rng(3);
  for (int trace = 0; trace < 500; ++trace) {
    BlockState s;
    for (int step = 0; step < 40; ++step) {
      auto e = well_formed(kAllEventTags[rng() % kAllEventTags.size()]);
      if (e.tag == EventTag::SelectOption) e.index = static_cast<int>(rng() % 4);
      try {
        s = apply_review_event(s, AutomationLevel::Green, e);
      } catch (const IllegalTransition&) {
        continue;
      }
      f.expect(s.tag != StateTag::AwaitingReview && s.tag != StateTag::AwaitingSelection,
               "green trace reached " + std::string(state_name(s.tag)));
    }
  }
}

// ---- 4 -------------------------------------------------------------------------------------

void scheduler(Findings& f) {
  constexpr StateTag tags[] = {StateTag::Pending, StateTag::Approved, StateTag::Approved, StateTag::Rejected,
                               StateTag::Stale, StateTag::Generating, StateTag::AwaitingReview};
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const auto d = oracle::random_dag(rng, n, static_cast<double>(rng() % 60) / 100.0);
    const auto g = DependencyGraph<std::string>::build(d.nodes, d.edges);
    const std::string at = "dag " + std::to_string(trial);
    f.expect(oracle::respects_edges(d, topological_order(g)), at + ": order breaks an edge");

    std::map<std::string, BlockState> st;
    for (const auto& v : d.nodes) {
      st[v].tag = tags[rng() % std::size(tags)];
      st[v].content = v;
    }
    std::set<std::string> ready;
    for (const auto& v : d.nodes) {
      const auto t = st[v].tag;
      if (t != StateTag::Pending && t != StateTag::Rejected && t != StateTag::Stale) continue;
      bool ok = true;
      for (const auto& [a, b] : d.edges)
        if (b == v && st[a].tag != StateTag::Approved) ok = false;
      if (ok) ready.insert(v);
    }
    f.expect(ready_blocks(g, st) == ready, at + ": ready set differs");

    for (const auto& v : d.nodes) {
      const auto reach = oracle::reachable(d, v);
      const auto after = invalidate_downstream(g, v, st);
      for (const auto& u : d.nodes) {
        const bool hit = reach.count(u) && st[u].tag == StateTag::Approved;
        f.expect(after.at(u).tag == (hit ? StateTag::Stale : st[u].tag), at + ": invalidating " + v + " mislabels " + u);
      }
    }
  }
}

// ---- 5 -------------------------------------------------------------------------------------

void collect_ids(const boost::property_tree::ptree& t, std::multiset<std::string>& out) {
  for (const auto& [key, child] : t) {
    if (key == "<xmlattr>") {
      if (auto id = child.get_optional<std::string>("id")) out.insert(*id);
    } else {
      collect_ids(child, out);
    }
  }
}

std::string sanitized(const std::string& prefix, const std::string& name) {
  std::string out = prefix + "-";
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_';
  return out;
}

void rendering(Findings& f) {
  const auto m = fixture_map();
  std::mt19937_64 rng(5);
  auto subset = [&](const auto& items, auto name) {
    std::vector<std::string> out;
    for (const auto& it : items)
      if (rng() % 2) out.push_back(name(it));
    std::shuffle(out.begin(), out.end(), rng);
    return out;
  };
  for (int trial = 0; trial < 50; ++trial) {
    map::ElementSelector sel;
    sel.units = subset(m.units, [](const auto& u) { return u.id; });
    sel.areas = subset(m.areas, [](const auto& a) { return a.name; });
    sel.routes = subset(m.routes, [](const auto& r) { return r.name; });
    std::multiset<std::string> want = {"base", "frame"};
    for (const auto& pl : m.phase_lines) want.insert(sanitized("pl", pl.name));
    for (const auto& u : sel.units) want.insert(sanitized("unit", u));
    for (const auto& a : sel.areas) want.insert(sanitized("obj", a));
    for (const auto& r : sel.routes) want.insert(sanitized("route", r));

    const auto svg = map::render_overlay(m, sel);
    const std::string at = "selector " + std::to_string(trial);
    std::multiset<std::string> ids;
    try {
      std::istringstream in(svg);
      boost::property_tree::ptree tree;
      boost::property_tree::read_xml(in, tree);
      collect_ids(tree, ids);
    } catch (const std::exception& e) {
      f.expect(false, at + ": not well-formed XML: " + e.what());
      continue;
    }
    f.expect(ids == want, at + ": element ids differ");
    f.expect(map::render_overlay(m, sel) == svg, at + ": output not byte-identical");
  }
}

// ---- 6 -------------------------------------------------------------------------------------

std::map<std::string, std::string> tree_of(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  return out;
}

void end_to_end(Findings& f) {
  test::TempDir dir;
  const auto log = dir.path() / "sockets.log";
  auto run = [&](const std::string& store) {
    return test::run_process({SFORGE_CLI, "run", kPkg, "--store", (dir.path() / store).string(), "--fresh",
                              "--auto-approve-green", "--pause-on", "none", "--mode", "replay", "--cassette",
                              kPkg + "/cassettes/e2e.jsonl"},
                             dir.path(), {{"LD_PRELOAD", SFORGE_NOSOCKET_LIB}, {"SFORGE_SOCKET_LOG", log.string()}});
  };
  const auto a = run("a");
  const auto b = run("b");
  f.expect(a.exit_code == 0, "first run exited " + std::to_string(a.exit_code) + ": " + a.err);
  f.expect(b.exit_code == 0, "second run exited " + std::to_string(b.exit_code) + ": " + b.err);
  f.expect(!fs::exists(log) || read_file(log).empty(), "network sockets were opened");
  if (a.exit_code != 0) return;

  const auto entry_a = dir.path() / "a" / "mini-pacific";
  const auto entry_b = dir.path() / "b" / "mini-pacific";
  const auto traces_a = tree_of(entry_a / "traces");
  f.expect(!traces_a.empty(), "no traces written");
  f.expect(traces_a == tree_of(entry_b / "traces"), "traces differ between runs");
  f.expect(tree_of(entry_a / "outputs") == tree_of(entry_b / "outputs"), "outputs differ between runs");
  f.expect(read_file(entry_a / "state.json") == read_file(entry_b / "state.json"), "state differs between runs");

  const auto state = nlohmann::json::parse(read_file(entry_a / "state.json")).at("blocks");
  const auto& uptb = state.at("UnitPositionsTimeBased");
  const auto& som = state.at("OpordSchemeOfManeuver");
  f.expect(uptb.at("state") == "Approved", "UnitPositionsTimeBased is " + uptb.at("state").get<std::string>());
  f.expect(som.at("state") == "Approved", "OpordSchemeOfManeuver is " + som.at("state").get<std::string>());
  if (uptb.at("state") != "Approved" || som.at("state") != "Approved") return;

  const auto m = fixture_map();
  const auto timelines = timelines_from_content(uptb.at("content").get<std::string>());
  f.expect(timelines.size() == 3, "expected 3 timelines");
  bool found_25id = false;
  for (const auto& t : timelines) {
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
      f.expect(m.bounds.contains(t.samples[i].pos), t.unit + ": sample out of bounds");
      if (i) f.expect(t.samples[i].day > t.samples[i - 1].day, t.unit + ": days not strictly increasing");
    }
    if (t.unit == "25ID") {
      found_25id = true;
      const auto d5 = std::find_if(t.samples.begin(), t.samples.end(), [](const auto& s) { return s.day == 5; });
      f.expect(d5 != t.samples.end() && point_in_polygon(d5->pos, m.find_area("OBJ BRONCOS")->polygon),
               "25ID D+5 is not inside OBJ BRONCOS");
    }
  }
  f.expect(found_25id, "no 25ID timeline");

  const auto text = som.at("content").get<std::string>();
  for (const char* u : {"25ID", "3DIV", "IAD"}) f.expect(orchestrator::mentions(text, u), std::string("scheme omits ") + u);
  f.expect(std::any_of(m.phase_lines.begin(), m.phase_lines.end(),
                       [&](const auto& pl) { return orchestrator::mentions(text, pl.name); }),
           "scheme names no phase line");
}

// ---- 7 -------------------------------------------------------------------------------------

service::PredictResult replay_predict(const std::string& cassette, std::size_t budget, const fs::path& work) {
  const auto s = load_package(kPkg);
  llm::Gateway g(std::make_unique<llm::ReplayBackend>(llm::Cassette(kPkg + "/cassettes/" + cassette + ".jsonl")));
  const orchestrator::StrategyLibrary lib(SFORGE_STRATEGIES_DIR);
  return service::predict_from_package(s, "25ID", s.horizon, {g, lib, budget}, work);
}

void backtracking(Findings& f) {
  test::TempDir dir;
  const auto ok = replay_predict("malformed-then-corrected", orchestrator::kDefaultBudget, dir.path() / "m");
  f.expect(ok.timeline.has_value(), "malformed-then-corrected did not succeed: " + ok.error + " " + ok.message);
  f.expect(ok.trace.has_value(), "no trace for malformed-then-corrected");
  if (ok.trace) {
    const auto retried = std::count_if(ok.trace->steps.begin(), ok.trace->steps.end(),
                                       [](const auto& s) { return s.status == orchestrator::StepStatus::Retried; });
    f.expect(retried == 1, std::to_string(retried) + " Retried steps");
  }

  constexpr std::size_t kBudget = 5;
  const auto never = replay_predict("never-finalizing", kBudget, dir.path() / "n");
  f.expect(!never.timeline && never.error == "BudgetExhausted", "never-finalizing ended with '" + never.error + "'");
  f.expect(never.trace && never.trace->steps.size() == kBudget,
           "never-finalizing used " + std::to_string(never.trace ? never.trace->steps.size() : 0) + " steps");
}

// ---- 8 -------------------------------------------------------------------------------------

void retrieval_oracle(Findings& f) {
  const std::vector<std::string> texts = {"The river crossing at dawn", "Armor waits near the river",
                                          "Supply trucks hold position"};
  std::vector<retrieval::Document> docs;
  for (std::size_t i = 0; i < texts.size(); ++i)
    docs.push_back({"doc" + std::to_string(i), retrieval::DocumentFormat::Text, texts[i]});
  const auto corpus = retrieval::Corpus::from_documents(docs);
  const auto ranked = retrieval::retrieve_top_k(corpus, "river crossing", 5);

  // Every chunk has 5 tokens; average length 14/3; df(river) = 2, df(crossing) = 1.
  const double norm = 1.0 + 1.2 * (0.25 + 0.75 * 5.0 / (14.0 / 3.0));
  const double idf_river = std::log(1.0 + 1.5 / 2.5);
  const double idf_crossing = std::log(1.0 + 2.5 / 1.5);
  const double expected[] = {(idf_river + idf_crossing) * 2.2 / norm, idf_river * 2.2 / norm, 0.0};

  if (ranked.size() != 3) {
    f.expect(false, "ranked " + std::to_string(ranked.size()) + " chunks");
    return;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    f.expect(ranked[i].chunk->id == i, "rank " + std::to_string(i) + " holds chunk " + std::to_string(ranked[i].chunk->id));
    f.expect(std::abs(ranked[i].score - expected[i]) <= 1e-9, "chunk " + std::to_string(i) + " score " +
                                                                   std::to_string(ranked[i].score));
  }
  f.expect(ranked[2].score == 0.0, "zero-overlap chunk scored nonzero");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "shortest_route and k_routes match simple-path enumeration on 200 graphs", 10.0, path_oracle},
      {2, "interpolation endpoints exact, D+3 of D+0..D+5 is the 0.6 arclength point", 1.0, interpolation},
      {3, "state x level x event sweep matches the transition table; green skips review", 1.0, state_machine},
      {4, "topological order, ready set and invalidation on 100 DAGs match oracles", 5.0, scheduler},
      {5, "focused SVG holds exactly the selected ids, parses as XML, is byte-stable", 0.0, rendering},
      {6, "offline replay run completes, is byte-identical twice, opens no sockets", 30.0, end_to_end},
      {7, "malformed reply gives one Retried step; never-finalizing stops at budget 5", 0.0, backtracking},
      {8, "BM25 toy corpus matches hand-computed scores, zero overlap scores 0", 0.0, retrieval_oracle},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Findings f;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(f);
    } catch (const std::exception& e) {
      f.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs >= c.limit_s) f.expect(false, "took " + std::to_string(secs) + " s");
    const bool pass = f.problems.empty();
    failed += !pass;
    std::ostringstream timing;
    timing << std::fixed << std::setprecision(3) << secs << " s";
    if (c.limit_s > 0) timing << " < " << c.limit_s << " s";
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.number << ": " << c.title << " (" << timing.str() << ")\n";
    for (std::size_t i = 0; i < f.problems.size() && i < 5; ++i) std::cout << "    " << f.problems[i] << "\n";
    if (f.problems.size() > 5) std::cout << "    ... " << f.problems.size() - 5 << " more\n";
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << "\n";
  return failed ? 1 : 0;
}
