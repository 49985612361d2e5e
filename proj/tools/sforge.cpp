// SPDX-License-Identifier: Apache-2.0
// sforge: validate packages, run the generation pipeline, query the map,
// review stored sessions, and serve the HTTP API.

#include <csignal>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sforge/sforge.hpp"

#ifndef SFORGE_DEFAULT_STRATEGIES
#define SFORGE_DEFAULT_STRATEGIES "strategies"
#endif

namespace {

using namespace sforge;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

bool is_validation_error(const std::string& code) {
  static const std::set<std::string> codes = {"SchemaError",       "ReferenceError", "CycleError",
                                              "DanglingEdge",      "UnknownElement", "IllegalTransition",
                                              "TimelineInvalid",   "CoverageError",  "NotReady",
                                              "AmbiguousGeometry", "Unreachable",    "ArgsError"};
  return codes.count(code) != 0;
}

struct GatewayFlags {
  std::string mode = "replay";
  std::string cassette;
  std::string script;
  std::string strategies = SFORGE_DEFAULT_STRATEGIES;
  std::size_t budget = orchestrator::kDefaultBudget;

  void add_to(CLI::App* app) {
    app->add_option("--mode", mode, "live | record | replay | scripted")->capture_default_str();
    app->add_option("--cassette", cassette, "cassette file for record/replay");
    app->add_option("--script", script, "scripted responses (scripted mode, or record upstream)");
    app->add_option("--strategies", strategies, "strategy prompt directory")->capture_default_str();
    app->add_option("--budget", budget, "step budget per task")->capture_default_str();
  }

  llm::GatewayOptions options() const {
    llm::GatewayOptions o;
    o.mode = llm::parse_mode(mode);
    o.cassette = cassette;
    o.script = script;
    return o;
  }

  // Offline modes get a logical clock so reruns are byte-identical.
  std::unique_ptr<Clock> clock() const {
    if (mode == "live") return std::make_unique<SystemClock>();
    return std::make_unique<LogicalClock>();
  }
};

std::vector<std::string> comma_split(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  for (const auto& s : in)
    for (auto& p : service::split_list(s)) out.push_back(p);
  return out;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_validate(const std::string& dir) {
  const auto s = load_package(dir);
  std::size_t documents = 0;
  for (const auto& [k, b] : s.blocks) documents += b.document ? 1 : 0;
  std::cout << "ok " << s.id << ": " << s.blocks.size() << " blocks, " << documents << " documents, "
            << s.graph.edges().size() << " dependencies\n";
  return kExitOk;
}

struct RunFlags {
  std::string dir;
  std::string store = "sforge-store";
  bool auto_approve_green = false;
  std::vector<std::string> pause_on;
  bool fresh = false;
  bool json = false;
};

int cmd_run(const RunFlags& f, const GatewayFlags& g) {
  service::RunOptions opt;
  opt.auto_approve_green = f.auto_approve_green;
  for (const auto& p : comma_split(f.pause_on))
    if (p != "none") opt.pause_on.insert(parse_level(p));

  auto clock = g.clock();
  const auto pkg = load_package(f.dir);
  const auto entry = fs::path(f.store) / pkg.id;
  if (f.fresh && fs::exists(entry)) fs::remove_all(entry);
  auto session = fs::exists(entry / "state.json") ? service::Session::open(f.store, pkg.id, *clock)
                                                    : service::Session::create_from_dir(f.store, f.dir, *clock);
  auto gateway = llm::make_gateway(g.options(), *clock);
  orchestrator::StrategyLibrary strategies(g.strategies);
  const auto report = service::run_pipeline(*session, {*gateway, strategies, g.budget}, opt);

  if (f.json) {
    print_json(report_to_json(report));
  } else {
    for (const auto& a : report.actions)
      std::cout << a.block << ": " << a.action << (a.detail.empty() ? "" : " (" + a.detail + ")") << "\n";
    std::cout << "run " << service::status_name(report.status) << "; store " << session->dir().string() << "\n";
  }
  return report.status == service::RunReport::Status::Failed ? kExitValidation : kExitOk;
}

struct MapFlags {
  std::string dir;
  std::string from;
  std::string to;
  std::size_t k = 3;
  double max_overlap = map::kDefaultMaxOverlap;
  std::vector<std::string> units, areas, routes, obstacles, corridors, lanes;
  std::string out;
};

int cmd_map_route(const MapFlags& f) {
  const auto s = load_package(f.dir);
  const auto graph = map::build_waypoint_graph(s.map, s.map.resolution.value_or(agents::kDefaultResolution));
  const auto [from, from_name] = agents::resolve_place(s.map, f.from, "--from");
  const auto [to, to_name] = agents::resolve_place(s.map, f.to, "--to");
  const auto routes = map::k_routes(graph, from, to, f.k, f.max_overlap);
  nlohmann::json list = nlohmann::json::array();
  std::vector<map::RouteOverlay> overlays;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : routes[i].geometry) pts.push_back(agents::point_json(p));
    const auto id = "r" + std::to_string(i + 1);
    list.push_back({{"id", id}, {"length_km", routes[i].total_length}, {"geometry", pts}});
    overlays.push_back({id, routes[i], {}});
  }
  print_json({{"from", f.from}, {"to", f.to}, {"routes", list}});
  if (!f.out.empty()) {
    map::ElementSelector sel;
    if (s.map.find_unit(from_name)) sel.units.push_back(from_name);
    if (s.map.find_area(to_name)) sel.areas.push_back(to_name);
    write_file_atomic(f.out, map::render_overlay(s.map, sel, overlays));
  }
  return kExitOk;
}

int cmd_map_render(const MapFlags& f) {
  const auto s = load_package(f.dir);
  map::ElementSelector sel;
  sel.units = comma_split(f.units);
  sel.areas = comma_split(f.areas);
  sel.routes = comma_split(f.routes);
  sel.obstacles = comma_split(f.obstacles);
  sel.corridors = comma_split(f.corridors);
  sel.lanes = comma_split(f.lanes);
  const auto svg = map::render_overlay(s.map, sel);
  if (f.out.empty() || f.out == "-")
    std::cout << svg;
  else
    write_file_atomic(f.out, svg);
  return kExitOk;
}

struct PredictFlags {
  std::string dir;
  std::string unit;
  std::optional<int> horizon;
  std::string out_dir = "sforge-predict";
};

int cmd_predict(const PredictFlags& f, const GatewayFlags& g) {
  auto clock = g.clock();
  const auto s = load_package(f.dir);
  auto gateway = llm::make_gateway(g.options(), *clock);
  orchestrator::StrategyLibrary strategies(g.strategies);
  const auto r = service::predict_from_package(s, f.unit, f.horizon.value_or(s.horizon), {*gateway, strategies, g.budget},
                                               f.out_dir);
  if (!r.timeline) {
    std::cerr << "error: " << r.error << ": " << r.message << "\n";
    return kExitValidation;
  }
  print_json(timeline_to_json(*r.timeline));
  return kExitOk;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const std::string& host, int port, const std::string& store, const GatewayFlags& g) {
  auto clock = g.clock();
  auto gateway = llm::make_gateway(g.options(), *clock);
  orchestrator::StrategyLibrary strategies(g.strategies);
  service::Service svc(store, {*gateway, strategies, g.budget}, *clock);
  httplib::Server server;
  svc.install(server);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "listening on " << host << ":" << port << ", store " << store << std::endl;
  if (!server.listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

struct ReviewFlags {
  std::string store = "sforge-store";
  std::string scenario;
  std::string block;
  std::string feedback;
  std::string content_file;
  int index = 0;
};

int cmd_review(const std::string& action, const ReviewFlags& f, const GatewayFlags& g) {
  auto clock = g.clock();
  auto session = service::Session::open(f.store, f.scenario, *clock);
  if (action == "status") {
    print_json(session->blocks_json());
    return kExitOk;
  }
  const auto k = BlockKind::parse(f.block);
  if (action == "trace") {
    nlohmann::json traces = nlohmann::json::array();
    for (const auto& id : session->trace_ids(k))
      traces.push_back(nlohmann::json::parse(read_file(session->traces_dir() / (id + ".json"))));
    print_json({{"block", k.name()}, {"traces", traces}});
    return kExitOk;
  }
  if (action == "generate") {
    auto gateway = llm::make_gateway(g.options(), *clock);
    orchestrator::StrategyLibrary strategies(g.strategies);
    const auto out = session->generate(k, {*gateway, strategies, g.budget});
    print_json({{"block", k.name()}, {"state", state_to_json(session->state(k))}});
    return out.ok ? kExitOk : kExitValidation;
  }
  ReviewEvent e;
  if (action == "approve")
    e = ReviewEvent::approve();
  else if (action == "reject")
    e = ReviewEvent::reject(f.feedback);
  else if (action == "edit")
    e = ReviewEvent::edit(read_file(f.content_file));
  else
    e = ReviewEvent::select_option(f.index);
  print_json({{"block", k.name()}, {"state", state_to_json(session->apply(k, e))}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sforge: scenario co-generation engine"};
  app.require_subcommand(1);

  std::string validate_dir;
  auto* validate = app.add_subcommand("validate", "check a scenario package");
  validate->add_option("dir", validate_dir)->required();

  RunFlags run_flags;
  GatewayFlags gw;
  auto* run = app.add_subcommand("run", "drive a package through the pipeline");
  run->add_option("dir", run_flags.dir)->required();
  run->add_option("--store", run_flags.store, "session store")->capture_default_str();
  run->add_flag("--auto-approve-green", run_flags.auto_approve_green, "generate green blocks");
  run->add_option("--pause-on", run_flags.pause_on, "orange|purple|none; leave those reviews to a human");
  run->add_flag("--fresh", run_flags.fresh, "discard a stored session first");
  run->add_flag("--json", run_flags.json, "print the run report as JSON");
  gw.add_to(run);

  MapFlags mf;
  auto* mapcmd = app.add_subcommand("map", "map queries");
  mapcmd->require_subcommand(1);
  auto* route = mapcmd->add_subcommand("route", "k shortest distinct routes");
  route->add_option("dir", mf.dir)->required();
  route->add_option("--from", mf.from)->required();
  route->add_option("--to", mf.to)->required();
  route->add_option("-k", mf.k)->capture_default_str();
  route->add_option("--max-overlap", mf.max_overlap)->capture_default_str();
  route->add_option("-o,--out", mf.out, "also write an SVG overlay");
  auto* render = mapcmd->add_subcommand("render", "focused SVG overlay");
  render->add_option("dir", mf.dir)->required();
  render->add_option("--units", mf.units);
  render->add_option("--areas", mf.areas);
  render->add_option("--routes", mf.routes);
  render->add_option("--obstacles", mf.obstacles);
  render->add_option("--corridors", mf.corridors);
  render->add_option("--lanes", mf.lanes);
  render->add_option("-o,--out", mf.out, "output file (default stdout)");

  PredictFlags pf;
  auto* predict = app.add_subcommand("predict", "predict one unit's positions from the package documents");
  predict->add_option("dir", pf.dir)->required();
  predict->add_option("--unit", pf.unit)->required();
  predict->add_option("--horizon", pf.horizon, "days (default: scenario horizon)");
  predict->add_option("--out-dir", pf.out_dir, "traces and artifacts")->capture_default_str();
  gw.add_to(predict);

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string serve_store = "sforge-store";
  auto* serve = app.add_subcommand("serve", "HTTP review service");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--store", serve_store)->capture_default_str();
  gw.add_to(serve);

  ReviewFlags rf;
  std::string review_action;
  auto* review = app.add_subcommand("review", "inspect or review a stored session");
  review->add_option("action", review_action, "status|approve|reject|edit|select-option|generate|trace")
      ->required()
      ->check(CLI::IsMember({"status", "approve", "reject", "edit", "select-option", "generate", "trace"}));
  review->add_option("scenario", rf.scenario)->required();
  review->add_option("block", rf.block);
  review->add_option("--store", rf.store)->capture_default_str();
  review->add_option("--feedback", rf.feedback);
  review->add_option("--content", rf.content_file, "file holding the edited content");
  review->add_option("--index", rf.index);
  gw.add_to(review);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(validate_dir);
    if (*run) return cmd_run(run_flags, gw);
    if (*predict) return cmd_predict(pf, gw);
    if (*route) return cmd_map_route(mf);
    if (*render) return cmd_map_render(mf);
    if (*serve) return cmd_serve(host, port, serve_store, gw);
    if (*review) {
      if (review_action != "status" && rf.block.empty()) {
        std::cerr << "error: " << review_action << " needs a block\n";
        return kExitValidation;
      }
      return cmd_review(review_action, rf, gw);
    }
  } catch (const sforge::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return is_validation_error(e.code()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
