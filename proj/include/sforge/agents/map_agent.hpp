// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "sforge/agents/helper.hpp"
#include "sforge/agents/observation.hpp"
#include "sforge/error.hpp"
#include "sforge/io.hpp"
#include "sforge/map/model.hpp"
#include "sforge/map/progress.hpp"
#include "sforge/map/render.hpp"
#include "sforge/map/routing.hpp"
#include "sforge/map/waypoint_graph.hpp"

namespace sforge::agents {

inline constexpr double kDefaultResolution = 5.0;
inline constexpr std::size_t kDefaultRouteCount = 3;

/// Routes proposed during one task, addressable as r1, r2, ...
struct ToolSession {
  std::map<std::string, map::Route> routes;
  std::size_t next_id = 1;

  std::string add(map::Route r) {
    auto id = "r" + std::to_string(next_id++);
    routes.emplace(id, std::move(r));
    return id;
  }
};

inline nlohmann::json point_json(Point p) { return nlohmann::json::array({p.x, p.y}); }

inline std::vector<ToolDescriptor> map_tool_descriptors() {
  const nlohmann::json names = {{"type", "array"}, {"items", {{"type", "string"}}}};
  const nlohmann::json place = {
      {"description", "unit id, area/route/lane/phase line name, or [x, y] in km"}};
  const nlohmann::json day = {{"description", "D-plus day as an integer or \"D+n\""}};
  return {
      {"list_elements", "Names of every map element by category.", {{"type", "object"}, {"properties", nlohmann::json::object()}}, false},
      {"render_focus",
       "Overlay showing the base layer plus only the named elements.",
       {{"type", "object"},
        {"properties",
         {{"units", names}, {"areas", names}, {"routes", names}, {"obstacles", names}, {"corridors", names}, {"lanes", names}}}},
       true},
      {"propose_routes",
       "Up to k diverse candidate routes between two places over the waypoint graph.",
       {{"type", "object"},
        {"properties",
         {{"from", place},
          {"to", place},
          {"k", {{"type", "integer"}, {"minimum", 1}}},
          {"max_overlap", {{"type", "number"}}}}},
        {"required", {"from", "to"}}},
       true},
      {"route_progress",
       "Position along a proposed route for a unit departing at `start` and arriving at `arrive`.",
       {{"type", "object"},
        {"properties",
         {{"route_id", {{"type", "string"}}},
          {"start", day},
          {"arrive", day},
          {"query", {{"description", "a day or a list of days"}}}}},
        {"required", {"route_id", "start", "arrive", "query"}}},
       true},
      {"locate_unit",
       "Current position of a unit and the phase lines bracketing it.",
       {{"type", "object"}, {"properties", {{"unit", {{"type", "string"}}}}}, {"required", {"unit"}}},
       true},
  };
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& args, const char* key) {
  if (!args.contains(key)) throw ArgsError(std::string("missing argument \"") + key + "\"");
  return args.at(key);
}

inline std::vector<std::string> string_list(const nlohmann::json& args, const char* key) {
  if (!args.contains(key)) return {};
  const auto& v = args.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw ArgsError(std::string("\"") + key + "\" must be a list of names");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ArgsError(std::string("\"") + key + "\" must be a list of names");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline int parse_day(const nlohmann::json& v, const char* key) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s.size() > 2 && (s[0] == 'D' || s[0] == 'd') && s[1] == '+') s = s.substr(2);
    try {
      std::size_t used = 0;
      int d = std::stoi(s, &used);
      if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
  }
  throw ArgsError(std::string("\"") + key + "\" must be a day like 3 or \"D+3\"");
}

}  // namespace detail

inline std::string bracket_text(const map::PhaseBracket& b) {
  if (b.west && b.west == b.east) return "on " + *b.west;
  return "between " + b.west_name() + " and " + b.east_name();
}

/// Resolves a place argument: unit position, area centroid, end of a named
/// route or lane, or [x, y]. The second member names the element, if any.
inline std::pair<Point, std::string> resolve_place(const map::MapModel& model, const nlohmann::json& v, const char* key) {
  if (v.is_array()) {
    if (v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ArgsError(std::string("\"") + key + "\" must be [x, y]");
    return {{v[0].get<double>(), v[1].get<double>()}, ""};
  }
  if (!v.is_string()) throw ArgsError(std::string("\"") + key + "\" must be a name or [x, y]");
  const auto name = v.get<std::string>();
  if (const auto* u = model.find_unit(name)) return {u->position, name};
  if (const auto* a = model.find_area(name)) return {centroid(a->polygon), name};
  for (const auto& r : model.routes)
    if (r.name == name) return {r.points.back(), name};
  for (const auto& l : model.lanes)
    if (l.name == name) return {l.points.back(), name};
  throw UnknownElement("unknown place: " + name);
}

/// The MAP/MCOO helper: a corpus over the map document plus visual tools.
class MapAgent {
 public:
  MapAgent(HelperAgent helper, map::MapModel model, std::shared_ptr<ArtifactStore> artifacts,
           double resolution = kDefaultResolution)
      : helper_(std::move(helper)),
        model_(std::move(model)),
        graph_(map::build_waypoint_graph(model_, model_.resolution.value_or(resolution))),
        artifacts_(std::move(artifacts)) {
    helper_.tools = map_tool_descriptors();
  }

  const HelperAgent& helper() const { return helper_; }
  const map::MapModel& model() const { return model_; }
  const map::WaypointGraph& graph() const { return graph_; }
  ArtifactStore& artifacts() { return *artifacts_; }

  bool has_tool(const std::string& name) const {
    for (const auto& t : helper_.tools)
      if (t.name == name) return true;
    return false;
  }

  /// UnknownTool and ArgsError are thrown; map-engine failures come back as
  /// error observations.
  Observation invoke_tool(const std::string& name, const nlohmann::json& args, ToolSession& session) {
    if (!has_tool(name)) throw UnknownTool("MapMcoo has no tool \"" + name + "\"");
    if (!args.is_object()) throw ArgsError("tool arguments must be a JSON object");
    try {
      if (name == "list_elements") return list_elements();
      if (name == "render_focus") return render_focus(args);
      if (name == "propose_routes") return propose_routes(args, session);
      if (name == "route_progress") return route_progress(args, session);
      return locate_unit(args);
    } catch (const ArgsError&) {
      throw;
    } catch (const Error& e) {
      return Observation::failure(e.code(), name + " failed: " + e.what());
    }
  }

 private:
  Observation list_elements() const {
    auto names = [](const auto& v) {
      std::vector<std::string> out;
      for (const auto& e : v) out.push_back(e.name);
      return out;
    };
    std::vector<const map::PhaseLine*> pls;
    for (const auto& p : model_.phase_lines) pls.push_back(&p);
    std::sort(pls.begin(), pls.end(), [](auto* a, auto* b) { return a->order < b->order; });
    std::vector<std::string> phase, units;
    for (auto* p : pls) phase.push_back(p->name);
    for (const auto& u : model_.units) units.push_back(u.id);
    Observation o;
    o.payload = {{"phase_lines", phase},           {"units", units},
                 {"areas", names(model_.areas)},   {"routes", names(model_.routes)},
                 {"lanes", names(model_.lanes)},   {"obstacles", names(model_.obstacles)},
                 {"corridors", names(model_.corridors)}};
    o.text = std::to_string(units.size()) + " units, " + std::to_string(model_.areas.size()) + " areas, " +
             std::to_string(phase.size()) + " phase lines (west to east: ";
    for (std::size_t i = 0; i < phase.size(); ++i) o.text += (i ? ", " : "") + phase[i];
    o.text += ")";
    return o;
  }

  Observation render_focus(const nlohmann::json& args) {
    map::ElementSelector sel;
    sel.units = detail::string_list(args, "units");
    sel.areas = detail::string_list(args, "areas");
    sel.routes = detail::string_list(args, "routes");
    sel.obstacles = detail::string_list(args, "obstacles");
    sel.corridors = detail::string_list(args, "corridors");
    sel.lanes = detail::string_list(args, "lanes");
    Observation o;
    o.image_ref = artifacts_->put(map::render_overlay(model_, sel));
    std::vector<std::string> all;
    for (const auto* v : {&sel.units, &sel.areas, &sel.routes, &sel.obstacles, &sel.corridors, &sel.lanes})
      all.insert(all.end(), v->begin(), v->end());
    o.text = all.empty() ? "Rendered the base layer." : "Rendered focus on";
    for (std::size_t i = 0; i < all.size(); ++i) o.text += (i ? ", " : " ") + all[i];
    if (!all.empty()) o.text += ".";
    o.payload = {{"elements", all}};
    return o;
  }

  std::pair<Point, std::string> place(const nlohmann::json& v, const char* key) const {
    return resolve_place(model_, v, key);
  }

  Observation propose_routes(const nlohmann::json& args, ToolSession& session) {
    const auto [from, from_name] = place(detail::require(args, "from"), "from");
    const auto [to, to_name] = place(detail::require(args, "to"), "to");
    std::size_t k = kDefaultRouteCount;
    if (args.contains("k")) {
      if (!args.at("k").is_number_integer() || args.at("k").get<long>() < 1) throw ArgsError("\"k\" must be a positive integer");
      k = args.at("k").get<std::size_t>();
    }
    double overlap = map::kDefaultMaxOverlap;
    if (args.contains("max_overlap")) {
      if (!args.at("max_overlap").is_number()) throw ArgsError("\"max_overlap\" must be a number");
      overlap = args.at("max_overlap").get<double>();
    }
    if (!model_.bounds.contains(from) || !model_.bounds.contains(to)) throw PreconditionError("places must lie within the map");
    auto routes = map::k_routes(graph_, from, to, k, overlap);

    map::ElementSelector sel;
    if (model_.find_unit(from_name)) sel.units.push_back(from_name);
    if (model_.find_unit(to_name)) sel.units.push_back(to_name);
    if (model_.find_area(to_name)) sel.areas.push_back(to_name);
    std::vector<map::RouteOverlay> overlays;
    nlohmann::json list = nlohmann::json::array();
    Observation o;
    o.text = std::to_string(routes.size()) + " candidate route(s):";
    for (auto& r : routes) {
      const auto id = session.add(r);
      list.push_back({{"id", id},
                      {"length_km", r.total_length},
                      {"waypoints", r.nodes.size()},
                      {"start", point_json(r.geometry.front())},
                      {"end", point_json(r.geometry.back())}});
      o.text += " " + id + " " + format_fixed(r.total_length) + " km-eq;";
      overlays.push_back({id, std::move(r), {}});
    }
    o.text.pop_back();
    o.image_ref = artifacts_->put(map::render_overlay(model_, sel, overlays));
    o.payload = {{"routes", list}};
    return o;
  }

  Observation route_progress(const nlohmann::json& args, ToolSession& session) {
    const auto& rid = detail::require(args, "route_id");
    if (!rid.is_string()) throw ArgsError("\"route_id\" must be a string");
    const int start = detail::parse_day(detail::require(args, "start"), "start");
    const int arrive = detail::parse_day(detail::require(args, "arrive"), "arrive");
    const auto& q = detail::require(args, "query");
    std::vector<int> days;
    if (q.is_array()) {
      for (const auto& d : q) days.push_back(detail::parse_day(d, "query"));
    } else {
      days.push_back(detail::parse_day(q, "query"));
    }
    if (days.empty()) throw ArgsError("\"query\" needs at least one day");
    auto it = session.routes.find(rid.get<std::string>());
    if (it == session.routes.end())
      return Observation::failure("UnknownRoute", "no proposed route " + rid.get<std::string>() +
                                                      "; call propose_routes first");
    const auto& route = it->second;
    if (arrive <= start) return Observation::failure("PreconditionError", "arrive must be after start");

    nlohmann::json samples = nlohmann::json::array();
    std::vector<double> fractions;
    Observation o;
    o.text = "Route " + it->first + ":";
    for (int d : days) {
      const auto pr = map::position_at_time(route, start, arrive, d);
      const auto ctx = map::phase_context(model_, pr.point);
      fractions.push_back(pr.fraction);
      samples.push_back({{"day", d},
                         {"fraction", pr.fraction},
                         {"pos", point_json(pr.point)},
                         {"west", ctx.west_name()},
                         {"east", ctx.east_name()}});
      o.text += " D+" + std::to_string(d) + " at (" + format_fixed(pr.point.x) + ", " + format_fixed(pr.point.y) +
                ") " + bracket_text(ctx) + ";";
    }
    o.text.pop_back();
    o.image_ref = artifacts_->put(map::render_overlay(model_, {}, {{it->first, route, fractions}}));
    o.payload = {{"route_id", it->first}, {"start", start}, {"arrive", arrive}, {"samples", samples}};
    return o;
  }

  Observation locate_unit(const nlohmann::json& args) {
    const auto& u = detail::require(args, "unit");
    if (!u.is_string()) throw ArgsError("\"unit\" must be a string");
    const auto* unit = model_.find_unit(u.get<std::string>());
    if (!unit) return Observation::failure("UnknownElement", "unknown unit: " + u.get<std::string>());
    const auto ctx = map::phase_context(model_, unit->position);
    Observation o;
    o.text = unit->id + " is at (" + format_fixed(unit->position.x) + ", " + format_fixed(unit->position.y) + ") " +
             bracket_text(ctx) + ".";
    map::ElementSelector sel;
    sel.units.push_back(unit->id);
    o.image_ref = artifacts_->put(map::render_overlay(model_, sel));
    o.payload = {{"unit", unit->id},
                 {"pos", point_json(unit->position)},
                 {"west", ctx.west_name()},
                 {"east", ctx.east_name()}};
    return o;
  }

  HelperAgent helper_;
  map::MapModel model_;
  map::WaypointGraph graph_;
  std::shared_ptr<ArtifactStore> artifacts_;
};

}  // namespace sforge::agents
