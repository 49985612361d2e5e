// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sforge/block.hpp"
#include "sforge/dag.hpp"
#include "sforge/error.hpp"
#include "sforge/io.hpp"
#include "sforge/map/model.hpp"
#include "sforge/map/progress.hpp"
#include "sforge/state_machine.hpp"

namespace sforge {

struct ForceUnit {
  std::string id;
  std::string name;
  std::string echelon;
  std::string affiliation;  // friendly | enemy
  std::string higher;       // parent unit id, may be empty
};

struct Objective {
  std::string id;
  std::string side;  // blue | red
  std::string text;
  std::string area;  // map element, may be empty
};

struct UnitPurpose {
  std::string unit;
  std::string purpose;
  std::string objective;  // map element, may be empty
};

struct DecisionTrigger {
  std::string id;
  std::string unit;
  std::string condition;
  std::string effect;
  std::optional<std::string> reference_point;
};

struct TimelineSample {
  int day = 0;
  Point pos;
  std::string west;
  std::string east;
};

struct UnitPositionTimeline {
  std::string unit;
  std::string route_id;
  std::vector<TimelineSample> samples;
};

/// Throws TimelineInvalid unless times strictly increase and every position
/// lies within the map bounds.
inline void validate_timeline(const UnitPositionTimeline& t, const map::MapModel& m) {
  if (t.samples.empty()) throw TimelineInvalid(t.unit + ": timeline has no samples");
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    const auto& s = t.samples[i];
    if (i && s.day <= t.samples[i - 1].day) throw TimelineInvalid(t.unit + ": sample days must strictly increase");
    if (!std::isfinite(s.pos.x) || !std::isfinite(s.pos.y) || !m.bounds.contains(s.pos))
      throw TimelineInvalid(t.unit + ": D+" + std::to_string(s.day) + " position lies outside the map");
  }
}

inline nlohmann::json timeline_to_json(const UnitPositionTimeline& t) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : t.samples)
    samples.push_back({{"day", s.day}, {"pos", {s.pos.x, s.pos.y}}, {"west", s.west}, {"east", s.east}});
  nlohmann::json j = {{"unit", t.unit}, {"samples", samples}};
  if (!t.route_id.empty()) j["route_id"] = t.route_id;
  return j;
}

inline UnitPositionTimeline timeline_from_json(const nlohmann::json& j) {
  UnitPositionTimeline t;
  t.unit = j.at("unit").get<std::string>();
  t.route_id = j.value("route_id", std::string{});
  for (const auto& s : j.at("samples"))
    t.samples.push_back({s.at("day").get<int>(),
                         {s.at("pos").at(0).get<double>(), s.at("pos").at(1).get<double>()},
                         s.value("west", std::string{}),
                         s.value("east", std::string{})});
  return t;
}

/// `{"timelines": [...]}`, the content of an UnitPositionsTimeBased block.
inline std::vector<UnitPositionTimeline> timelines_from_content(const std::string& content) {
  std::vector<UnitPositionTimeline> out;
  try {
    const auto doc = nlohmann::json::parse(content);
    for (const auto& t : doc.at("timelines")) out.push_back(timeline_from_json(t));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("unit positions: ") + e.what());
  }
  return out;
}

struct InformationBlock {
  BlockKind kind;
  AutomationLevel level;
  std::optional<std::string> document;  // package-supplied content
};

/// Package file names of the structured documents, by block.
inline std::optional<std::string> package_document_name(const BlockKind& k) {
  switch (k.tag()) {
    case BlockTag::Backstory: return "backstory.md";
    case BlockTag::LearningObjectives: return "learning_objectives.md";
    case BlockTag::ForceGroupings: return "force_groupings.json";
    case BlockTag::RedBlueObjectives: return "objectives.json";
    case BlockTag::HighLevelUnitPurpose: return "unit_purposes.json";
    case BlockTag::DecisionSupportMatrix: return "dsm.json";
    default: return std::nullopt;
  }
}

struct Scenario {
  std::string id;
  std::string title;
  std::string map_ref;
  int horizon = 5;
  std::optional<std::string> graph_ref;
  std::optional<std::string> automation_ref;
  std::map<BlockKind, InformationBlock> blocks;
  std::vector<BlockKind> block_order;  // as listed in scenario.json
  BlockGraph graph;
  AutomationTable automation = AutomationTable::defaults();
  map::MapModel map;
  std::vector<ForceUnit> forces;
  std::vector<Objective> objectives;
  std::vector<UnitPurpose> purposes;
  std::vector<DecisionTrigger> triggers;

  AutomationLevel level_of(const BlockKind& k) const { return automation.level_of(k); }

  std::map<BlockKind, BlockState> initial_states() const {
    std::map<BlockKind, BlockState> s;
    for (const auto& [k, _] : blocks) s[k] = BlockState::pending();
    return s;
  }

  std::vector<std::string> friendly_units() const {
    std::vector<std::string> out;
    for (const auto& u : forces)
      if (u.affiliation == "friendly") out.push_back(u.id);
    return out;
  }

  const ForceUnit* find_force(const std::string& id) const {
    for (const auto& u : forces)
      if (u.id == id) return &u;
    return nullptr;
  }
};

namespace detail {

inline nlohmann::json parse_json(const std::string& text, const std::string& where) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

inline std::string req_string(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(where + ": missing \"" + key + "\"");
  if (!j.at(key).is_string() || j.at(key).get<std::string>().empty())
    throw SchemaError(where + ": \"" + key + "\" must be a non-empty string");
  return j.at(key).get<std::string>();
}

inline std::string opt_string(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return {};
  if (!j.at(key).is_string()) throw SchemaError(where + ": \"" + key + "\" must be a string");
  return j.at(key).get<std::string>();
}

inline const nlohmann::json& req_array(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_array())
    throw SchemaError(where + ": \"" + key + "\" must be an array");
  return j.at(key);
}

}  // namespace detail

// ---- structured documents ----------------------------------------------------

inline std::vector<ForceUnit> parse_force_groupings(const std::string& text, const map::MapModel& m) {
  const auto j = detail::parse_json(text, "force_groupings.json");
  std::vector<ForceUnit> out;
  std::set<std::string> ids;
  for (const auto& uj : detail::req_array(j, "units", "force_groupings.json")) {
    ForceUnit u;
    u.id = detail::req_string(uj, "id", "force unit");
    const std::string where = "force unit " + u.id;
    u.name = detail::opt_string(uj, "name", where);
    u.echelon = detail::opt_string(uj, "echelon", where);
    u.affiliation = detail::req_string(uj, "affiliation", where);
    if (u.affiliation != "friendly" && u.affiliation != "enemy")
      throw SchemaError(where + ": affiliation must be friendly|enemy");
    u.higher = detail::opt_string(uj, "higher", where);
    if (!ids.insert(u.id).second) throw SchemaError("duplicate force unit " + u.id);
    if (!m.find_unit(u.id)) throw ReferenceError(where + " is not placed on the map");
    out.push_back(std::move(u));
  }
  for (const auto& u : out)
    if (!u.higher.empty() && !ids.count(u.higher)) throw ReferenceError("force unit " + u.id + ": unknown higher unit " + u.higher);
  return out;
}

inline void check_unit_ref(const std::vector<ForceUnit>& forces, const std::string& id, const std::string& where) {
  for (const auto& u : forces)
    if (u.id == id) return;
  throw ReferenceError(where + ": unit \"" + id + "\" is not in the force groupings");
}

inline void check_map_ref(const map::MapModel& m, const std::string& name, const std::string& where) {
  if (!m.has_element(name)) throw ReferenceError(where + ": map element \"" + name + "\" does not exist");
}

inline std::vector<Objective> parse_objectives(const std::string& text, const map::MapModel& m) {
  const auto j = detail::parse_json(text, "objectives.json");
  std::vector<Objective> out;
  for (const auto& oj : detail::req_array(j, "objectives", "objectives.json")) {
    Objective o;
    o.id = detail::req_string(oj, "id", "objective");
    o.side = detail::req_string(oj, "side", "objective " + o.id);
    if (o.side != "blue" && o.side != "red") throw SchemaError("objective " + o.id + ": side must be blue|red");
    o.text = detail::req_string(oj, "text", "objective " + o.id);
    o.area = detail::opt_string(oj, "area", "objective " + o.id);
    if (!o.area.empty()) check_map_ref(m, o.area, "objective " + o.id);
    out.push_back(std::move(o));
  }
  return out;
}

inline std::vector<UnitPurpose> parse_unit_purposes(const std::string& text, const std::vector<ForceUnit>& forces,
                                                    const map::MapModel& m) {
  const auto j = detail::parse_json(text, "unit_purposes.json");
  std::vector<UnitPurpose> out;
  for (const auto& pj : detail::req_array(j, "purposes", "unit_purposes.json")) {
    UnitPurpose p;
    p.unit = detail::req_string(pj, "unit", "unit purpose");
    p.purpose = detail::req_string(pj, "purpose", "unit purpose " + p.unit);
    p.objective = detail::opt_string(pj, "objective", "unit purpose " + p.unit);
    check_unit_ref(forces, p.unit, "unit purpose");
    if (!p.objective.empty()) check_map_ref(m, p.objective, "unit purpose " + p.unit);
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<DecisionTrigger> parse_dsm(const std::string& text, const std::vector<ForceUnit>& forces,
                                              const map::MapModel& m) {
  const auto j = detail::parse_json(text, "dsm.json");
  std::vector<DecisionTrigger> out;
  std::set<std::string> ids;
  for (const auto& tj : detail::req_array(j, "triggers", "dsm.json")) {
    DecisionTrigger t;
    t.id = detail::req_string(tj, "id", "trigger");
    const std::string where = "trigger " + t.id;
    t.unit = detail::req_string(tj, "unit", where);
    t.condition = detail::req_string(tj, "condition", where);
    t.effect = detail::req_string(tj, "effect", where);
    if (tj.contains("reference_point")) t.reference_point = detail::req_string(tj, "reference_point", where);
    if (!ids.insert(t.id).second) throw SchemaError("duplicate trigger " + t.id);
    check_unit_ref(forces, t.unit, where);
    if (t.reference_point) check_map_ref(m, *t.reference_point, where);
    out.push_back(std::move(t));
  }
  return out;
}

// ---- package -----------------------------------------------------------------

/// Returns the named package file, or nullopt when absent.
using Resolver = std::function<std::optional<std::string>(const std::string&)>;

inline Resolver directory_resolver(const fs::path& dir) {
  return [dir](const std::string& name) -> std::optional<std::string> {
    if (name.find("..") != std::string::npos || name.empty() || name.front() == '/') return std::nullopt;
    const auto p = dir / name;
    if (!fs::is_regular_file(p)) return std::nullopt;
    return read_file(p);
  };
}

inline Resolver map_resolver(std::map<std::string, std::string> files) {
  return [files = std::move(files)](const std::string& name) -> std::optional<std::string> {
    auto it = files.find(name);
    if (it == files.end()) return std::nullopt;
    return it->second;
  };
}

/// Parses `scenario.json` and everything it references. All blocks start
/// Pending; package documents are attached to their blocks.
inline Scenario load_scenario(const std::string& document, const Resolver& resolve) {
  const auto j = detail::parse_json(document, "scenario.json");
  if (!j.is_object()) throw SchemaError("scenario.json must be an object");
  static const std::set<std::string> known = {"id", "title", "map_ref", "blocks", "horizon", "graph", "automation"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw SchemaError("scenario.json: unknown field \"" + key + "\"");

  Scenario s;
  s.id = detail::req_string(j, "id", "scenario.json");
  for (char c : s.id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'))
      throw SchemaError("scenario.json: id may contain only letters, digits, '-' and '_'");
  s.title = detail::req_string(j, "title", "scenario.json");
  s.map_ref = detail::req_string(j, "map_ref", "scenario.json");
  if (j.contains("horizon")) {
    if (!j.at("horizon").is_number_integer() || j.at("horizon").get<int>() < 0)
      throw SchemaError("scenario.json: horizon must be a non-negative integer");
    s.horizon = j.at("horizon").get<int>();
  }
  if (j.contains("graph")) s.graph_ref = detail::req_string(j, "graph", "scenario.json");
  if (j.contains("automation")) s.automation_ref = detail::req_string(j, "automation", "scenario.json");

  std::set<std::string> section_names;
  for (const auto& bj : detail::req_array(j, "blocks", "scenario.json")) {
    if (!bj.is_string()) throw SchemaError("scenario.json: blocks are kind names");
    const auto kind = BlockKind::parse(bj.get<std::string>());
    if (kind.tag() == BlockTag::OpordSection && !section_names.insert(kind.section()).second)
      throw SchemaError("duplicate OPORD section " + kind.section());
    if (s.blocks.count(kind)) throw SchemaError("duplicate block " + kind.name());
    s.blocks.emplace(kind, InformationBlock{kind, AutomationLevel::Green, std::nullopt});
    s.block_order.push_back(kind);
  }

  auto need = [&](const std::string& name) {
    auto text = resolve(name);
    if (!text) throw ReferenceError("package file \"" + name + "\" not found");
    return *text;
  };

  if (s.automation_ref) s.automation = AutomationTable::from_json(detail::parse_json(need(*s.automation_ref), *s.automation_ref));
  for (auto& [k, b] : s.blocks) b.level = s.automation.level_of(k);

  if (s.graph_ref) {
    s.graph = graph_from_json(detail::parse_json(need(*s.graph_ref), *s.graph_ref));
  } else {
    auto def = default_block_graph();
    std::vector<BlockKind> nodes;
    std::vector<BlockGraph::Edge> edges;
    for (const auto& [k, _] : s.blocks) nodes.push_back(k);
    for (const auto& [a, b] : def.edges())
      if (s.blocks.count(a) && s.blocks.count(b)) edges.emplace_back(a, b);
    s.graph = BlockGraph::build(nodes, edges);
  }
  for (const auto& n : s.graph.nodes())
    if (!s.blocks.count(n)) throw SchemaError("dependency graph node " + n.name() + " is not a scenario block");
  if (s.graph.nodes().size() != s.blocks.size()) {
    std::vector<BlockKind> nodes;
    for (const auto& [k, _] : s.blocks) nodes.push_back(k);
    s.graph = BlockGraph::build(nodes, {s.graph.edges().begin(), s.graph.edges().end()});
  }

  const auto map_text = need(s.map_ref);
  s.map = map::map_from_json(detail::parse_json(map_text, s.map_ref));
  if (s.blocks.count(BlockTag::MapMcoo)) s.blocks.at(BlockTag::MapMcoo).document = map_text;

  auto doc = [&](BlockTag tag) -> std::optional<std::string> {
    auto name = package_document_name(tag);
    auto text = resolve(*name);
    if (text && s.blocks.count(tag)) s.blocks.at(tag).document = *text;
    return text;
  };
  if (auto t = doc(BlockTag::ForceGroupings)) s.forces = parse_force_groupings(*t, s.map);
  if (auto t = doc(BlockTag::RedBlueObjectives)) s.objectives = parse_objectives(*t, s.map);
  if (auto t = doc(BlockTag::HighLevelUnitPurpose)) s.purposes = parse_unit_purposes(*t, s.forces, s.map);
  if (auto t = doc(BlockTag::DecisionSupportMatrix)) s.triggers = parse_dsm(*t, s.forces, s.map);
  doc(BlockTag::Backstory);
  doc(BlockTag::LearningObjectives);
  return s;
}

inline Scenario load_package(const fs::path& dir) {
  const auto resolve = directory_resolver(dir);
  auto doc = resolve("scenario.json");
  if (!doc) throw SchemaError(dir.string() + ": no scenario.json");
  return load_scenario(*doc, resolve);
}

/// Inverse of `load_scenario` for the scenario.json document itself.
inline nlohmann::json scenario_document(const Scenario& s) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& k : s.block_order) blocks.push_back(k.name());
  nlohmann::json j = {{"id", s.id}, {"title", s.title}, {"map_ref", s.map_ref}, {"blocks", blocks},
                      {"horizon", s.horizon}};
  if (s.graph_ref) j["graph"] = *s.graph_ref;
  if (s.automation_ref) j["automation"] = *s.automation_ref;
  return j;
}

inline std::string serialize_scenario(const Scenario& s) { return scenario_document(s).dump(2) + "\n"; }

/// Every file a package may contain, for copying into a store.
inline std::vector<std::string> package_file_names(const Scenario& s) {
  std::vector<std::string> out = {"scenario.json", s.map_ref};
  if (s.graph_ref) out.push_back(*s.graph_ref);
  if (s.automation_ref) out.push_back(*s.automation_ref);
  for (auto t : kFixedBlockTags)
    if (auto n = package_document_name(t)) out.push_back(*n);
  return out;
}

/// Checks an edit of a structured block against the same rules as the
/// package loader. Free-text blocks accept anything non-empty.
inline void validate_block_content(const Scenario& s, const BlockKind& k, const std::string& content) {
  if (content.empty()) throw SchemaError(k.name() + ": content must not be empty");
  switch (k.tag()) {
    case BlockTag::MapMcoo: (void)map::map_from_json(detail::parse_json(content, "map")); break;
    case BlockTag::ForceGroupings: (void)parse_force_groupings(content, s.map); break;
    case BlockTag::RedBlueObjectives: (void)parse_objectives(content, s.map); break;
    case BlockTag::HighLevelUnitPurpose: (void)parse_unit_purposes(content, s.forces, s.map); break;
    case BlockTag::DecisionSupportMatrix: (void)parse_dsm(content, s.forces, s.map); break;
    case BlockTag::UnitPositionsTimeBased:
      for (const auto& t : timelines_from_content(content)) validate_timeline(t, s.map);
      break;
    default: break;
  }
}

}  // namespace sforge
