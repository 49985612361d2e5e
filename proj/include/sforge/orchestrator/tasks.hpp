// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sforge/agents/helper.hpp"
#include "sforge/agents/map_agent.hpp"
#include "sforge/agents/registry.hpp"
#include "sforge/block.hpp"
#include "sforge/dag.hpp"
#include "sforge/error.hpp"
#include "sforge/io.hpp"
#include "sforge/llm/gateway.hpp"
#include "sforge/map/progress.hpp"
#include "sforge/orchestrator/react.hpp"
#include "sforge/orchestrator/run_task.hpp"
#include "sforge/retrieval.hpp"
#include "sforge/scenario.hpp"
#include "sforge/state_machine.hpp"

namespace sforge::orchestrator {

/// Prompt templates `<dir>/<BlockKind>.md`, falling back to `default.md`.
/// OPORD sections share `OpordSection.md`. `{{name}}` placeholders are
/// substituted by `render`.
class StrategyLibrary {
 public:
  explicit StrategyLibrary(fs::path dir) : dir_(std::move(dir)) {}

  std::string load(const BlockKind& k) const {
    const std::string base(tag_name(k.tag()));
    for (const auto& name : {base + ".md", std::string("default.md")}) {
      const auto p = dir_ / name;
      if (fs::is_regular_file(p)) return read_file(p);
    }
    throw PreconditionError("no strategy template for " + k.name() + " in " + dir_.string());
  }

  static std::string render(std::string tpl, const std::map<std::string, std::string>& vars) {
    for (const auto& [key, value] : vars) {
      const std::string needle = "{{" + key + "}}";
      for (auto pos = tpl.find(needle); pos != std::string::npos; pos = tpl.find(needle, pos + value.size()))
        tpl.replace(pos, needle.size(), value);
    }
    return tpl;
  }

  std::string render(const BlockKind& k, const std::map<std::string, std::string>& vars) const {
    return render(load(k), vars);
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
};

inline std::string helper_preamble(const BlockKind& k) {
  return "You are the " + k.name() +
         " helper agent. Answer the question using only the numbered context passages. "
         "If they do not contain the answer, say that the information is not available.";
}

inline retrieval::Document block_document(const BlockKind& k, const std::string& content) {
  auto format = retrieval::DocumentFormat::Text;
  try {
    const auto j = nlohmann::json::parse(content);
    if (j.is_structured()) format = retrieval::DocumentFormat::Json;
  } catch (const nlohmann::json::parse_error&) {
  }
  return {k.name(), format, content};
}

inline agents::HelperAgent make_helper(const BlockKind& k, const std::string& content) {
  agents::HelperAgent h{k, retrieval::Corpus::from_documents({block_document(k, content)}), helper_preamble(k), {}};
  return h;
}

/// One helper per listed Approved block; MapMcoo becomes the map agent.
inline agents::Registry build_registry(const std::map<BlockKind, BlockState>& states, const std::vector<BlockKind>& kinds,
                                       std::shared_ptr<agents::ArtifactStore> artifacts) {
  agents::Registry reg;
  for (const auto& k : kinds) {
    const auto& st = states.at(k);
    if (st.tag != StateTag::Approved) throw PreconditionError("input block " + k.name() + " is not Approved");
    if (k.tag() == BlockTag::MapMcoo) {
      auto model = map::map_from_json(sforge::detail::parse_json(st.content, "MapMcoo"));
      reg.set_map_agent(std::make_unique<agents::MapAgent>(make_helper(k, st.content), std::move(model), artifacts));
    } else {
      reg.add(make_helper(k, st.content));
    }
  }
  return reg;
}

/// Everything a generation task needs besides its own parameters.
struct TaskEnv {
  const agents::Registry& registry;
  llm::Gateway& llm;
  const StrategyLibrary& strategies;
  fs::path trace_dir;
  std::string task_prefix;  // e.g. "UnitPositionsTimeBased-1"
  std::vector<std::string> inputs;
  std::string feedback;
  std::size_t budget = kDefaultBudget;
};

// ---- unit positions --------------------------------------------------------------

namespace detail {

inline int sample_day(const nlohmann::json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s.size() > 2 && (s[0] == 'D' || s[0] == 'd') && s[1] == '+') s = s.substr(2);
    try {
      std::size_t used = 0;
      const int d = std::stoi(s, &used);
      if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
  }
  throw TimelineInvalid("sample day must be an integer or \"D+n\"");
}

}  // namespace detail

/// Timeline from a structured final answer
/// `{"route_id", "start", "arrive", "samples": [{"day", "pos"?}]}`. Samples
/// without `pos` are placed on the chosen proposed route.
inline UnitPositionTimeline timeline_from_answer(const std::string& unit, const nlohmann::json& answer,
                                                 const agents::ToolSession& session, const map::MapModel& m,
                                                 int horizon) {
  UnitPositionTimeline t;
  t.unit = unit;
  if (answer.contains("unit") && answer.at("unit") != unit) throw TimelineInvalid("answer is for a different unit");
  const map::Route* route = nullptr;
  if (answer.contains("route_id")) {
    if (!answer.at("route_id").is_string()) throw TimelineInvalid("route_id must be a string");
    t.route_id = answer.at("route_id").get<std::string>();
    auto it = session.routes.find(t.route_id);
    if (it == session.routes.end()) throw TimelineInvalid(unit + ": route " + t.route_id + " was never proposed");
    route = &it->second;
  }
  const int start = answer.contains("start") ? detail::sample_day(answer.at("start")) : 0;
  const int arrive = answer.contains("arrive") ? detail::sample_day(answer.at("arrive")) : horizon;
  if (!answer.contains("samples") || !answer.at("samples").is_array())
    throw TimelineInvalid(unit + ": answer has no samples");
  for (const auto& sj : answer.at("samples")) {
    if (!sj.is_object() || !sj.contains("day")) throw TimelineInvalid(unit + ": every sample needs a day");
    TimelineSample s;
    s.day = detail::sample_day(sj.at("day"));
    if (s.day < 0 || s.day > horizon) throw TimelineInvalid(unit + ": D+" + std::to_string(s.day) + " is outside the horizon");
    if (sj.contains("pos")) {
      const auto& p = sj.at("pos");
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw TimelineInvalid(unit + ": pos must be [x, y]");
      s.pos = {p[0].get<double>(), p[1].get<double>()};
    } else {
      if (!route) throw TimelineInvalid(unit + ": samples without pos need a route_id");
      if (arrive <= start) throw TimelineInvalid(unit + ": arrive must be after start");
      s.pos = map::position_at_time(*route, start, arrive, s.day).point;
    }
    t.samples.push_back(s);
  }
  validate_timeline(t, m);
  for (auto& s : t.samples) {
    const auto ctx = map::phase_context(m, s.pos);
    s.west = ctx.west_name();
    s.east = ctx.east_name();
  }
  return t;
}

/// Four-step procedure: unit purpose and location, applicable triggers,
/// candidate routes, progress per day.
inline UnitPositionTimeline predict_unit_positions(const Scenario& scenario, const std::string& unit, int horizon,
                                                   const TaskEnv& env) {
  const auto* force = scenario.find_force(unit);
  if (!force) throw PreconditionError("unknown unit " + unit);
  if (horizon < 0) throw PreconditionError("horizon must not be negative");
  const auto* map_agent = env.registry.map_agent();
  const map::MapModel& m = map_agent ? map_agent->model() : scenario.map;
  const auto* marker = m.find_unit(unit);
  if (!marker) throw PreconditionError("unit " + unit + " is not on the map");

  if (horizon == 0) {
    UnitPositionTimeline t;
    t.unit = unit;
    const auto ctx = map::phase_context(m, marker->position);
    t.samples.push_back({0, marker->position, ctx.west_name(), ctx.east_name()});
    validate_timeline(t, m);
    return t;
  }

  TaskSpec spec;
  spec.task_id = env.task_prefix + "-" + unit;
  spec.block = std::string(tag_name(BlockTag::UnitPositionsTimeBased));
  spec.objective = "Predict the positions of " + unit + " for each day from D+0 to D+" + std::to_string(horizon) + ".";
  spec.system_prompt = env.strategies.render(BlockTag::UnitPositionsTimeBased,
                                             {{"unit", unit}, {"horizon", std::to_string(horizon)}, {"echelon", force->echelon}});
  spec.inputs = env.inputs;
  spec.feedback = env.feedback;
  spec.budget = env.budget;
  spec.structured = true;
  auto result = run_task_or_throw(spec, env.registry, env.llm, env.trace_dir);
  return timeline_from_answer(unit, result.trace.final->payload, result.session, m, horizon);
}

// ---- scheme of maneuver ------------------------------------------------------------

/// True when `needle` occurs in `text` not flanked by letters or digits.
inline bool mentions(const std::string& text, const std::string& needle) {
  if (needle.empty()) return false;
  auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) {
    const bool left = pos == 0 || !alnum(text[pos - 1]);
    const bool right = pos + needle.size() == text.size() || !alnum(text[pos + needle.size()]);
    if (left && right) return true;
  }
  return false;
}

/// Throws CoverageError unless `text` names every unit and at least one
/// phase line.
inline void check_coverage(const std::string& text, const std::vector<std::string>& units,
                           const std::vector<std::string>& phase_lines) {
  std::vector<std::string> missing;
  for (const auto& u : units)
    if (!mentions(text, u)) missing.push_back(u);
  const bool any_line = std::any_of(phase_lines.begin(), phase_lines.end(), [&](const auto& pl) { return mentions(text, pl); });
  if (!any_line && !phase_lines.empty()) missing.push_back("<phase line>");
  if (!missing.empty()) throw CoverageError(std::move(missing), text);
}

inline std::string generate_scheme_of_maneuver(const Scenario& scenario, const std::vector<std::string>& friendly_units,
                                               const TaskEnv& env) {
  if (!env.registry.has(std::string(tag_name(BlockTag::UnitPositionsTimeBased))))
    throw PreconditionError("UnitPositionsTimeBased must be Approved first");
  const auto* map_agent = env.registry.map_agent();
  const map::MapModel& m = map_agent ? map_agent->model() : scenario.map;

  std::string units;
  for (const auto& u : friendly_units) units += (units.empty() ? "" : ", ") + u;
  TaskSpec spec;
  spec.task_id = env.task_prefix;
  spec.block = std::string(tag_name(BlockTag::OpordSchemeOfManeuver));
  spec.objective = "Write the Scheme of Movement and Maneuver paragraph for " + units + ".";
  spec.system_prompt = env.strategies.render(BlockTag::OpordSchemeOfManeuver, {{"units", units}});
  spec.inputs = env.inputs;
  spec.feedback = env.feedback;
  spec.budget = env.budget;
  auto result = run_task_or_throw(spec, env.registry, env.llm, env.trace_dir);
  const auto text = result.trace.final->text;
  std::vector<std::string> lines;
  for (const auto& pl : m.phase_lines) lines.push_back(pl.name);
  check_coverage(text, friendly_units, lines);
  return text;
}

// ---- any block -----------------------------------------------------------------------

struct GenerationRequest {
  const Scenario& scenario;
  const std::map<BlockKind, BlockState>& states;
  BlockKind kind;
  int generation = 1;  // 1-based count of GenerationStarted events for this block
  std::string feedback;
  llm::Gateway& llm;
  const StrategyLibrary& strategies;
  std::shared_ptr<agents::ArtifactStore> artifacts;
  fs::path trace_dir;
  std::size_t budget = kDefaultBudget;
};

struct GenerationOutcome {
  bool ok = false;
  std::string content;               // non-purple result
  std::vector<std::string> options;  // purple result
  std::string reason;                // failure code
  std::string message;
  std::string draft;  // failed output worth showing a reviewer
  std::vector<std::string> trace_ids;
};

inline bool is_structured_kind(const BlockKind& k) {
  switch (k.tag()) {
    case BlockTag::ForceGroupings:
    case BlockTag::RedBlueObjectives:
    case BlockTag::HighLevelUnitPurpose:
    case BlockTag::DecisionSupportMatrix:
    case BlockTag::MapMcoo:
      return true;
    default:
      return false;
  }
}

/// Trace ids a generation of `kind` produces, in order.
inline std::vector<std::string> expected_trace_ids(const std::string& prefix, const BlockKind& k,
                                                   const std::vector<std::string>& units, int horizon) {
  if (k.tag() != BlockTag::UnitPositionsTimeBased) return {prefix};
  std::vector<std::string> ids;
  if (horizon > 0)
    for (const auto& u : units) ids.push_back(prefix + "-" + u);
  return ids;
}

inline std::string task_prefix(const BlockKind& k, int generation) {
  std::string name;
  for (char c : k.name()) name += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return name + "-" + std::to_string(generation);
}

/// The force list the engine should use: the Approved ForceGroupings block
/// when present, else the package document.
inline std::vector<ForceUnit> effective_forces(const Scenario& s, const std::map<BlockKind, BlockState>& states) {
  if (auto it = states.find(BlockTag::ForceGroupings); it != states.end() && it->second.tag == StateTag::Approved)
    return parse_force_groupings(it->second.content, s.map);
  return s.forces;
}

/// Runs the generation task for one block. Task failures (aborted loops,
/// invalid timelines, coverage misses, unusable structured output) come
/// back as a failed outcome; gateway misconfiguration and storage errors
/// propagate.
inline GenerationOutcome generate_block(const GenerationRequest& req) {
  GenerationOutcome out;
  const auto& g = req.scenario.graph;
  std::vector<BlockKind> parents(g.parents(req.kind).begin(), g.parents(req.kind).end());
  auto registry = build_registry(req.states, parents, req.artifacts);
  TaskEnv env{registry, req.llm, req.strategies, req.trace_dir, task_prefix(req.kind, req.generation), {}, req.feedback,
              req.budget};
  for (const auto& p : parents) env.inputs.push_back(p.name());

  std::vector<std::string> friendly;
  for (const auto& u : effective_forces(req.scenario, req.states))
    if (u.affiliation == "friendly") friendly.push_back(u.id);

  auto fail = [&](const Error& e, std::string draft = {}) {
    out.ok = false;
    out.reason = e.code();
    out.message = e.what();
    out.draft = std::move(draft);
  };
  std::vector<std::string> traces = expected_trace_ids(env.task_prefix, req.kind, friendly, req.scenario.horizon);
  try {
    switch (req.kind.tag()) {
      case BlockTag::UnitPositionsTimeBased: {
        nlohmann::json timelines = nlohmann::json::array();
        for (const auto& u : friendly) timelines.push_back(timeline_to_json(predict_unit_positions(req.scenario, u, req.scenario.horizon, env)));
        out.content = nlohmann::json{{"timelines", timelines}}.dump(2);
        break;
      }
      case BlockTag::OpordSchemeOfManeuver:
        out.content = generate_scheme_of_maneuver(req.scenario, friendly, env);
        break;
      default: {
        const auto level = req.scenario.level_of(req.kind);
        TaskSpec spec;
        spec.task_id = env.task_prefix;
        spec.block = req.kind.name();
        spec.inputs = env.inputs;
        spec.feedback = req.feedback;
        spec.budget = req.budget;
        const bool purple = level == AutomationLevel::Purple;
        spec.structured = purple || is_structured_kind(req.kind);
        spec.objective = purple ? "Draft " + std::to_string(kDefaultPurpleOptions) + " alternative " + req.kind.name() +
                                      " options for a human author to choose from."
                                : "Produce the " + req.kind.name() + " block.";
        spec.system_prompt = req.strategies.render(
            req.kind, {{"block", req.kind.name()},
                       {"options", std::to_string(kDefaultPurpleOptions)},
                       {"section", req.kind.section()}});
        auto r = run_task_or_throw(spec, registry, req.llm, req.trace_dir);
        const auto& final = *r.trace.final;
        if (purple) {
          const auto& opts = final.payload.value("options", nlohmann::json());
          if (!opts.is_array() || opts.size() < 2 || !std::all_of(opts.begin(), opts.end(), [](const auto& o) { return o.is_string(); }))
            throw SchemaError("purple answer needs an \"options\" list of at least two strings");
          out.options = opts.template get<std::vector<std::string>>();
        } else if (spec.structured) {
          out.content = final.payload.dump(2);
          try {
            validate_block_content(req.scenario, req.kind, out.content);
          } catch (const Error& e) {
            fail(e, out.content);
            out.trace_ids = traces;
            return out;
          }
        } else {
          out.content = final.text;
        }
      }
    }
    out.ok = true;
  } catch (const CoverageError& e) {
    fail(e, e.draft());
  } catch (const TaskAborted& e) {
    fail(e);
  } catch (const TimelineInvalid& e) {
    fail(e);
  } catch (const SchemaError& e) {
    fail(e);
  } catch (const PreconditionError& e) {
    fail(e);
  }
  // Traces that were actually written; an early failure skips later units.
  for (const auto& id : traces)
    if (req.trace_dir.empty() || fs::exists(req.trace_dir / (id + ".json"))) out.trace_ids.push_back(id);
  return out;
}

}  // namespace sforge::orchestrator
