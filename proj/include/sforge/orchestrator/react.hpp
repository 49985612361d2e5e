// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sforge/agents/observation.hpp"
#include "sforge/error.hpp"

namespace sforge::orchestrator {

struct ActionBlock {
  std::string thought;
  std::string agent;
  std::string operation;
  nlohmann::json input;  // always an object
};

struct FinalBlock {
  std::string thought;  // may be empty
  std::string text;
};

using ParsedBlock = std::variant<ActionBlock, FinalBlock>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

enum class Label { Thought, Action, ActionInput, Final, Observation };

struct LabelHit {
  Label label;
  std::size_t line_start;     // offset of the line
  std::size_t content_start;  // offset just after the colon
};

/// Labels recognized at the start of a line (leading blanks allowed).
inline std::vector<LabelHit> find_labels(const std::string& text) {
  static const std::pair<const char*, Label> kLabels[] = {
      {"thought:", Label::Thought},         {"action input:", Label::ActionInput}, {"action:", Label::Action},
      {"final answer:", Label::Final},      {"observation:", Label::Observation},
  };
  std::vector<LabelHit> hits;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string::npos ? text.size() : nl;
    const auto first = text.find_first_not_of(" \t", pos);
    if (first != std::string::npos && first < end) {
      const auto line = lower(std::string_view(text).substr(first, end - first));
      for (const auto& [name, label] : kLabels) {
        if (line.rfind(name, 0) == 0) {
          hits.push_back({label, pos, first + std::string_view(name).size()});
          break;
        }
      }
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return hits;
}

}  // namespace detail

/// Text of `output` up to a model-written "Observation:" line, which only
/// the engine may supply.
inline std::string strip_hallucinated_observation(const std::string& output) {
  for (const auto& h : detail::find_labels(output))
    if (h.label == detail::Label::Observation) return detail::trim(std::string_view(output).substr(0, h.line_start));
  return detail::trim(output);
}

/// Splits one model turn into a Thought/Action/Action Input triple or a
/// Final Answer. Labels are case-insensitive and must appear in that order.
inline ParsedBlock parse_react_block(const std::string& llm_output) {
  using detail::Label;
  const std::string text = strip_hallucinated_observation(llm_output);
  const auto hits = detail::find_labels(text);

  auto count = [&](Label l) { return std::count_if(hits.begin(), hits.end(), [&](const auto& h) { return h.label == l; }); };
  auto find = [&](Label l) -> const detail::LabelHit* {
    for (const auto& h : hits)
      if (h.label == l) return &h;
    return nullptr;
  };
  // Content of a label runs to the start of the next label's line.
  auto body = [&](const detail::LabelHit& h) {
    std::size_t end = text.size();
    for (const auto& o : hits)
      if (o.line_start > h.line_start) {
        end = o.line_start;
        break;
      }
    return detail::trim(std::string_view(text).substr(h.content_start, end - h.content_start));
  };

  for (auto l : {Label::Thought, Label::Action, Label::ActionInput, Label::Final})
    if (count(l) > 1) throw FormatError("a label appears more than once");

  const auto* thought = find(Label::Thought);
  const auto* action = find(Label::Action);
  const auto* input = find(Label::ActionInput);
  const auto* final_ = find(Label::Final);

  if (final_) {
    if (action || input) throw FormatError("both an Action and a Final Answer are present");
    if (thought && thought->line_start > final_->line_start) throw FormatError("Thought must precede Final Answer");
    auto answer = body(*final_);
    if (answer.empty()) throw FormatError("Final Answer is empty");
    return FinalBlock{thought ? body(*thought) : std::string{}, std::move(answer)};
  }
  if (!thought) throw FormatError("missing \"Thought:\"");
  if (!action) throw FormatError("missing \"Action:\"");
  if (!input) throw FormatError("missing \"Action Input:\"");
  if (!(thought->line_start < action->line_start && action->line_start < input->line_start))
    throw FormatError("labels must appear in the order Thought, Action, Action Input");

  ActionBlock a;
  a.thought = body(*thought);
  const auto name = body(*action);
  const auto dot = name.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == name.size() || name.find_first_of(" \t\n") != std::string::npos)
    throw FormatError("Action must look like Agent.operation, got \"" + name + "\"");
  a.agent = name.substr(0, dot);
  a.operation = name.substr(dot + 1);

  auto raw = body(*input);
  if (raw.rfind("```", 0) == 0) {
    const auto nl = raw.find('\n');
    const auto close = raw.rfind("```");
    if (nl == std::string::npos || close <= nl) throw FormatError("unterminated code fence in Action Input");
    raw = detail::trim(std::string_view(raw).substr(nl + 1, close - nl - 1));
  }
  try {
    a.input = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    throw FormatError("Action Input is not valid JSON");
  }
  if (!a.input.is_object()) throw FormatError("Action Input must be a JSON object");
  return a;
}

/// First fenced block in `text` parsed as a JSON object.
inline nlohmann::json extract_fenced_json(const std::string& text) {
  const auto open = text.find("```");
  if (open == std::string::npos) throw FormatError("structured Final Answer must be a fenced JSON object");
  const auto nl = text.find('\n', open);
  const auto close = nl == std::string::npos ? std::string::npos : text.find("```", nl);
  if (close == std::string::npos) throw FormatError("unterminated code fence in Final Answer");
  const auto tag = detail::lower(detail::trim(std::string_view(text).substr(open + 3, nl - open - 3)));
  if (!tag.empty() && tag != "json") throw FormatError("Final Answer fence must be ```json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.substr(nl + 1, close - nl - 1));
  } catch (const nlohmann::json::parse_error&) {
    throw FormatError("Final Answer fence does not contain valid JSON");
  }
  if (!j.is_object()) throw FormatError("Final Answer JSON must be an object");
  return j;
}

// ---- traces --------------------------------------------------------------------

enum class StepStatus { Ok, Failed, Retried };

inline std::string_view status_name(StepStatus s) {
  switch (s) {
    case StepStatus::Ok: return "Ok";
    case StepStatus::Failed: return "Failed";
    case StepStatus::Retried: return "Retried";
  }
  return "?";
}

struct ReactStep {
  std::size_t index = 0;
  std::string thought;
  std::string agent;
  std::string operation;
  nlohmann::json action_input;
  agents::Observation observation;
  StepStatus status = StepStatus::Ok;
};

/// A model turn rejected by the parser; the engine answered with a format
/// reminder instead of dispatching.
struct FormatIssue {
  std::size_t before_step = 0;
  std::string error;
  std::string output;
};

struct FinalAnswer {
  std::string thought;
  std::string text;
  nlohmann::json payload;  // fenced JSON for structured kinds, else null
};

struct ReactTrace {
  std::string task_id;
  std::string block;
  std::string objective;
  std::size_t budget = 0;
  std::vector<ReactStep> steps;
  std::vector<FormatIssue> format_errors;
  std::size_t llm_calls = 0;
  std::optional<FinalAnswer> final;
  std::optional<std::string> aborted;  // BudgetExhausted | PersistentFormatError | error code
  std::string abort_message;

  std::size_t budget_used() const { return steps.size(); }
};

inline nlohmann::json trace_to_json(const ReactTrace& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps)
    steps.push_back({{"index", s.index},
                     {"thought", s.thought},
                     {"action", s.agent + "." + s.operation},
                     {"action_input", s.action_input},
                     {"observation", agents::observation_to_json(s.observation)},
                     {"status", status_name(s.status)}});
  nlohmann::json issues = nlohmann::json::array();
  for (const auto& f : t.format_errors)
    issues.push_back({{"before_step", f.before_step}, {"error", f.error}, {"output", f.output}});
  nlohmann::json j = {{"task_id", t.task_id},
                      {"block", t.block},
                      {"objective", t.objective},
                      {"budget", t.budget},
                      {"budget_used", t.budget_used()},
                      {"llm_calls", t.llm_calls},
                      {"steps", steps},
                      {"format_errors", issues},
                      {"final", nullptr},
                      {"aborted", nullptr}};
  if (t.final) {
    j["final"] = {{"thought", t.final->thought}, {"text", t.final->text}};
    if (!t.final->payload.is_null()) j["final"]["payload"] = t.final->payload;
  }
  if (t.aborted) j["aborted"] = {{"reason", *t.aborted}, {"message", t.abort_message}};
  return j;
}

inline StepStatus parse_status(const std::string& s) {
  if (s == "Ok") return StepStatus::Ok;
  if (s == "Failed") return StepStatus::Failed;
  if (s == "Retried") return StepStatus::Retried;
  throw SchemaError("unknown step status " + s);
}

inline ReactTrace trace_from_json(const nlohmann::json& j) {
  ReactTrace t;
  t.task_id = j.at("task_id").get<std::string>();
  t.block = j.at("block").get<std::string>();
  t.objective = j.value("objective", std::string{});
  t.budget = j.at("budget").get<std::size_t>();
  t.llm_calls = j.value("llm_calls", std::size_t{0});
  for (const auto& sj : j.at("steps")) {
    ReactStep s;
    s.index = sj.at("index").get<std::size_t>();
    s.thought = sj.at("thought").get<std::string>();
    const auto action = sj.at("action").get<std::string>();
    const auto dot = action.find('.');
    s.agent = action.substr(0, dot);
    s.operation = dot == std::string::npos ? "" : action.substr(dot + 1);
    s.action_input = sj.at("action_input");
    s.observation = agents::observation_from_json(sj.at("observation"));
    s.status = parse_status(sj.at("status").get<std::string>());
    t.steps.push_back(std::move(s));
  }
  for (const auto& fj : j.value("format_errors", nlohmann::json::array()))
    t.format_errors.push_back({fj.at("before_step").get<std::size_t>(), fj.at("error").get<std::string>(),
                               fj.at("output").get<std::string>()});
  if (!j.at("final").is_null()) {
    const auto& f = j.at("final");
    t.final = FinalAnswer{f.value("thought", std::string{}), f.at("text").get<std::string>(),
                          f.value("payload", nlohmann::json())};
  }
  if (!j.at("aborted").is_null()) {
    t.aborted = j.at("aborted").at("reason").get<std::string>();
    t.abort_message = j.at("aborted").value("message", std::string{});
  }
  return t;
}

}  // namespace sforge::orchestrator
