// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sforge/agents/map_agent.hpp"
#include "sforge/agents/registry.hpp"
#include "sforge/error.hpp"
#include "sforge/io.hpp"
#include "sforge/llm/gateway.hpp"
#include "sforge/orchestrator/react.hpp"

namespace sforge::orchestrator {

inline constexpr std::size_t kDefaultBudget = 20;
inline constexpr std::size_t kMaxConsecutiveFormatErrors = 3;

/// A task that ended without a final answer. `code()` is BudgetExhausted,
/// PersistentFormatError, or the code of the error that interrupted it.
class TaskAborted : public Error {
 public:
  TaskAborted(const std::string& reason, const std::string& what) : Error(reason, what) {}
};

struct TaskSpec {
  std::string task_id;
  std::string block;
  std::string objective;
  std::string system_prompt;  // rendered strategy
  std::vector<std::string> inputs;
  std::string feedback;
  std::size_t budget = kDefaultBudget;
  bool structured = false;
};

struct TaskResult {
  ReactTrace trace;
  agents::ToolSession session;

  bool ok() const { return trace.final.has_value(); }
};

inline const char* kFormatRules =
    "Reply in exactly one of two forms.\n"
    "To use a helper:\n"
    "Thought: <reasoning>\n"
    "Action: <Agent>.<operation>\n"
    "Action Input: <JSON object>\n"
    "To finish:\n"
    "Thought: <reasoning>\n"
    "Final Answer: <answer>\n"
    "Never write an Observation yourself.";

inline const char* kStructuredRule = "The Final Answer must be a single ```json fenced object.";

inline std::string task_message(const TaskSpec& spec) {
  std::string s = "Task: " + spec.objective + "\n";
  if (!spec.inputs.empty()) {
    s += "Approved inputs:";
    for (const auto& i : spec.inputs) s += " " + i;
    s += "\n";
  }
  if (!spec.feedback.empty()) s += "Reviewer feedback on the previous attempt: " + spec.feedback + "\n";
  return s;
}

inline std::string observation_message(const agents::Observation& o) {
  std::string s = "Observation: ";
  if (o.error) s += "ERROR (" + o.reason + ") ";
  s += o.text;
  if (!o.payload.is_null()) s += "\nData: " + o.payload.dump();
  return s;
}

inline std::string format_reminder(const std::string& error, bool structured) {
  std::string s = "Format error: " + error + ".\n" + kFormatRules;
  if (structured) s += std::string("\n") + kStructuredRule;
  return s;
}

inline void write_trace(const fs::path& dir, const ReactTrace& t) {
  write_file_atomic(dir / (t.task_id + ".json"), trace_to_json(t).dump(2) + "\n");
}

/// ReAct loop. Each model turn is parsed; actions are dispatched to the
/// registry and their observations fed back; parse failures get a format
/// reminder. The trace is written to `trace_dir` (when non-empty) on every
/// outcome.
inline TaskResult run_task(const TaskSpec& spec, const agents::Registry& registry, llm::Gateway& llm,
                           const fs::path& trace_dir = {}) {
  if (spec.budget < 1) throw PreconditionError("budget must be at least 1");
  TaskResult result;
  ReactTrace& trace = result.trace;
  trace.task_id = spec.task_id;
  trace.block = spec.block;
  trace.objective = spec.objective;
  trace.budget = spec.budget;

  std::string system = spec.system_prompt + "\n\nAvailable actions:\n" + registry.describe() + "\n" + kFormatRules;
  if (spec.structured) system += std::string("\n") + kStructuredRule;
  llm::ChatRequest request;
  request.messages.push_back({"system", system, {}});
  request.messages.push_back({"user", task_message(spec), {}});

  auto persist = [&] {
    if (!trace_dir.empty()) write_trace(trace_dir, trace);
  };

  std::size_t consecutive_format_errors = 0;
  bool retry_pending = false;
  try {
    while (true) {
      if (trace.steps.size() >= spec.budget) {
        trace.aborted = "BudgetExhausted";
        trace.abort_message = "no final answer after " + std::to_string(spec.budget) + " steps";
        break;
      }
      ++trace.llm_calls;
      const std::string output = llm.complete(request);
      const std::string kept = strip_hallucinated_observation(output);

      std::optional<ParsedBlock> parsed;
      nlohmann::json final_payload;
      try {
        parsed = parse_react_block(output);
        if (auto* f = std::get_if<FinalBlock>(&*parsed); f && spec.structured) final_payload = extract_fenced_json(f->text);
      } catch (const FormatError& e) {
        trace.format_errors.push_back({trace.steps.size(), e.what(), output});
        if (++consecutive_format_errors >= kMaxConsecutiveFormatErrors) {
          trace.aborted = "PersistentFormatError";
          trace.abort_message = std::to_string(kMaxConsecutiveFormatErrors) + " consecutive malformed replies";
          break;
        }
        request.messages.push_back({"assistant", kept, {}});
        request.messages.push_back({"user", format_reminder(e.what(), spec.structured), {}});
        retry_pending = true;
        continue;
      }
      consecutive_format_errors = 0;

      if (auto* f = std::get_if<FinalBlock>(&*parsed)) {
        trace.final = FinalAnswer{f->thought, f->text, final_payload};
        break;
      }

      auto& a = std::get<ActionBlock>(*parsed);
      agents::Observation obs;
      try {
        obs = registry.dispatch(a.agent, a.operation, a.input, llm, result.session);
      } catch (const UnknownTool& e) {
        obs = agents::Observation::failure(e.code(), e.what());
      } catch (const ArgsError& e) {
        obs = agents::Observation::failure(e.code(), e.what());
      }
      ReactStep step;
      step.index = trace.steps.size();
      step.thought = a.thought;
      step.agent = a.agent;
      step.operation = a.operation;
      step.action_input = a.input;
      step.status = obs.error ? StepStatus::Failed : (retry_pending ? StepStatus::Retried : StepStatus::Ok);
      retry_pending = obs.error;
      step.observation = obs;
      trace.steps.push_back(std::move(step));

      llm::Message m{"user", observation_message(obs), {}};
      if (obs.image_ref && registry.map_agent())
        m.attachments.push_back({"image/svg+xml", registry.map_agent()->artifacts().get(*obs.image_ref)});
      request.messages.push_back({"assistant", kept, {}});
      request.messages.push_back(std::move(m));
    }
  } catch (const Error& e) {
    trace.aborted = e.code();
    trace.abort_message = e.what();
    persist();
    throw;
  }
  persist();
  return result;
}

/// run_task, raising TaskAborted when no final answer was produced.
inline TaskResult run_task_or_throw(const TaskSpec& spec, const agents::Registry& registry, llm::Gateway& llm,
                                    const fs::path& trace_dir = {}) {
  auto r = run_task(spec, registry, llm, trace_dir);
  if (!r.ok()) throw TaskAborted(*r.trace.aborted, spec.task_id + ": " + r.trace.abort_message);
  return r;
}

}  // namespace sforge::orchestrator
