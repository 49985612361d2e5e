// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sforge/service/session.hpp"

namespace sforge::service {

struct RunOptions {
  bool auto_approve_green = false;
  std::set<AutomationLevel> pause_on;  // levels whose reviews are left to a human
};

struct RunAction {
  std::string block;
  std::string action;  // loaded | generated | approved | selected | failed | paused
  std::string detail;
};

struct RunReport {
  enum class Status { Completed, Paused, Failed };
  Status status = Status::Completed;
  std::vector<RunAction> actions;

  std::vector<std::string> blocks_with(const std::string& action) const {
    std::vector<std::string> out;
    for (const auto& a : actions)
      if (a.action == action) out.push_back(a.block);
    return out;
  }
};

inline std::string_view status_name(RunReport::Status s) {
  switch (s) {
    case RunReport::Status::Completed: return "completed";
    case RunReport::Status::Paused: return "paused";
    case RunReport::Status::Failed: return "failed";
  }
  return "?";
}

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& a : r.actions) {
    nlohmann::json j = {{"block", a.block}, {"action", a.action}};
    if (!a.detail.empty()) j["detail"] = a.detail;
    actions.push_back(j);
  }
  return {{"status", status_name(r.status)}, {"actions", actions}};
}

inline constexpr const char* kRunApprovalNote = "approved by sforge run";

/// Drives every block of the session towards Approved in dependency order:
/// package documents are entered as edits, missing blocks are generated,
/// and reviews on levels outside `pause_on` are accepted. Each block is
/// generated at most once per call; a failed generation stops the run.
inline RunReport run_pipeline(Session& session, const GenerationDeps& deps, const RunOptions& opt) {
  RunReport report;
  const Scenario& s = session.scenario();
  const auto order = topological_order(s.graph);
  std::set<BlockKind> generated;
  std::set<BlockKind> paused;

  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto& k : order) {
      if (paused.count(k)) continue;
      const auto level = s.level_of(k);
      const auto st = session.state(k);
      const bool pause_here = opt.pause_on.count(level) != 0;

      if (st.tag == StateTag::AwaitingReview) {
        if (pause_here) {
          paused.insert(k);
          report.actions.push_back({k.name(), "paused", "awaiting review"});
          continue;
        }
        auto e = ReviewEvent::approve();
        e.note = kRunApprovalNote;
        session.apply(k, e);
        report.actions.push_back({k.name(), "approved", ""});
        progress = true;
        continue;
      }
      if (st.tag == StateTag::AwaitingSelection) {
        if (pause_here) {
          paused.insert(k);
          report.actions.push_back({k.name(), "paused", "awaiting selection"});
          continue;
        }
        auto e = ReviewEvent::select_option(0);
        e.note = kRunApprovalNote;
        session.apply(k, e);
        report.actions.push_back({k.name(), "selected", "option 0"});
        progress = true;
        continue;
      }
      if (!session.ready().count(k)) continue;

      const auto& doc = s.blocks.at(k).document;
      if (st.tag == StateTag::Pending && doc) {
        auto e = ReviewEvent::edit(*doc);
        e.note = "package document";
        session.apply(k, e);
        report.actions.push_back({k.name(), "loaded", ""});
        progress = true;
        continue;
      }
      if (generated.count(k)) continue;
      if (level == AutomationLevel::Green && !opt.auto_approve_green) continue;
      if (st.tag == StateTag::Rejected && st.attempts >= kMaxRegenerations) {
        paused.insert(k);
        report.actions.push_back({k.name(), "paused", "regeneration limit reached"});
        continue;
      }
      generated.insert(k);
      const auto out = session.generate(k, deps);
      if (!out.ok) {
        report.actions.push_back({k.name(), "failed", out.reason + ": " + out.message});
        report.status = RunReport::Status::Failed;
        return report;
      }
      report.actions.push_back({k.name(), "generated", ""});
      progress = true;
    }
  }

  for (const auto& [k, st] : session.states())
    if (st.tag != StateTag::Approved) {
      report.status = RunReport::Status::Paused;
      break;
    }
  return report;
}

/// Outcome of a single-unit prediction outside a session.
struct PredictResult {
  std::optional<UnitPositionTimeline> timeline;
  std::optional<orchestrator::ReactTrace> trace;
  std::string error;  // error code when no timeline was produced
  std::string message;
};

/// Predicts `unit` with every input block taken from the package documents
/// as if approved. Traces and artifacts go under `work_dir`.
inline PredictResult predict_from_package(const Scenario& s, const std::string& unit, int horizon,
                                          const GenerationDeps& deps, const fs::path& work_dir) {
  const BlockKind target = BlockTag::UnitPositionsTimeBased;
  if (!s.graph.contains(target)) throw PreconditionError("scenario has no UnitPositionsTimeBased block");
  auto states = s.initial_states();
  std::vector<BlockKind> parents(s.graph.parents(target).begin(), s.graph.parents(target).end());
  std::vector<std::string> inputs;
  for (const auto& p : parents) {
    const auto& doc = s.blocks.at(p).document;
    if (!doc) throw PreconditionError("package has no document for " + p.name());
    states[p] = BlockState::approved(*doc);
    inputs.push_back(p.name());
  }
  auto artifacts = std::make_shared<agents::ArtifactStore>(work_dir / "artifacts");
  const auto registry = orchestrator::build_registry(states, parents, artifacts);
  const orchestrator::TaskEnv env{registry, deps.llm, deps.strategies, work_dir / "traces", "predict", inputs, "",
                                  deps.budget};
  PredictResult r;
  try {
    r.timeline = orchestrator::predict_unit_positions(s, unit, horizon, env);
  } catch (const orchestrator::TaskAborted& e) {
    r.error = e.code();
    r.message = e.what();
  } catch (const TimelineInvalid& e) {
    r.error = e.code();
    r.message = e.what();
  }
  const auto path = work_dir / "traces" / ("predict-" + unit + ".json");
  if (fs::exists(path)) r.trace = orchestrator::trace_from_json(nlohmann::json::parse(read_file(path)));
  return r;
}

}  // namespace sforge::service
