// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sforge/agents/observation.hpp"
#include "sforge/block.hpp"
#include "sforge/dag.hpp"
#include "sforge/error.hpp"
#include "sforge/io.hpp"
#include "sforge/llm/gateway.hpp"
#include "sforge/orchestrator/tasks.hpp"
#include "sforge/scenario.hpp"
#include "sforge/state_machine.hpp"

namespace sforge::service {

/// Block states plus the bookkeeping derived from the event log.
struct Folded {
  std::map<BlockKind, BlockState> states;
  std::map<BlockKind, std::string> last_approved;  // content at the latest approval
  std::map<BlockKind, int> generations;            // GenerationStarted count
  std::map<BlockKind, std::vector<std::string>> traces;  // of the latest finished/failed generation
  std::size_t seq = 0;
};

struct LoggedEvent {
  std::size_t seq = 0;
  BlockKind kind;
  ReviewEvent event;
};

inline nlohmann::json logged_to_json(const LoggedEvent& e) {
  return {{"seq", e.seq}, {"block", e.kind.name()}, {"event", event_to_json(e.event)}};
}

inline LoggedEvent logged_from_json(const nlohmann::json& j) {
  return {j.at("seq").get<std::size_t>(), j.at("block").get<BlockKind>(), event_from_json(j.at("event"))};
}

/// Applies one logged event. Invalidation is not re-derived here: it was
/// logged as explicit UpstreamEdited events.
inline void fold_one(Folded& f, const Scenario& s, const LoggedEvent& e) {
  if (e.seq != f.seq + 1) throw StorageError("event log out of sequence at " + std::to_string(e.seq));
  auto it = f.states.find(e.kind);
  if (it == f.states.end()) throw StorageError("event for unknown block " + e.kind.name());
  it->second = apply_review_event(it->second, s.level_of(e.kind), e.event);
  if (e.event.tag == EventTag::GenerationStarted) ++f.generations[e.kind];
  if (e.event.tag == EventTag::GenerationFinished || e.event.tag == EventTag::GenerationFailed)
    f.traces[e.kind] = e.event.trace_ids;
  if (it->second.tag == StateTag::Approved) f.last_approved[e.kind] = it->second.content;
  f.seq = e.seq;
}

inline Folded fold_events(const Scenario& s, const std::vector<LoggedEvent>& events) {
  Folded f;
  f.states = s.initial_states();
  for (const auto& e : events) fold_one(f, s, e);
  return f;
}

inline nlohmann::json snapshot_json(const Scenario& s, const Folded& f) {
  nlohmann::json blocks = nlohmann::json::object();
  for (const auto& [k, st] : f.states) blocks[k.name()] = state_to_json(st);
  return {{"scenario", s.id}, {"seq", f.seq}, {"blocks", blocks}};
}

inline std::vector<LoggedEvent> read_events(const fs::path& path) {
  std::vector<LoggedEvent> out;
  if (!fs::exists(path)) return out;
  const auto text = read_file(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final line from a crash: ignore
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      out.push_back(logged_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw StorageError("corrupt event log " + path.string() + ": " + e.what());
    }
  }
  return out;
}

/// Output file name for an approved block.
inline std::string output_name(const BlockKind& k, const std::string& content) {
  std::string base;
  for (char c : k.name()) base += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  try {
    if (nlohmann::json::parse(content).is_structured()) return base + ".json";
  } catch (const nlohmann::json::parse_error&) {
  }
  return base + ".md";
}

/// Gateway, strategies and limits used when a session generates a block.
struct GenerationDeps {
  llm::Gateway& llm;
  const orchestrator::StrategyLibrary& strategies;
  std::size_t budget = orchestrator::kDefaultBudget;
};

/// One stored scenario: `<store>/<id>/` holding `package/`, `state.json`,
/// `events.jsonl`, `traces/`, `artifacts/` and `outputs/`. All mutations go
/// through `apply` under the session lock.
class Session {
 public:
  /// Copies the package into a new store entry.
  static std::unique_ptr<Session> create(const fs::path& store, const std::map<std::string, std::string>& files,
                                         Clock& clock) {
    auto it = files.find("scenario.json");
    if (it == files.end()) throw SchemaError("package has no scenario.json");
    Scenario s = load_scenario(it->second, map_resolver(files));
    const auto dir = store / s.id;
    if (fs::exists(dir / "state.json")) throw Conflict("scenario " + s.id + " already exists");
    for (const auto& name : package_file_names(s))
      if (auto f = files.find(name); f != files.end()) write_file_atomic(dir / "package" / name, f->second);
    auto session = std::unique_ptr<Session>(new Session(dir, std::move(s), clock));
    session->persist();
    return session;
  }

  static std::unique_ptr<Session> create_from_dir(const fs::path& store, const fs::path& package_dir, Clock& clock) {
    const auto resolve = directory_resolver(package_dir);
    auto doc = resolve("scenario.json");
    if (!doc) throw SchemaError(package_dir.string() + ": no scenario.json");
    const Scenario s = load_scenario(*doc, resolve);
    std::map<std::string, std::string> files;
    for (const auto& name : package_file_names(s))
      if (auto text = resolve(name)) files.emplace(name, *text);
    return create(store, files, clock);
  }

  /// Reopens a stored scenario by folding its event log. A snapshot that
  /// disagrees with the log is rewritten from the log.
  static std::unique_ptr<Session> open(const fs::path& store, const std::string& id, Clock& clock) {
    const auto dir = store / id;
    if (!fs::exists(dir / "package" / "scenario.json")) throw NotFound("no stored scenario " + id);
    auto s = load_package(dir / "package");
    auto session = std::unique_ptr<Session>(new Session(dir, std::move(s), clock));
    session->folded_ = fold_events(session->scenario_, read_events(dir / "events.jsonl"));
    const auto snap = snapshot_json(session->scenario_, session->folded_);
    if (!fs::exists(dir / "state.json") || nlohmann::json::parse(read_file(dir / "state.json")) != snap)
      session->persist();
    return session;
  }

  const Scenario& scenario() const { return scenario_; }
  const fs::path& dir() const { return dir_; }
  fs::path traces_dir() const { return dir_ / "traces"; }
  fs::path artifacts_dir() const { return dir_ / "artifacts"; }
  fs::path outputs_dir() const { return dir_ / "outputs"; }
  fs::path events_path() const { return dir_ / "events.jsonl"; }
  fs::path state_path() const { return dir_ / "state.json"; }

  std::map<BlockKind, BlockState> states() const {
    std::lock_guard lock(mu_);
    return folded_.states;
  }

  BlockState state(const BlockKind& k) const {
    std::lock_guard lock(mu_);
    return at(k);
  }

  std::set<BlockKind> ready() const {
    std::lock_guard lock(mu_);
    return ready_blocks(scenario_.graph, folded_.states);
  }

  std::vector<std::string> trace_ids(const BlockKind& k) const {
    std::lock_guard lock(mu_);
    auto it = folded_.traces.find(k);
    return it == folded_.traces.end() ? std::vector<std::string>{} : it->second;
  }

  nlohmann::json snapshot() const {
    std::lock_guard lock(mu_);
    return snapshot_json(scenario_, folded_);
  }

  /// `GET /blocks` body: state, level and readiness of every block.
  nlohmann::json blocks_json() const {
    std::lock_guard lock(mu_);
    const auto ready = ready_blocks(scenario_.graph, folded_.states);
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& k : topological_order(scenario_.graph)) {
      nlohmann::json parents = nlohmann::json::array();
      for (const auto& p : scenario_.graph.parents(k)) parents.push_back(p.name());
      blocks.push_back({{"kind", k.name()},
                        {"level", level_name(scenario_.level_of(k))},
                        {"ready", ready.count(k) != 0},
                        {"parents", parents},
                        {"state", state_to_json(folded_.states.at(k))}});
    }
    nlohmann::json ready_names = nlohmann::json::array();
    for (const auto& k : ready) ready_names.push_back(k.name());
    return {{"scenario", scenario_.id}, {"blocks", blocks}, {"ready", ready_names}};
  }

  /// Validates and applies a review event, logs it, logs UpstreamEdited for
  /// every Approved descendant when the block's approved content changed,
  /// and rewrites the snapshot.
  BlockState apply(const BlockKind& k, ReviewEvent e) {
    std::lock_guard lock(mu_);
    return apply_locked(k, std::move(e));
  }

  /// Starts generation; NotReady unless the block is in `ready()`.
  int begin_generation(const BlockKind& k, std::map<BlockKind, BlockState>* snapshot, std::string* feedback) {
    std::lock_guard lock(mu_);
    if (!scenario_.blocks.count(k)) throw NotFound("no block " + k.name());
    if (!ready_blocks(scenario_.graph, folded_.states).count(k))
      throw NotReady(k.name() + " is not ready (" + std::string(state_name(at(k).tag)) + ")");
    apply_locked(k, ReviewEvent::generation_started());
    if (snapshot) *snapshot = folded_.states;
    if (feedback) *feedback = at(k).feedback;
    return folded_.generations[k];
  }

  /// Runs the block's generation task and records the outcome. Any
  /// exception still leaves the block Rejected with the error as feedback.
  orchestrator::GenerationOutcome generate(const BlockKind& k, const GenerationDeps& deps) {
    std::map<BlockKind, BlockState> snap;
    std::string feedback;
    const int generation = begin_generation(k, &snap, &feedback);
    return finish_generation(k, generation, snap, feedback, deps);
  }

  orchestrator::GenerationOutcome finish_generation(const BlockKind& k, int generation,
                                                    const std::map<BlockKind, BlockState>& snap,
                                                    const std::string& feedback, const GenerationDeps& deps) {
    orchestrator::GenerationOutcome out;
    try {
      orchestrator::GenerationRequest req{scenario_, snap, k, generation, feedback, deps.llm, deps.strategies,
                                          artifacts_, traces_dir(), deps.budget};
      out = orchestrator::generate_block(req);
    } catch (const Error& e) {
      auto ev = ReviewEvent::generation_failed(e.code() + ": " + e.what());
      apply(k, ev);
      throw;
    }
    ReviewEvent ev = out.ok ? ReviewEvent::generation_finished(out.content, out.options)
                            : ReviewEvent::generation_failed(out.reason + ": " + out.message, out.draft);
    ev.trace_ids = out.trace_ids;
    apply(k, std::move(ev));
    return out;
  }

  agents::ArtifactStore& artifacts() { return *artifacts_; }

  /// Map for overlays: the Approved MapMcoo content when present.
  map::MapModel current_map() const {
    std::lock_guard lock(mu_);
    if (auto it = folded_.states.find(BlockTag::MapMcoo); it != folded_.states.end() && it->second.tag == StateTag::Approved)
      return map::map_from_json(sforge::detail::parse_json(it->second.content, "MapMcoo"));
    return scenario_.map;
  }

  /// Test hook run between the snapshot temp write and its rename.
  void set_crash_hook(std::function<void()> hook) { crash_hook_ = std::move(hook); }

 private:
  Session(fs::path dir, Scenario s, Clock& clock)
      : dir_(std::move(dir)),
        scenario_(std::move(s)),
        clock_(clock),
        artifacts_(std::make_shared<agents::ArtifactStore>(dir_ / "artifacts")) {
    folded_.states = scenario_.initial_states();
  }

  const BlockState& at(const BlockKind& k) const {
    auto it = folded_.states.find(k);
    if (it == folded_.states.end()) throw NotFound("no block " + k.name());
    return it->second;
  }

  BlockState apply_locked(const BlockKind& k, ReviewEvent e) {
    const auto& current = at(k);
    const auto level = scenario_.level_of(k);
    if (e.tag == EventTag::Edit) validate_block_content(scenario_, k, e.text);
    e.timestamp = clock_.now();
    // Validate before logging anything.
    const BlockState next = apply_review_event(current, level, e);

    std::vector<LoggedEvent> batch{{folded_.seq + 1, k, e}};
    const bool changed_approval =
        next.tag == StateTag::Approved &&
        (!folded_.last_approved.count(k) || folded_.last_approved.at(k) != next.content);
    if (changed_approval) {
      auto after = folded_.states;
      after[k] = next;
      for (const auto& d : invalidated_by(scenario_.graph, k, after)) {
        auto up = ReviewEvent::upstream_edited();
        up.timestamp = clock_.now();
        up.note = "upstream " + k.name() + " changed";
        batch.push_back({folded_.seq + batch.size() + 1, d, up});
      }
    }
    Folded trial = folded_;
    for (const auto& le : batch) fold_one(trial, scenario_, le);
    for (const auto& le : batch) append_line(events_path(), logged_to_json(le).dump());
    folded_ = std::move(trial);
    if (next.tag == StateTag::Approved) write_file_atomic(outputs_dir() / output_name(k, next.content), next.content);
    persist();
    return folded_.states.at(k);
  }

  void persist() { write_file_atomic(state_path(), snapshot_json(scenario_, folded_).dump(2) + "\n", crash_hook_); }

  fs::path dir_;
  Scenario scenario_;
  Clock& clock_;
  std::shared_ptr<agents::ArtifactStore> artifacts_;
  mutable std::mutex mu_;
  Folded folded_;
  std::function<void()> crash_hook_;
};

}  // namespace sforge::service
