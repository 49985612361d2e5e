// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sforge/block.hpp"
#include "sforge/error.hpp"

namespace sforge {

enum class StateTag { Pending, Ready, Generating, AwaitingReview, AwaitingSelection, Approved, Rejected, Stale };

inline constexpr std::array<StateTag, 8> kAllStateTags = {
    StateTag::Pending,  StateTag::Ready,    StateTag::Generating, StateTag::AwaitingReview,
    StateTag::AwaitingSelection, StateTag::Approved, StateTag::Rejected, StateTag::Stale,
};

inline std::string_view state_name(StateTag t) {
  switch (t) {
    case StateTag::Pending: return "Pending";
    case StateTag::Ready: return "Ready";
    case StateTag::Generating: return "Generating";
    case StateTag::AwaitingReview: return "AwaitingReview";
    case StateTag::AwaitingSelection: return "AwaitingSelection";
    case StateTag::Approved: return "Approved";
    case StateTag::Rejected: return "Rejected";
    case StateTag::Stale: return "Stale";
  }
  return "?";
}

inline StateTag parse_state_tag(std::string_view s) {
  for (auto t : kAllStateTags)
    if (state_name(t) == s) return t;
  throw SchemaError("unknown block state: " + std::string(s));
}

/// Lifecycle state of one block.
///
/// `content` is authoritative only when `tag == Approved`. AwaitingReview
/// holds the draft under review there, Stale keeps the superseded content
/// for display, and Rejected may retain a draft that failed validation.
/// `attempts` counts regenerations since the last approval.
struct BlockState {
  StateTag tag = StateTag::Pending;
  std::string content;
  std::vector<std::string> options;
  std::string feedback;
  int attempts = 0;

  static BlockState pending() { return {}; }
  static BlockState approved(std::string c) {
    BlockState s;
    s.tag = StateTag::Approved;
    s.content = std::move(c);
    return s;
  }

  bool is(StateTag t) const { return tag == t; }

  friend bool operator==(const BlockState&, const BlockState&) = default;
};

enum class EventTag {
  GenerationStarted,
  GenerationFinished,
  GenerationFailed,
  Approve,
  Reject,
  Edit,
  SelectOption,
  UpstreamEdited,
};

inline constexpr std::array<EventTag, 8> kAllEventTags = {
    EventTag::GenerationStarted, EventTag::GenerationFinished, EventTag::GenerationFailed,
    EventTag::Approve,           EventTag::Reject,             EventTag::Edit,
    EventTag::SelectOption,      EventTag::UpstreamEdited,
};

inline std::string_view event_name(EventTag t) {
  switch (t) {
    case EventTag::GenerationStarted: return "GenerationStarted";
    case EventTag::GenerationFinished: return "GenerationFinished";
    case EventTag::GenerationFailed: return "GenerationFailed";
    case EventTag::Approve: return "Approve";
    case EventTag::Reject: return "Reject";
    case EventTag::Edit: return "Edit";
    case EventTag::SelectOption: return "SelectOption";
    case EventTag::UpstreamEdited: return "UpstreamEdited";
  }
  return "?";
}

inline EventTag parse_event_tag(std::string_view s) {
  for (auto t : kAllEventTags)
    if (event_name(t) == s) return t;
  throw SchemaError("unknown review event: " + std::string(s));
}

enum class Actor { Human, System };

inline bool requires_human(EventTag t) {
  return t == EventTag::Approve || t == EventTag::Reject || t == EventTag::Edit || t == EventTag::SelectOption;
}

struct ReviewEvent {
  EventTag tag = EventTag::GenerationStarted;
  Actor actor = Actor::System;
  std::string timestamp;
  std::string text;                  // payload, feedback, new content, or failure reason
  std::vector<std::string> options;  // GenerationFinished on purple blocks
  int index = 0;                     // SelectOption
  std::vector<std::string> trace_ids;
  std::string note;

  static ReviewEvent of(EventTag tag, Actor actor) {
    ReviewEvent e;
    e.tag = tag;
    e.actor = actor;
    return e;
  }
  static ReviewEvent generation_started() { return of(EventTag::GenerationStarted, Actor::System); }
  static ReviewEvent generation_finished(std::string payload, std::vector<std::string> options = {}) {
    ReviewEvent e = of(EventTag::GenerationFinished, Actor::System);
    e.text = std::move(payload);
    e.options = std::move(options);
    return e;
  }
  static ReviewEvent generation_failed(std::string reason, std::string draft = {}) {
    ReviewEvent e = of(EventTag::GenerationFailed, Actor::System);
    e.text = std::move(reason);
    e.options = draft.empty() ? std::vector<std::string>{} : std::vector<std::string>{std::move(draft)};
    return e;
  }
  static ReviewEvent approve() { return of(EventTag::Approve, Actor::Human); }
  static ReviewEvent reject(std::string feedback) {
    ReviewEvent e = of(EventTag::Reject, Actor::Human);
    e.text = std::move(feedback);
    return e;
  }
  static ReviewEvent edit(std::string content) {
    ReviewEvent e = of(EventTag::Edit, Actor::Human);
    e.text = std::move(content);
    return e;
  }
  static ReviewEvent select_option(int index) {
    ReviewEvent e = of(EventTag::SelectOption, Actor::Human);
    e.index = index;
    return e;
  }
  static ReviewEvent upstream_edited() { return of(EventTag::UpstreamEdited, Actor::System); }
};

inline constexpr int kMaxRegenerations = 3;
inline constexpr std::size_t kDefaultPurpleOptions = 3;

/// The published transition table: target state tag for (state, level,
/// event), or nullopt when the transition is illegal. `docs/state_machine.json`
/// is generated from and tested against this function.
inline std::optional<StateTag> transition_target(StateTag s, AutomationLevel level, EventTag e) {
  using S = StateTag;
  using E = EventTag;
  using L = AutomationLevel;
  switch (e) {
    case E::GenerationStarted:
      if (s == S::Pending || s == S::Ready || s == S::Rejected || s == S::Stale) return S::Generating;
      return std::nullopt;
    case E::GenerationFinished:
      if (s != S::Generating) return std::nullopt;
      switch (level) {
        case L::Green: return S::Approved;
        case L::Orange: return S::AwaitingReview;
        case L::Purple: return S::AwaitingSelection;
      }
      return std::nullopt;
    case E::GenerationFailed:
      if (s == S::Generating) return S::Rejected;
      return std::nullopt;
    case E::Approve:
      if (s == S::AwaitingReview && level == L::Orange) return S::Approved;
      return std::nullopt;
    case E::Reject:
      if (s == S::AwaitingReview && level == L::Orange) return S::Rejected;
      if (s == S::AwaitingSelection && level == L::Purple) return S::Rejected;
      return std::nullopt;
    case E::Edit:
      if (s == S::Generating) return std::nullopt;
      if (s == S::AwaitingReview && level != L::Orange) return std::nullopt;
      if (s == S::AwaitingSelection && level != L::Purple) return std::nullopt;
      return S::Approved;
    case E::SelectOption:
      if (s == S::AwaitingSelection && level == L::Purple) return S::Approved;
      return std::nullopt;
    case E::UpstreamEdited:
      if (s == S::Approved) return S::Stale;
      return std::nullopt;
  }
  return std::nullopt;
}

/// Pure transition function. Beyond the tag-level table it enforces the
/// data-level rules: actor of human events, purple option count, option
/// index range and the regeneration cap.
inline BlockState apply_review_event(const BlockState& state, AutomationLevel level, const ReviewEvent& event) {
  auto illegal = [&](const std::string& why) -> IllegalTransition {
    return IllegalTransition(std::string(event_name(event.tag)) + " on " + std::string(state_name(state.tag)) +
                             " (" + std::string(level_name(level)) + "): " + why);
  };
  const auto target = transition_target(state.tag, level, event.tag);
  if (!target) throw illegal("not in transition table");

  const bool human = event.actor == Actor::Human;
  if (requires_human(event.tag) != human)
    throw illegal(human ? "system event issued by a human" : "requires a human actor");

  BlockState next;
  next.tag = *target;
  switch (event.tag) {
    case EventTag::GenerationStarted:
      if (state.tag == StateTag::Rejected) {
        if (state.attempts >= kMaxRegenerations) throw illegal("regeneration limit reached; edit required");
        next.attempts = state.attempts + 1;
      } else {
        next.attempts = state.attempts;
      }
      if (state.tag == StateTag::Stale) next.content = state.content;
      next.feedback = state.feedback;
      break;
    case EventTag::GenerationFinished:
      next.attempts = state.attempts;
      if (level == AutomationLevel::Purple) {
        if (event.options.size() < 2) throw illegal("purple blocks need at least two options");
        next.options = event.options;
      } else {
        next.content = event.text;
        if (level == AutomationLevel::Green) next.attempts = 0;
      }
      break;
    case EventTag::GenerationFailed:
      next.feedback = event.text;
      next.attempts = state.attempts;
      if (!event.options.empty()) next.content = event.options.front();
      break;
    case EventTag::Approve:
      next.content = state.content;
      break;
    case EventTag::Reject:
      if (event.text.empty()) throw illegal("rejection needs feedback");
      next.feedback = event.text;
      next.attempts = state.attempts;
      next.content = state.content;
      break;
    case EventTag::Edit:
      next.content = event.text;
      break;
    case EventTag::SelectOption:
      if (event.index < 0 || static_cast<std::size_t>(event.index) >= state.options.size())
        throw illegal("option index out of range");
      next.content = state.options[static_cast<std::size_t>(event.index)];
      break;
    case EventTag::UpstreamEdited:
      next.content = state.content;
      break;
  }
  return next;
}

// ---- JSON ------------------------------------------------------------------

inline nlohmann::json state_to_json(const BlockState& s) {
  nlohmann::json j = {{"state", state_name(s.tag)}};
  if (!s.content.empty()) j["content"] = s.content;
  if (!s.options.empty()) j["options"] = s.options;
  if (!s.feedback.empty()) j["feedback"] = s.feedback;
  if (s.attempts) j["attempts"] = s.attempts;
  return j;
}

inline BlockState state_from_json(const nlohmann::json& j) {
  BlockState s;
  s.tag = parse_state_tag(j.at("state").get<std::string>());
  s.content = j.value("content", std::string{});
  s.options = j.value("options", std::vector<std::string>{});
  s.feedback = j.value("feedback", std::string{});
  s.attempts = j.value("attempts", 0);
  return s;
}

inline nlohmann::json event_to_json(const ReviewEvent& e) {
  nlohmann::json j = {{"event", event_name(e.tag)},
                      {"actor", e.actor == Actor::Human ? "human" : "system"},
                      {"timestamp", e.timestamp}};
  if (!e.text.empty()) j["text"] = e.text;
  if (!e.options.empty()) j["options"] = e.options;
  if (e.tag == EventTag::SelectOption) j["index"] = e.index;
  if (!e.trace_ids.empty()) j["trace_ids"] = e.trace_ids;
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

inline ReviewEvent event_from_json(const nlohmann::json& j) {
  ReviewEvent e;
  e.tag = parse_event_tag(j.at("event").get<std::string>());
  const auto actor = j.at("actor").get<std::string>();
  if (actor != "human" && actor != "system") throw SchemaError("unknown actor: " + actor);
  e.actor = actor == "human" ? Actor::Human : Actor::System;
  e.timestamp = j.value("timestamp", std::string{});
  e.text = j.value("text", std::string{});
  e.options = j.value("options", std::vector<std::string>{});
  e.index = j.value("index", 0);
  e.trace_ids = j.value("trace_ids", std::vector<std::string>{});
  e.note = j.value("note", std::string{});
  return e;
}

/// Machine-readable table: one entry per legal (state, level, event).
inline nlohmann::json transition_table_json() {
  nlohmann::json rows = nlohmann::json::array();
  for (auto s : kAllStateTags)
    for (auto l : {AutomationLevel::Green, AutomationLevel::Orange, AutomationLevel::Purple})
      for (auto e : kAllEventTags)
        if (auto t = transition_target(s, l, e))
          rows.push_back({{"state", state_name(s)}, {"level", level_name(l)}, {"event", event_name(e)},
                          {"next", state_name(*t)}});
  return {{"transitions", rows}};
}

}  // namespace sforge
