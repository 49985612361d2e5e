// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <compare>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sforge/error.hpp"

namespace sforge {

enum class BlockTag {
  Backstory,
  LearningObjectives,
  MapMcoo,
  ForceGroupings,
  RedBlueObjectives,
  HighLevelUnitPurpose,
  DecisionSupportMatrix,
  UnitPositionsTimeBased,
  OpordSchemeOfManeuver,
  OpordSection,
};

inline constexpr std::array<BlockTag, 9> kFixedBlockTags = {
    BlockTag::Backstory,          BlockTag::LearningObjectives,   BlockTag::MapMcoo,
    BlockTag::ForceGroupings,     BlockTag::RedBlueObjectives,    BlockTag::HighLevelUnitPurpose,
    BlockTag::DecisionSupportMatrix, BlockTag::UnitPositionsTimeBased,
    BlockTag::OpordSchemeOfManeuver,
};

inline std::string_view tag_name(BlockTag t) {
  switch (t) {
    case BlockTag::Backstory: return "Backstory";
    case BlockTag::LearningObjectives: return "LearningObjectives";
    case BlockTag::MapMcoo: return "MapMcoo";
    case BlockTag::ForceGroupings: return "ForceGroupings";
    case BlockTag::RedBlueObjectives: return "RedBlueObjectives";
    case BlockTag::HighLevelUnitPurpose: return "HighLevelUnitPurpose";
    case BlockTag::DecisionSupportMatrix: return "DecisionSupportMatrix";
    case BlockTag::UnitPositionsTimeBased: return "UnitPositionsTimeBased";
    case BlockTag::OpordSchemeOfManeuver: return "OpordSchemeOfManeuver";
    case BlockTag::OpordSection: return "OpordSection";
  }
  return "?";
}

/// One information block of a scenario. Ordered by `name()` so that every
/// container of kinds iterates lexicographically.
class BlockKind {
 public:
  BlockKind(BlockTag tag) : tag_(tag) {}  // NOLINT(google-explicit-constructor)

  static BlockKind opord_section(std::string section) {
    if (section.empty()) throw SchemaError("OpordSection needs a name");
    BlockKind k(BlockTag::OpordSection);
    k.section_ = std::move(section);
    return k;
  }

  /// Accepts the names produced by `name()`.
  static BlockKind parse(std::string_view s) {
    constexpr std::string_view prefix = "OpordSection:";
    if (s.substr(0, prefix.size()) == prefix) return opord_section(std::string(s.substr(prefix.size())));
    for (auto t : kFixedBlockTags)
      if (tag_name(t) == s) return BlockKind(t);
    throw SchemaError("unknown block kind: " + std::string(s));
  }

  BlockTag tag() const { return tag_; }
  const std::string& section() const { return section_; }

  std::string name() const {
    if (tag_ == BlockTag::OpordSection) return "OpordSection:" + section_;
    return std::string(tag_name(tag_));
  }

  friend bool operator==(const BlockKind& a, const BlockKind& b) {
    return a.tag_ == b.tag_ && a.section_ == b.section_;
  }
  friend std::strong_ordering operator<=>(const BlockKind& a, const BlockKind& b) {
    return a.name() <=> b.name();
  }

 private:
  BlockTag tag_;
  std::string section_;
};

inline std::string node_name(const BlockKind& k) { return k.name(); }


enum class AutomationLevel { Green, Orange, Purple };

inline std::string_view level_name(AutomationLevel l) {
  switch (l) {
    case AutomationLevel::Green: return "green";
    case AutomationLevel::Orange: return "orange";
    case AutomationLevel::Purple: return "purple";
  }
  return "?";
}

inline AutomationLevel parse_level(std::string_view s) {
  if (s == "green") return AutomationLevel::Green;
  if (s == "orange") return AutomationLevel::Orange;
  if (s == "purple") return AutomationLevel::Purple;
  throw SchemaError("unknown automation level: " + std::string(s));
}

/// BlockKind -> AutomationLevel classification. The shipped
/// `config/automation_levels.json` mirrors `defaults()`.
class AutomationTable {
 public:
  static const AutomationTable& defaults() {
    static const AutomationTable table = [] {
      AutomationTable t;
      using L = AutomationLevel;
      t.levels_ = {
          {"Backstory", L::Purple},
          {"LearningObjectives", L::Purple},
          {"MapMcoo", L::Purple},
          {"ForceGroupings", L::Orange},
          {"RedBlueObjectives", L::Orange},
          {"HighLevelUnitPurpose", L::Orange},
          {"DecisionSupportMatrix", L::Orange},
          {"UnitPositionsTimeBased", L::Orange},
          {"OpordSchemeOfManeuver", L::Green},
          {"OpordSection", L::Green},
      };
      return t;
    }();
    return table;
  }

  /// `{"Backstory": "purple", ...}`; `"OpordSection"` covers every section.
  /// Kinds missing from the document keep their default level.
  static AutomationTable from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaError("automation table must be an object");
    AutomationTable t = defaults();
    for (const auto& [name, level] : j.items()) {
      if (name != "OpordSection") (void)BlockKind::parse(name);
      if (!level.is_string()) throw SchemaError("automation level for " + name + " must be a string");
      t.levels_[name] = parse_level(level.get<std::string>());
    }
    return t;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, level] : levels_) j[name] = level_name(level);
    return j;
  }

  AutomationLevel level_of(const BlockKind& kind) const {
    return levels_.at(std::string(tag_name(kind.tag())));
  }

 private:
  std::map<std::string, AutomationLevel> levels_;
};

inline AutomationLevel automation_level_of(const BlockKind& kind,
                                           const AutomationTable& table = AutomationTable::defaults()) {
  return table.level_of(kind);
}

}  // namespace sforge

template <>
struct nlohmann::adl_serializer<sforge::BlockKind> {
  static sforge::BlockKind from_json(const nlohmann::json& j) {
    if (!j.is_string()) throw sforge::SchemaError("block kind must be a string");
    return sforge::BlockKind::parse(j.get<std::string>());
  }
  static void to_json(nlohmann::json& j, const sforge::BlockKind& k) { j = k.name(); }
};
