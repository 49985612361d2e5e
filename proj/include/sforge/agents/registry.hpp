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
#include "sforge/agents/observation.hpp"
#include "sforge/error.hpp"
#include "sforge/llm/gateway.hpp"

namespace sforge::agents {

/// Helper agents addressable by block-kind name. Built once per task from
/// the Approved blocks and not modified afterwards.
class Registry {
 public:
  void add(HelperAgent agent) {
    const auto name = agent.kind.name();
    if (helpers_.count(name) || (map_ && map_->helper().kind.name() == name))
      throw PreconditionError("duplicate helper agent " + name);
    helpers_.emplace(name, std::move(agent));
  }

  void set_map_agent(std::unique_ptr<MapAgent> agent) {
    if (helpers_.count(agent->helper().kind.name())) throw PreconditionError("duplicate helper agent MapMcoo");
    map_ = std::move(agent);
  }

  bool has(const std::string& name) const { return helpers_.count(name) || (map_ && map_->helper().kind.name() == name); }
  MapAgent* map_agent() const { return map_.get(); }

  const HelperAgent* helper(const std::string& name) const {
    if (auto it = helpers_.find(name); it != helpers_.end()) return &it->second;
    if (map_ && map_->helper().kind.name() == name) return &map_->helper();
    return nullptr;
  }

  /// Every agent name, sorted.
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [n, _] : helpers_) out.push_back(n);
    if (map_) out.push_back(map_->helper().kind.name());
    std::sort(out.begin(), out.end());
    return out;
  }

  /// `operation` is "answer" for every agent, or one of the map tools.
  Observation dispatch(const std::string& agent, const std::string& operation, const nlohmann::json& input,
                       llm::Gateway& llm, ToolSession& session) const {
    const HelperAgent* h = helper(agent);
    if (!h) throw UnknownTool("no helper agent named \"" + agent + "\"");
    if (operation == "answer") {
      if (!input.is_object() || !input.contains("question") || !input.at("question").is_string())
        throw ArgsError("answer expects {\"question\": \"...\"}");
      return answer_query(*h, input.at("question").get<std::string>(), llm);
    }
    if (map_ && h == &map_->helper()) return map_->invoke_tool(operation, input, session);
    throw UnknownTool(agent + " has no operation \"" + operation + "\"");
  }

  /// Text listing of actions for the orchestrator prompt.
  std::string describe() const {
    std::string s;
    for (const auto& name : names()) {
      s += "- " + name + ".answer {\"question\": string}: ask the " + name + " helper\n";
      if (map_ && name == map_->helper().kind.name())
        for (const auto& t : map_->helper().tools)
          s += "- " + name + "." + t.name + " " + t.parameters.value("properties", nlohmann::json::object()).dump() +
               ": " + t.description + "\n";
    }
    return s;
  }

 private:
  std::map<std::string, HelperAgent> helpers_;
  std::unique_ptr<MapAgent> map_;
};

}  // namespace sforge::agents
