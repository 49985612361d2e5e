// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sforge/agents/observation.hpp"
#include "sforge/block.hpp"
#include "sforge/error.hpp"
#include "sforge/llm/gateway.hpp"
#include "sforge/retrieval.hpp"

namespace sforge::agents {

struct ToolDescriptor {
  std::string name;
  std::string description;
  nlohmann::json parameters;  // JSON-Schema object
  bool returns_image = false;
};

/// Retrieval-grounded answerer for one information block.
struct HelperAgent {
  BlockKind kind;
  retrieval::Corpus corpus;
  std::string system_preamble;
  std::vector<ToolDescriptor> tools;
  std::size_t top_k = retrieval::kDefaultTopK;
};

/// Template pieces around the retrieved chunks. Everything else in a helper
/// prompt comes from the preamble, the chunks or the question.
inline constexpr const char* kContextHeader = "Context:\n";
inline constexpr const char* kEmptyContext = "(no matching passages)\n";
inline constexpr const char* kQuestionHeader = "\nQuestion: ";

/// The two messages sent for `question`, plus the source paths used.
inline llm::ChatRequest helper_prompt(const HelperAgent& agent, const std::string& question,
                                      std::vector<std::string>* sources = nullptr) {
  std::string user = kContextHeader;
  std::size_t used = 0;
  for (const auto& sc : retrieval::retrieve_top_k(agent.corpus, question, agent.top_k)) {
    if (sc.score <= 0.0) break;
    user += "[" + std::to_string(++used) + "] " + sc.chunk->text + "\n";
    if (sources) sources->push_back(sc.chunk->source_path);
  }
  if (used == 0) user += kEmptyContext;
  user += kQuestionHeader + question;
  llm::ChatRequest r;
  r.messages.push_back({"system", agent.system_preamble, {}});
  r.messages.push_back({"user", user, {}});
  return r;
}

/// Single-shot RAG answer. Transport failures become error observations so
/// the orchestrator can retry; cassette and script misconfiguration escape
/// as exceptions.
inline Observation answer_query(const HelperAgent& agent, const std::string& question, llm::Gateway& llm) {
  if (question.empty()) throw ArgsError("question must not be empty");
  std::vector<std::string> sources;
  const auto request = helper_prompt(agent, question, &sources);
  Observation o;
  try {
    o.text = llm.complete(request);
  } catch (const TransportError& e) {
    return Observation::failure(e.reason(), agent.kind.name() + " helper unavailable: " + e.what());
  }
  o.payload = {{"agent", agent.kind.name()}, {"sources", sources}, {"low_evidence", sources.empty()}};
  return o;
}

}  // namespace sforge::agents
