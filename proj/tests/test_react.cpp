// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "sforge/orchestrator/tasks.hpp"
#include "sforge/scenario.hpp"
#include "support/temp_dir.hpp"

using namespace sforge;
using namespace sforge::orchestrator;

namespace {

const Scenario& fixture() {
  static const Scenario s = load_package(SFORGE_FIXTURE_DIR);
  return s;
}

const std::vector<BlockKind> kUptbInputs = {BlockTag::HighLevelUnitPurpose, BlockTag::DecisionSupportMatrix,
                                            BlockTag::MapMcoo};

struct Env {
  test::TempDir dir;
  std::map<BlockKind, BlockState> states = [] {
    auto st = fixture().initial_states();
    for (const auto& k : kUptbInputs) st[k] = BlockState::approved(*fixture().blocks.at(k).document);
    return st;
  }();
  agents::Registry registry =
      build_registry(states, kUptbInputs, std::make_shared<agents::ArtifactStore>(dir.path() / "artifacts"));
};

TaskSpec spec(std::size_t budget = kDefaultBudget) {
  TaskSpec s;
  s.task_id = "t";
  s.block = "UnitPositionsTimeBased";
  s.objective = "Predict 25ID.";
  s.budget = budget;
  return s;
}

llm::Gateway script(const std::string& name) {
  return llm::Gateway(llm::ScriptedBackend::from_file(std::string(SFORGE_FIXTURE_DIR) + "/scripts/" + name + ".json"));
}

llm::Gateway replies(std::vector<std::string> r) {
  return llm::Gateway(std::make_unique<llm::ScriptedBackend>(std::move(r)));
}

const std::string kAsk =
    "Thought: I need the purpose of 25ID.\nAction: HighLevelUnitPurpose.answer\n"
    "Action Input: {\"question\": \"What is the purpose of 25ID?\"}";

}  // namespace

TEST(Parser, ActionTriple) {
  const auto p = parse_react_block(
      "Thought: Determine which route 25ID takes.\n"
      "Action: MapMcoo.propose_routes\n"
      "Action Input: {\"from\": \"25ID\", \"to\": \"OBJ BRONCOS\"}\n");
  const auto& a = std::get<ActionBlock>(p);
  EXPECT_EQ(a.thought, "Determine which route 25ID takes.");
  EXPECT_EQ(a.agent, "MapMcoo");
  EXPECT_EQ(a.operation, "propose_routes");
  EXPECT_EQ(a.input, (nlohmann::json{{"from", "25ID"}, {"to", "OBJ BRONCOS"}}));
}

TEST(Parser, FinalAnswerAndVariants) {
  const auto f = std::get<FinalBlock>(parse_react_block("Thought: done\nFinal Answer: 25ID reaches OBJ BRONCOS."));
  EXPECT_EQ(f.thought, "done");
  EXPECT_EQ(f.text, "25ID reaches OBJ BRONCOS.");
  EXPECT_EQ(std::get<FinalBlock>(parse_react_block("final answer: ok")).text, "ok");

  const auto fenced = std::get<ActionBlock>(
      parse_react_block("Thought: t\nAction: A.b\nAction Input:\n```json\n{\"x\": 1}\n```\n"));
  EXPECT_EQ(fenced.input.at("x"), 1);

  // Anything after a model-written Observation is dropped.
  const auto cut = std::get<ActionBlock>(
      parse_react_block("Thought: t\nAction: A.b\nAction Input: {}\nObservation: made up\nFinal Answer: x"));
  EXPECT_EQ(cut.agent, "A");
}

TEST(Parser, FormatErrors) {
  for (const char* bad : {"Action: A.b\nAction Input: {}",
                          "Thought: t\nAction Input: {}",
                          "Thought: t\nAction: A.b",
                          "Thought: t\nAction: nodot\nAction Input: {}",
                          "Thought: t\nAction: A.b\nAction Input: [1]",
                          "Thought: t\nAction: A.b\nAction Input: {oops",
                          "Action Input: {}\nThought: t\nAction: A.b",
                          "Thought: t\nAction: A.b\nAction Input: {}\nFinal Answer: x",
                          "Thought: a\nThought: b\nFinal Answer: x",
                          "Final Answer:   ",
                          "just prose"}) {
    SCOPED_TRACE(bad);
    EXPECT_THROW(parse_react_block(bad), FormatError);
  }
}

TEST(Parser, FencedJson) {
  EXPECT_EQ(extract_fenced_json("x\n```json\n{\"a\": 2}\n```").at("a"), 2);
  EXPECT_EQ(extract_fenced_json("```\n{}\n```"), nlohmann::json::object());
  EXPECT_THROW(extract_fenced_json("{\"a\": 2}"), FormatError);
  EXPECT_THROW(extract_fenced_json("```python\n{}\n```"), FormatError);
  EXPECT_THROW(extract_fenced_json("```json\n[1]\n```"), FormatError);
}

TEST(Loop, FourStepsThenFinal) {
  Env env;
  auto g = replies({kAsk, "25ID attacks east [1].", kAsk, "25ID attacks east [1].", kAsk, "again", kAsk, "again",
                    "Thought: enough\nFinal Answer: 25ID attacks east."});
  const auto r = run_task(spec(), env.registry, g, env.dir.path() / "traces");
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.trace.steps.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r.trace.steps[i].index, i);
    EXPECT_EQ(r.trace.steps[i].status, StepStatus::Ok);
  }
  EXPECT_EQ(r.trace.final->text, "25ID attacks east.");
  EXPECT_EQ(r.trace.llm_calls, 5u);
  EXPECT_EQ(g.calls(), 9u);
  EXPECT_TRUE(fs::exists(env.dir.path() / "traces" / "t.json"));
}

TEST(Loop, MalformedThenCorrected) {
  Env env;
  auto g = script("malformed-then-corrected");
  auto s = spec();
  s.structured = true;
  const auto r = run_task(s, env.registry, g);
  ASSERT_TRUE(r.ok());
  std::size_t retried = 0;
  for (const auto& st : r.trace.steps) retried += st.status == StepStatus::Retried;
  EXPECT_EQ(retried, 1u);
  EXPECT_EQ(r.trace.steps.at(0).status, StepStatus::Retried);
  ASSERT_EQ(r.trace.format_errors.size(), 1u);
  EXPECT_EQ(r.trace.format_errors[0].before_step, 0u);
  EXPECT_EQ(r.trace.final->payload.at("route_id"), "r1");
}

TEST(Loop, NeverFinalizingStopsAtBudget) {
  for (std::size_t budget : {1u, 3u, 5u}) {
    Env env;
    auto g = script("never-finalizing");
    const auto r = run_task(spec(budget), env.registry, g, env.dir.path());
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(r.trace.aborted, "BudgetExhausted");
    EXPECT_EQ(r.trace.steps.size(), budget);
    EXPECT_EQ(r.trace.budget_used(), budget);
    const auto saved = trace_from_json(nlohmann::json::parse(read_file(env.dir.path() / "t.json")));
    EXPECT_EQ(saved.aborted, "BudgetExhausted");
  }
  Env env;
  auto g = script("never-finalizing");
  try {
    run_task_or_throw(spec(5), env.registry, g);
    FAIL();
  } catch (const TaskAborted& e) {
    EXPECT_EQ(e.code(), "BudgetExhausted");
  }
}

TEST(Loop, ThreeFormatErrorsAbort) {
  Env env;
  auto g = replies({"nonsense", "more nonsense", "still nonsense", kAsk});
  const auto r = run_task(spec(), env.registry, g);
  EXPECT_EQ(r.trace.aborted, "PersistentFormatError");
  EXPECT_TRUE(r.trace.steps.empty());
  EXPECT_EQ(r.trace.format_errors.size(), 3u);

  // Two in a row is still recoverable, and a good turn resets the count.
  Env env2;
  auto g2 = replies({"bad", "bad", kAsk, "ok", "bad", "bad", "Final Answer: done"});
  const auto r2 = run_task(spec(), env2.registry, g2);
  ASSERT_TRUE(r2.ok());
  EXPECT_EQ(r2.trace.format_errors.size(), 4u);
}

TEST(Loop, ErrorObservationsAreFedBack) {
  Env env;
  auto g = replies({"Thought: t\nAction: Nobody.answer\nAction Input: {}",
                    "Thought: t\nAction: MapMcoo.route_progress\nAction Input: {\"route_id\": \"r7\", \"start\": 0, "
                    "\"arrive\": 5, \"query\": 3}",
                    kAsk, "fine", "Final Answer: done"});
  const auto r = run_task(spec(), env.registry, g);
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.trace.steps.size(), 3u);
  EXPECT_EQ(r.trace.steps[0].status, StepStatus::Failed);
  EXPECT_EQ(r.trace.steps[0].observation.reason, "UnknownTool");
  EXPECT_EQ(r.trace.steps[1].status, StepStatus::Failed);
  EXPECT_EQ(r.trace.steps[2].status, StepStatus::Retried);
}

TEST(Loop, RejectsZeroBudgetAndPropagatesScriptErrors) {
  Env env;
  auto g = replies({});
  EXPECT_THROW(run_task(spec(0), env.registry, g), PreconditionError);
  EXPECT_THROW(run_task(spec(), env.registry, g, env.dir.path()), ScriptExhausted);
  const auto saved = trace_from_json(nlohmann::json::parse(read_file(env.dir.path() / "t.json")));
  EXPECT_EQ(saved.aborted, "ScriptExhausted");
}

// Every trace satisfies the step invariants, whatever the script.
TEST(LoopProperty, TraceInvariants) {
  const std::vector<std::string> turns = {kAsk, "Thought: t\nAction: Nobody.x\nAction Input: {}", "garbage",
                                          "Thought: t\nAction: MapMcoo.list_elements\nAction Input: {}",
                                          "Final Answer: done"};
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 80; ++trial) {
    Env env;
    std::vector<std::string> script;
    for (int i = 0; i < 40; ++i) {
      script.push_back(turns[rng() % turns.size()]);
      if (script.back() == kAsk) script.push_back("answer");
    }
    auto g = replies(script);
    const std::size_t budget = 1 + rng() % 8;
    const auto r = run_task(spec(budget), env.registry, g);
    const auto& t = r.trace;
    EXPECT_NE(t.final.has_value(), t.aborted.has_value());
    EXPECT_LE(t.budget_used(), budget);
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      EXPECT_EQ(t.steps[i].index, i);
      if (i && t.steps[i - 1].status == StepStatus::Failed) { EXPECT_NE(t.steps[i].status, StepStatus::Ok); }
    }
    EXPECT_EQ(t.llm_calls, t.steps.size() + t.format_errors.size() + (t.final ? 1 : 0));
    EXPECT_EQ(trace_to_json(trace_from_json(trace_to_json(t))), trace_to_json(t));
  }
}
