// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "sforge/service/pipeline.hpp"
#include "support/temp_dir.hpp"

using namespace sforge;
using namespace sforge::service;

namespace {

struct CrashNow {};

struct Store {
  test::TempDir dir;
  LogicalClock clock;
  std::unique_ptr<Session> session = Session::create_from_dir(dir.path(), SFORGE_FIXTURE_DIR, clock);

  nlohmann::json disk_snapshot() const { return nlohmann::json::parse(read_file(session->state_path())); }
  nlohmann::json folded() const {
    return snapshot_json(session->scenario(), fold_events(session->scenario(), read_events(session->events_path())));
  }
  std::size_t log_lines() const {
    if (!fs::exists(session->events_path())) return 0;
    const auto text = read_file(session->events_path());
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  }
  void load_docs() {
    const auto& sc = session->scenario();
    for (const auto& k : topological_order(sc.graph))
      if (const auto& doc = sc.blocks.at(k).document) session->apply(k, ReviewEvent::edit(*doc));
  }
};

ReviewEvent hlup_edit() {
  auto j = nlohmann::json::parse(*load_package(SFORGE_FIXTURE_DIR).blocks.at(BlockTag::HighLevelUnitPurpose).document);
  j["purposes"][0]["purpose"] = "Holds west of PL APPLE as the reserve.";
  return ReviewEvent::edit(j.dump(2));
}

}  // namespace

TEST(Session, CreateWritesSnapshotAndRejectsDuplicates) {
  Store s;
  EXPECT_EQ(s.disk_snapshot(), s.session->snapshot());
  EXPECT_EQ(s.disk_snapshot().at("seq"), 0);
  EXPECT_EQ(s.log_lines(), 0u);
  EXPECT_THROW(Session::create_from_dir(s.dir.path(), SFORGE_FIXTURE_DIR, s.clock), Conflict);
  EXPECT_THROW(Session::open(s.dir.path(), "nope", s.clock), NotFound);
}

TEST(Session, EachEventIsOneLogLine) {
  Store s;
  const BlockKind bs = BlockTag::Backstory;
  s.session->apply(bs, ReviewEvent::edit("Once upon a time."));
  s.session->apply(BlockTag::LearningObjectives, ReviewEvent::edit("Learn."));
  EXPECT_EQ(s.log_lines(), 2u);
  EXPECT_EQ(s.session->state(bs).tag, StateTag::Approved);
  EXPECT_EQ(read_file(s.session->outputs_dir() / "Backstory.md"), "Once upon a time.");
  EXPECT_EQ(s.folded(), s.disk_snapshot());
}

TEST(Session, IllegalEventsAreNotLogged) {
  Store s;
  EXPECT_THROW(s.session->apply(BlockTag::Backstory, ReviewEvent::approve()), IllegalTransition);
  EXPECT_THROW(s.session->apply(BlockTag::DecisionSupportMatrix, ReviewEvent::edit("{\"triggers\": 3}")), SchemaError);
  EXPECT_THROW(s.session->apply(BlockTag::Backstory, ReviewEvent::edit("")), SchemaError);
  EXPECT_EQ(s.log_lines(), 0u);
}

TEST(Session, CrashBeforeRenameKeepsPriorSnapshot) {
  Store s;
  s.session->apply(BlockTag::Backstory, ReviewEvent::edit("first"));
  const auto before = read_file(s.session->state_path());
  s.session->set_crash_hook([] { throw CrashNow{}; });
  EXPECT_THROW(s.session->apply(BlockTag::LearningObjectives, ReviewEvent::edit("second")), CrashNow);
  EXPECT_EQ(read_file(s.session->state_path()), before);

  // Reopening folds the log, which already holds the event, and repairs the snapshot.
  const auto re = Session::open(s.dir.path(), "mini-pacific", s.clock);
  EXPECT_EQ(re->state(BlockTag::LearningObjectives).tag, StateTag::Approved);
  EXPECT_EQ(nlohmann::json::parse(read_file(re->state_path())), s.folded());
}

TEST(Session, TornFinalLineIgnored) {
  Store s;
  s.session->apply(BlockTag::Backstory, ReviewEvent::edit("first"));
  append_line(s.session->events_path(), "{\"seq\": 2, \"block\": \"Lea");
  std::string text = read_file(s.session->events_path());
  text.pop_back();
  write_file_atomic(s.session->events_path(), text);
  EXPECT_EQ(read_events(s.session->events_path()).size(), 1u);
  const auto re = Session::open(s.dir.path(), "mini-pacific", s.clock);
  EXPECT_EQ(re->snapshot().at("seq"), 1);
}

TEST(Session, UpstreamEditInvalidatesAndLogs) {
  Store s;
  s.load_docs();
  s.session->apply(BlockTag::UnitPositionsTimeBased,
                   ReviewEvent::edit(R"({"timelines": [{"unit": "25ID", "samples": [{"day": 0, "pos": [10, 50]}]}]})"));
  s.session->apply(BlockTag::OpordSchemeOfManeuver, ReviewEvent::edit("25ID crosses PL APPLE."));
  const auto lines = s.log_lines();
  s.session->apply(BlockTag::HighLevelUnitPurpose, hlup_edit());
  EXPECT_EQ(s.session->state(BlockTag::UnitPositionsTimeBased).tag, StateTag::Stale);
  EXPECT_EQ(s.session->state(BlockTag::OpordSchemeOfManeuver).tag, StateTag::Stale);
  EXPECT_EQ(s.session->state(BlockTag::DecisionSupportMatrix).tag, StateTag::Approved);
  EXPECT_EQ(s.log_lines(), lines + 3);
  const auto events = read_events(s.session->events_path());
  EXPECT_EQ(events.back().event.tag, EventTag::UpstreamEdited);
  EXPECT_EQ(s.folded(), s.disk_snapshot());

  // Re-approving identical content changes nothing downstream.
  const auto before = s.log_lines();
  s.session->apply(BlockTag::HighLevelUnitPurpose, hlup_edit());
  EXPECT_EQ(s.log_lines(), before + 1);
}

TEST(Session, GenerationUsesReadiness) {
  Store s;
  llm::Gateway g(std::make_unique<llm::ScriptedBackend>(std::vector<std::string>{}));
  const orchestrator::StrategyLibrary lib(SFORGE_STRATEGIES_DIR);
  const GenerationDeps deps{g, lib};
  EXPECT_THROW(s.session->generate(BlockTag::UnitPositionsTimeBased, deps), NotReady);
  EXPECT_EQ(s.log_lines(), 0u);
}

TEST(Session, RunCompletesFromReplay) {
  Store s;
  llm::Gateway g(llm::ScriptedBackend::from_file(std::string(SFORGE_FIXTURE_DIR) + "/scripts/e2e.json"));
  const orchestrator::StrategyLibrary lib(SFORGE_STRATEGIES_DIR);
  const GenerationDeps deps{g, lib};
  const auto report = run_pipeline(*s.session, deps, {true, {}});
  EXPECT_EQ(report.status, RunReport::Status::Completed);
  EXPECT_EQ(report.blocks_with("generated"),
            (std::vector<std::string>{"UnitPositionsTimeBased", "OpordSchemeOfManeuver"}));
  EXPECT_EQ(s.folded(), s.disk_snapshot());
  EXPECT_EQ(s.session->trace_ids(BlockTag::UnitPositionsTimeBased).size(), 3u);

  Store paused;
  llm::Gateway g2(llm::ScriptedBackend::from_file(std::string(SFORGE_FIXTURE_DIR) + "/scripts/e2e.json"));
  const GenerationDeps deps2{g2, lib};
  const auto r2 = run_pipeline(*paused.session, deps2, {true, {AutomationLevel::Orange}});
  EXPECT_EQ(r2.status, RunReport::Status::Paused);
  EXPECT_EQ(paused.session->state(BlockTag::UnitPositionsTimeBased).tag, StateTag::AwaitingReview);
  EXPECT_EQ(paused.session->state(BlockTag::OpordSchemeOfManeuver).tag, StateTag::Pending);
}

// fold(events) equals the stored snapshot after every accepted or refused mutation.
TEST(SessionProperty, FoldEqualsSnapshot) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    Store s;
    const auto& blocks = s.session->scenario().blocks;
    std::vector<BlockKind> kinds;
    for (const auto& [k, _] : blocks) kinds.push_back(k);
    for (int step = 0; step < 30; ++step) {
      const auto k = kinds[rng() % kinds.size()];
      const auto& doc = blocks.at(k).document;
      ReviewEvent e;
      switch (rng() % 5) {
        case 0: e = ReviewEvent::edit(doc ? *doc : "text " + std::to_string(rng() % 3)); break;
        case 1: e = k == BlockKind(BlockTag::HighLevelUnitPurpose) ? hlup_edit() : ReviewEvent::approve(); break;
        case 2: e = ReviewEvent::reject("again"); break;
        case 3: e = ReviewEvent::generation_started(); break;
        default: e = ReviewEvent::generation_failed("scripted failure");
      }
      try {
        s.session->apply(k, e);
      } catch (const Error&) {
      }
      ASSERT_EQ(s.folded(), s.disk_snapshot());
      ASSERT_EQ(s.session->snapshot(), s.disk_snapshot());
    }
    const auto re = Session::open(s.dir.path(), "mini-pacific", s.clock);
    EXPECT_EQ(re->snapshot(), s.disk_snapshot());
  }
}
