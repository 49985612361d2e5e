// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sforge/retrieval.hpp"
#include "support/oracles.hpp"

using namespace sforge;
using namespace sforge::retrieval;

namespace {

Corpus text_corpus(const std::vector<std::string>& paragraphs) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < paragraphs.size(); ++i)
    docs.push_back({"doc" + std::to_string(i), DocumentFormat::Text, paragraphs[i]});
  return Corpus::from_documents(docs);
}

double score_of(const std::vector<ScoredChunk>& ranked, std::size_t id) {
  for (const auto& s : ranked)
    if (s.chunk->id == id) return s.score;
  return -1.0;
}

}  // namespace

TEST(Chunking, JsonTriggersOnePerObject) {
  const std::string dsm = R"({"triggers": [
    {"id": "DP1", "unit": "25ID", "event": "165BCG withdraws"},
    {"id": "DP2", "unit": "3DIV", "event": "reserve committed"},
    {"id": "DP3", "unit": "IAD", "event": "south flank quiet"},
    {"id": "DP4", "unit": "25ID", "event": "bridge lost"}]})";
  const auto chunks = chunk_document({"dsm.json", DocumentFormat::Json, dsm});
  ASSERT_EQ(chunks.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(chunks[i].source_path, "dsm.json#$.triggers[" + std::to_string(i) + "]");
    EXPECT_EQ(chunks[i].tokens, normalize(chunks[i].text));
  }
}

TEST(Chunking, ParagraphsAndEmpty) {
  const auto chunks = chunk_document({"b.md", DocumentFormat::Text, "First one.\n\nSecond\nline.\n\n\nThird."});
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[1].text, "Second\nline.");
  EXPECT_TRUE(chunk_document({"e.md", DocumentFormat::Text, ""}).empty());
  EXPECT_TRUE(chunk_document({"e.json", DocumentFormat::Json, ""}).empty());
  EXPECT_THROW(chunk_document({"bad.json", DocumentFormat::Json, "{nope"}), ParseError);
}

TEST(Normalize, LowercaseAlnumRuns) {
  EXPECT_EQ(normalize("25ID crosses PL-APPLE, at 0600!"),
            (std::vector<std::string>{"25id", "crosses", "pl", "apple", "at", "0600"}));
}

// Toy corpus scored by hand: N = 3, lengths 5, 5, 4, avgdl = 14/3,
// df(river) = 2, df(crossing) = 1, k1 = 1.2, b = 0.75.
TEST(Bm25, ToyCorpusHandComputed) {
  const auto corpus = text_corpus({"The river crossing at dawn", "Armor waits near the river",
                                   "Supply trucks hold position"});
  const auto ranked = retrieve_top_k(corpus, "river crossing", 5);
  ASSERT_EQ(ranked.size(), 3u);

  const double norm5 = 1.0 + 1.2 * (0.25 + 0.75 * 5.0 / (14.0 / 3.0));
  const double idf_river = std::log(1.0 + (3.0 - 2.0 + 0.5) / (2.0 + 0.5));
  const double idf_crossing = std::log(1.0 + (3.0 - 1.0 + 0.5) / (1.0 + 0.5));
  const double c0 = (idf_river + idf_crossing) * 2.2 / norm5;
  const double c1 = idf_river * 2.2 / norm5;

  EXPECT_EQ(ranked[0].chunk->id, 0u);
  EXPECT_EQ(ranked[1].chunk->id, 1u);
  EXPECT_EQ(ranked[2].chunk->id, 2u);
  EXPECT_NEAR(ranked[0].score, c0, 1e-9);
  EXPECT_NEAR(ranked[1].score, c1, 1e-9);
  EXPECT_EQ(ranked[2].score, 0.0);
}

TEST(Bm25, SingleMatchRanksFirstAndNoMatchKeepsIdOrder) {
  const auto corpus = text_corpus({"alpha beta", "gamma delta", "epsilon zeta"});
  const auto ranked = retrieve_top_k(corpus, "delta", 3);
  EXPECT_EQ(ranked[0].chunk->id, 1u);
  EXPECT_GT(ranked[0].score, 0.0);

  const auto none = retrieve_top_k(corpus, "omega", 3);
  for (std::size_t i = 0; i < none.size(); ++i) {
    EXPECT_EQ(none[i].chunk->id, i);
    EXPECT_EQ(none[i].score, 0.0);
  }
  EXPECT_EQ(retrieve_top_k(corpus, "omega", 2).size(), 2u);
  EXPECT_THROW(retrieve_top_k(corpus, "omega", 0), PreconditionError);
  EXPECT_TRUE(retrieve_top_k(Corpus{}, "omega", 3).empty());
}

TEST(Bm25Property, RandomCorporaMatchOracle) {
  std::mt19937_64 rng(31);
  const std::vector<std::string> vocab = {"river", "bridge", "armor", "dawn", "north", "ridge", "supply", "pl"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> texts;
    std::vector<std::vector<std::string>> tokens;
    const std::size_t n = 1 + rng() % 6;
    for (std::size_t d = 0; d < n; ++d) {
      std::vector<std::string> doc;
      const std::size_t len = 1 + rng() % 8;
      std::string text;
      for (std::size_t w = 0; w < len; ++w) {
        doc.push_back(vocab[rng() % vocab.size()]);
        text += (w ? " " : "") + doc.back();
      }
      tokens.push_back(doc);
      texts.push_back(text);
    }
    std::set<std::string> qset;
    std::string query;
    for (std::size_t q = 0, m = 1 + rng() % 3; q < m; ++q) {
      const auto& t = vocab[rng() % vocab.size()];
      query += t + " ";
      qset.insert(t);
    }
    const std::vector<std::string> qterms(qset.begin(), qset.end());
    const auto corpus = text_corpus(texts);
    const auto ranked = retrieve_top_k(corpus, query, n);
    ASSERT_EQ(ranked.size(), n);
    for (std::size_t d = 0; d < n; ++d) {
      const double want = oracle::bm25(tokens, d, qterms);
      EXPECT_NEAR(score_of(ranked, d), want, 1e-9);
      bool overlap = false;
      for (const auto& t : qterms) overlap |= std::count(tokens[d].begin(), tokens[d].end(), t) > 0;
      if (!overlap) { EXPECT_EQ(score_of(ranked, d), 0.0); }
    }
    for (std::size_t i = 1; i < n; ++i) {
      EXPECT_GE(ranked[i - 1].score, ranked[i].score);
      if (ranked[i - 1].score == ranked[i].score) { EXPECT_LT(ranked[i - 1].chunk->id, ranked[i].chunk->id); }
    }
  }
}
