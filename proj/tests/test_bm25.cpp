#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "curate/bm25.hpp"
#include "curate/error.hpp"
#include "curate/text.hpp"

using namespace curate;

namespace {

const std::vector<std::pair<std::string, std::string>> kToy = {
    {"a", "The cat sat on the mat."},
    {"b", "cat sat"},
    {"c", "A dog barked!"},
};

std::vector<std::string> q(std::initializer_list<const char*> words) { return {words.begin(), words.end()}; }

}  // namespace

TEST(Bm25, HandBuiltPostingTable) {
  const auto idx = Bm25Index::build(kToy);
  EXPECT_EQ(idx.doc_count(), 3u);
  EXPECT_EQ(idx.doc_length("a"), 6u);
  EXPECT_EQ(idx.doc_length("b"), 2u);
  EXPECT_EQ(idx.doc_length("c"), 3u);
  EXPECT_DOUBLE_EQ(idx.avg_doc_length(), 11.0 / 3.0);
  EXPECT_EQ(idx.doc_freq("the"), 1u);
  EXPECT_EQ(idx.term_freq("the", "a"), 2u);
  EXPECT_EQ(idx.doc_freq("cat"), 2u);
  EXPECT_EQ(idx.doc_freq("sat"), 2u);
  EXPECT_EQ(idx.doc_freq("dog"), 1u);
  EXPECT_EQ(idx.doc_freq("mat"), 1u);
  EXPECT_EQ(idx.doc_freq("fish"), 0u);
  EXPECT_EQ(idx.term_freq("cat", "c"), 0u);
}

TEST(Bm25, HandEvaluatedScoreForCatInShortDoc) {
  const auto idx = Bm25Index::build(kToy);
  // N = 3, df = 2, tf = 1, |d| = 2, avgdl = 11/3.
  const double idf = std::log((3 - 2 + 0.5) / (2 + 0.5) + 1.0);
  const double norm = 1.2 * (1 - 0.75 + 0.75 * 2.0 / (11.0 / 3.0));
  const double expect = idf * 1 * 2.2 / (1 + norm);
  EXPECT_NEAR(idx.score(q({"cat"}), "b"), expect, 1e-9);
  EXPECT_NEAR(expect, 0.5773648644, 1e-9);
}

TEST(Bm25, SingleDocCorpus) {
  const auto idx = Bm25Index::build({{"only", "x y z"}});
  EXPECT_EQ(idx.doc_count(), 1u);
  EXPECT_DOUBLE_EQ(idx.avg_doc_length(), 3.0);
}

TEST(Bm25, UnseenTermContributesNothing) {
  const auto idx = Bm25Index::build(kToy);
  for (const auto& id : idx.doc_ids()) {
    EXPECT_DOUBLE_EQ(idx.score(q({"cat", "zebra"}), id), idx.score(q({"cat"}), id));
    EXPECT_DOUBLE_EQ(idx.score(q({"zebra"}), id), 0.0);
  }
}

TEST(Bm25, DocumentAsQueryIsCorpusMaximum) {
  const auto idx = Bm25Index::build(kToy);
  for (const auto& [id, body] : kToy) {
    const auto query = text::tokenize(body);
    const double self = idx.score(query, id);
    for (const auto& other : idx.doc_ids()) EXPECT_LE(idx.score(query, other), self + 1e-12);
  }
}

TEST(Bm25, RankTiesByAscendingId) {
  const auto idx = Bm25Index::build({{"z", "same words"}, {"m", "same words"}, {"a", "other"}});
  const auto ranked = idx.rank(q({"same"}));
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].doc_id, "m");
  EXPECT_EQ(ranked[1].doc_id, "z");
  EXPECT_EQ(ranked[2].doc_id, "a");
}

TEST(Bm25, Errors) {
  try {
    Bm25Index::build({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
  const auto idx = Bm25Index::build(kToy);
  try {
    (void)idx.score(q({"cat"}), "nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownDoc);
  }
}

TEST(Bm25, ExtraOccurrenceNeverLowersScore) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "eps"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::pair<std::string, std::vector<std::string>>> corpus;
    for (int d = 0; d < 4; ++d) {
      std::vector<std::string> toks(1 + rng() % 8);
      for (auto& t : toks) t = vocab[rng() % vocab.size()];
      corpus.emplace_back("d" + std::to_string(d), toks);
    }
    corpus[0].second.push_back("alpha");  // df of the query term stays fixed below
    const std::vector<std::string> query = {"alpha"};
    const double before = Bm25Index::build_tokenized(corpus).score(query, "d0");
    corpus[0].second.push_back("alpha");
    const double after = Bm25Index::build_tokenized(corpus).score(query, "d0");
    ASSERT_GE(after, before - 1e-12);
  }
}
