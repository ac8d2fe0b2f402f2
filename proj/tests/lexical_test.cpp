#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lexical_oracle.hpp"
#include "vcreval/error.hpp"
#include "vcreval/lexical.hpp"

namespace lx = vcreval::lexical;
using lx::TokenSeq;

TEST(Tokenize, Examples) {
  EXPECT_EQ(lx::tokenize("A Dog runs."), (TokenSeq{"a", "dog", "runs"}));
  EXPECT_EQ(lx::tokenize(""), TokenSeq{});
  EXPECT_EQ(lx::tokenize("rock-climbing!"), (TokenSeq{"rock", "climbing"}));
  EXPECT_EQ(lx::tokenize("caf\xc3\xa9 2 dogs"), (TokenSeq{"caf\xc3\xa9", "2", "dogs"}));
}

TEST(PorterStem, ClassicCases) {
  EXPECT_EQ(lx::porter_stem("caresses"), "caress");
  EXPECT_EQ(lx::porter_stem("ponies"), "poni");
  EXPECT_EQ(lx::porter_stem("running"), "run");
  EXPECT_EQ(lx::porter_stem("relational"), "relat");
  EXPECT_EQ(lx::porter_stem("hopeful"), "hope");
  EXPECT_EQ(lx::porter_stem("dogs"), "dog");
  EXPECT_EQ(lx::porter_stem("a"), "a");
}

TEST(Bleu, IdentityAndDisjoint) {
  const TokenSeq s{"a", "dog", "runs", "on", "the", "beach"};
  EXPECT_DOUBLE_EQ(lx::bleu4(s, {s}), 1.0);
  EXPECT_EQ(lx::bleu4({"cat", "sleeps"}, {s}), 0.0);
  EXPECT_EQ(lx::bleu4({}, {s}), 0.0);
  EXPECT_THROW(lx::bleu4(s, {}), vcreval::Error);
}

TEST(Bleu, MatchesClippedCountOracle) {
  const TokenSeq cand{"the", "the", "cat", "sat", "on", "the", "mat"};
  const std::vector<TokenSeq> refs{{"the", "cat", "sat", "on", "a", "mat"},
                                   {"there", "is", "a", "cat", "on", "the", "mat"}};
  EXPECT_NEAR(lx::bleu4(cand, refs), oracle::bleu(cand, refs), 1e-12);

  std::mt19937_64 rng(5);
  const std::vector<std::string> words{"a", "b", "c", "d", "e"};
  auto draw = [&](std::size_t len) {
    TokenSeq t;
    for (std::size_t i = 0; i < len; ++i) t.push_back(words[rng() % words.size()]);
    return t;
  };
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = draw(1 + rng() % 9);
    const std::vector<TokenSeq> r{draw(1 + rng() % 9), draw(1 + rng() % 9)};
    EXPECT_NEAR(lx::bleu4(c, r), oracle::bleu(c, r), 1e-12) << trial;
  }
}

TEST(Rouge, WorkedExample) {
  const TokenSeq cand{"the", "cat", "sat"};
  const TokenSeq ref{"the", "cat", "on", "the", "mat", "sat"};
  EXPECT_EQ(lx::lcs_length<std::string>(cand, ref), 3u);
  const double expected = (1 + 1.44) * 1.0 * 0.5 / (0.5 + 1.44 * 1.0);
  EXPECT_NEAR(lx::rouge_l(cand, {ref}), expected, 1e-15);
  EXPECT_NEAR(lx::rouge_l(cand, {ref}), 0.6289, 1e-4);
  EXPECT_DOUBLE_EQ(lx::rouge_l(ref, {ref}), 1.0);
  EXPECT_EQ(lx::rouge_l(cand, {{"dog"}}), 0.0);
  EXPECT_EQ(lx::rouge_l({}, {ref}), 0.0);
}

TEST(Rouge, LcsMatchesFullTableOnLongInputs) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> a(rng() % 150), b(rng() % 150);
    for (auto& x : a) x = static_cast<int>(rng() % 4);
    for (auto& x : b) x = static_cast<int>(rng() % 4);
    EXPECT_EQ(lx::lcs_length<int>(a, b), oracle::lcs_table(a, b));
  }
}

TEST(Meteor, IdentityFormula) {
  const TokenSeq s{"a", "b", "c", "d", "e"};
  EXPECT_NEAR(lx::meteor(s, {s}), 1.0 - 0.5 / 125.0, 1e-15);
  EXPECT_NEAR(lx::meteor(s, {s}), 0.996, 1e-12);
  EXPECT_EQ(lx::meteor(s, {{"x", "y"}}), 0.0);
}

TEST(Meteor, StemOnlyMatch) {
  const TokenSeq cand{"dogs", "running", "fast"};
  const std::vector<TokenSeq> refs{{"the", "dog", "runs", "quickly"}};
  const auto a = lx::meteor_align(cand, refs[0]);
  EXPECT_EQ(a.exact_matches, 0u);
  EXPECT_EQ(a.stem_matches, 2u);  // dogs/dog, running/runs
  EXPECT_NEAR(lx::meteor(cand, refs), oracle::meteor(cand, refs), 1e-12);
}

TEST(Meteor, MatchesExhaustiveAlignmentOracle) {
  std::mt19937_64 rng(23);
  const std::vector<std::string> words{"dog", "dogs", "run", "runs", "running", "a", "the"};
  auto draw = [&](std::size_t len) {
    TokenSeq t;
    for (std::size_t i = 0; i < len; ++i) t.push_back(words[rng() % words.size()]);
    return t;
  };
  for (int trial = 0; trial < 400; ++trial) {
    const auto c = draw(1 + rng() % 6);
    const std::vector<TokenSeq> r{draw(1 + rng() % 6)};
    const auto got = lx::meteor_align(c, r[0]);
    const auto want = oracle::best_alignment(c, r[0]);
    EXPECT_EQ(got.exact_matches, want.exact) << trial;
    EXPECT_EQ(got.exact_matches + got.stem_matches, want.total) << trial;
    if (want.total > 0) {
      EXPECT_EQ(got.chunks, want.chunks) << trial;
    }
    EXPECT_NEAR(lx::meteor(c, r), oracle::meteor(c, r), 1e-12) << trial;
  }
}

TEST(Meteor, ChunkCount) {
  const std::vector<lx::AlignedPair> pairs{{0, 0, true}, {1, 1, true}, {2, 5, true}, {3, 6, true}};
  EXPECT_EQ(lx::count_chunks(pairs), 2u);
}

TEST(Cider, TwoImageIdentity) {
  const std::vector<TokenSeq> cands{{"red", "kite", "flying", "high"}, {"black", "cat", "on", "sofa"}};
  const std::vector<std::vector<TokenSeq>> refs{{cands[0]}, {cands[1]}};
  const auto r = lx::cider(cands, refs);
  EXPECT_FALSE(r.degenerate);
  EXPECT_NEAR(r.scores[0], 10.0, 1e-12);
  EXPECT_NEAR(r.scores[1], 10.0, 1e-12);
}

TEST(Cider, DisjointIsZeroAndSingleSampleDegenerate) {
  const std::vector<TokenSeq> cands{{"red", "kite"}, {"blue", "boat"}};
  const std::vector<std::vector<TokenSeq>> refs{{{"green", "tree"}}, {{"old", "house"}}};
  const auto r = lx::cider(cands, refs);
  EXPECT_EQ(r.scores[0], 0.0);
  EXPECT_EQ(r.scores[1], 0.0);
  const auto single = lx::cider({{"a", "dog"}}, {{{"a", "dog"}}});
  EXPECT_TRUE(single.degenerate);
  EXPECT_EQ(single.scores[0], 0.0);
}

TEST(Cider, MatchesTfIdfOracle) {
  const std::vector<TokenSeq> cands{
      lx::tokenize("a dog runs across the grassy field"),
      lx::tokenize("two children playing with a ball"),
      lx::tokenize("a man riding a bicycle down the street"),
      lx::tokenize("a dog is playing in the snow"),
      lx::tokenize("people standing near a red bus")};
  const std::vector<std::vector<TokenSeq>> refs{
      {lx::tokenize("a brown dog running on grass"), lx::tokenize("the dog runs through a field"),
       lx::tokenize("a dog in a grassy field")},
      {lx::tokenize("kids play with a red ball"), lx::tokenize("two children are playing ball")},
      {lx::tokenize("a man rides his bike on the street"),
       lx::tokenize("a cyclist riding down a city street"), lx::tokenize("man on a bicycle")},
      {lx::tokenize("a dog plays in the snow"), lx::tokenize("a white dog jumping in snow")},
      {lx::tokenize("a crowd waits by a red double decker bus"),
       lx::tokenize("people near a bus")}};
  const auto got = lx::cider(cands, refs);
  const auto want = oracle::cider(cands, refs);
  for (std::size_t i = 0; i < cands.size(); ++i) EXPECT_NEAR(got.scores[i], want[i], 1e-9) << i;
}

TEST(Ngrams, Counts) {
  const auto g = lx::ngram_counts({"a", "b", "a", "b"}, 2);
  EXPECT_EQ(g.at("a b"), 2u);
  EXPECT_EQ(g.at("b a"), 1u);
  EXPECT_TRUE(lx::ngram_counts({"a"}, 2).empty());
}
