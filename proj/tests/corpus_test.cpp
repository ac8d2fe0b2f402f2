#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "vcreval/corpus.hpp"
#include "vcreval/error.hpp"
#include "vcreval/synthetic.hpp"

namespace c = vcreval::corpus;

namespace {

c::CaptionSample sample(const std::string& id, const std::string& image, const std::string& source,
                        std::vector<double> scores) {
  c::CaptionSample s;
  s.sample_id = id;
  s.image_id = image;
  s.model_id = "m";
  s.candidate = "a dog";
  s.references = {"a dog runs"};
  s.source = source;
  for (std::size_t i = 0; i < scores.size(); ++i)
    s.raw_scores.push_back({"t" + std::to_string(i), 1, scores[i]});
  return s;
}

const char* kLine =
    R"({"sample_id":"s1","image_id":"i1","model_id":"ofa","candidate":"a dog","references":["a dog runs"],"source":"vcr","raw_scores":[{"tagger":"a","phase":1,"score":0.75}]})";

}  // namespace

TEST(CorpusIo, ReadsOneRecordPerLine) {
  std::istringstream in(std::string(kLine) + "\n\n");
  const auto corpus = c::read_corpus(in);
  ASSERT_EQ(corpus.size(), 1u);
  const auto& s = corpus.samples[0];
  EXPECT_EQ(s.sample_id, "s1");
  EXPECT_EQ(s.model_id, "ofa");
  EXPECT_EQ(s.references, std::vector<std::string>{"a dog runs"});
  ASSERT_EQ(s.raw_scores.size(), 1u);
  EXPECT_EQ(s.raw_scores[0], (c::RawScore{"a", 1, 0.75}));
}

TEST(CorpusIo, EmptyInputGivesEmptyCorpus) {
  std::istringstream in("");
  const auto corpus = c::read_corpus(in);
  EXPECT_TRUE(corpus.empty());
  EXPECT_TRUE(corpus.counts_by_source().empty());
  EXPECT_EQ(corpus.distinct_images(), 0u);
}

TEST(CorpusIo, FixtureCounts) {
  const auto fx = vcreval::synthetic::make_fixture();
  EXPECT_EQ(fx.corpus.size(), 600u);
  EXPECT_EQ(fx.corpus.distinct_images(), 100u);
}

TEST(CorpusIo, WriteReadRoundTripIsLossless) {
  const auto fx = vcreval::synthetic::make_fixture({.images = 5});
  std::stringstream buf;
  c::write_corpus(buf, fx.corpus);
  const auto back = c::read_corpus(buf);
  EXPECT_EQ(back.samples, fx.corpus.samples);
}

TEST(CorpusIo, RejectsDuplicateIds) {
  std::istringstream in(std::string(kLine) + "\n" + kLine + "\n");
  EXPECT_THROW(c::read_corpus(in), vcreval::DuplicateIdError);
}

TEST(CorpusIo, ReportsLineOfMalformedRecord) {
  std::istringstream in(std::string(kLine) + "\n{\"sample_id\": \"s2\"}\n");
  try {
    c::read_corpus(in);
    FAIL() << "expected ParseError";
  } catch (const vcreval::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(CorpusIo, RejectsOffScaleOwnScores) {
  std::string line = kLine;
  line.replace(line.find("0.75"), 4, "0.6");
  std::istringstream in(line + "\n");
  EXPECT_THROW(c::read_corpus(in), vcreval::ParseError);
}

TEST(CorpusIo, RejectsEmptyCandidateAndUnknownFormat) {
  std::string line = kLine;
  line.replace(line.find("\"a dog\""), 7, "\"  \"");
  std::istringstream in(line + "\n");
  EXPECT_THROW(c::read_corpus(in), vcreval::ParseError);
  std::istringstream in2(kLine);
  EXPECT_THROW(c::read_corpus(in2, "csv"), vcreval::Error);
}

TEST(Normalize, DefaultRulesMapEachScale) {
  const auto rules = c::default_rules();
  auto rule = [&](const std::string& src) {
    return *std::find_if(rules.begin(), rules.end(),
                         [&](const c::NormalizationRule& r) { return r.source == src; });
  };
  EXPECT_DOUBLE_EQ(c::apply_rule(rule(c::kSourceVicr), 1), 0.0);
  EXPECT_DOUBLE_EQ(c::apply_rule(rule(c::kSourceVicr), 5), 1.0);
  EXPECT_DOUBLE_EQ(c::apply_rule(rule(c::kSourceVicr), 3), 0.5);
  EXPECT_DOUBLE_EQ(c::apply_rule(rule(c::kSourceFlickrExpert), 2), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(c::apply_rule(rule(c::kSourceFlickrCf), 0.25), 0.25);
  EXPECT_DOUBLE_EQ(c::apply_rule(rule(c::kSourceOwn), 0.75), 0.75);
  EXPECT_THROW(c::apply_rule(rule(c::kSourceVicr), 6), vcreval::Error);
  EXPECT_THROW(c::apply_rule(rule(c::kSourceFlickrCf), 1.5), vcreval::Error);
}

TEST(Normalize, CompositeModes) {
  auto s = sample("x", "i", c::kSourceComposite, {});
  s.raw_scores = {{c::kCompositeRelevance, 1, 5}, {c::kCompositeThoroughness, 1, 1}};
  c::Corpus corpus{{s}};
  const auto rules = c::default_rules();
  EXPECT_DOUBLE_EQ(c::mean_of(c::normalize_scores(corpus, rules).samples[0].raw_scores), 0.5);
  EXPECT_DOUBLE_EQ(
      c::mean_of(
          c::normalize_scores(corpus, rules, c::CompositeMode::kRelevanceOnly).samples[0].raw_scores),
      1.0);
  EXPECT_DOUBLE_EQ(c::mean_of(c::normalize_scores(corpus, rules, c::CompositeMode::kThoroughnessOnly)
                                  .samples[0]
                                  .raw_scores),
                   0.0);
}

TEST(Normalize, UnknownSourceThrows) {
  c::Corpus corpus{{sample("x", "i", "mystery", {1})}};
  EXPECT_THROW(c::normalize_scores(corpus, c::default_rules()), vcreval::Error);
}

TEST(Filter, DropsOnlyExactZeroMeans) {
  c::Corpus corpus{{sample("a", "i", c::kSourceOwn, {0, 0}), sample("b", "i", c::kSourceOwn, {0, 0.25}),
                    sample("c", "i", c::kSourceOwn, {})}};
  const auto r = c::filter_zero_scores(corpus);
  EXPECT_EQ(r.removed, 1u);
  ASSERT_EQ(r.kept.size(), 2u);
  EXPECT_EQ(r.kept.samples[0].sample_id, "b");
  EXPECT_EQ(r.kept.samples[1].sample_id, "c");
}

TEST(Aggregate, MeanOfWorkedExample) {
  const auto s = sample("x", "i", c::kSourceOwn, {0.25, 0.50, 0.25, 0.50, 0.50, 0.50, 0.25, 0.50});
  EXPECT_DOUBLE_EQ(c::mean_of(s.raw_scores), 0.40625);
  const auto a = c::aggregate(s, 0);
  EXPECT_DOUBLE_EQ(a.mean_score, 0.40625);
  EXPECT_DOUBLE_EQ(a.vote_score, 0.50);
  EXPECT_EQ(a.n_raw, 8u);
}

TEST(Aggregate, StrictMajorityVote) {
  const auto s = sample("x", "i", c::kSourceOwn, {0.5, 0.5, 0.5, 0.25});
  for (std::uint64_t seed = 0; seed < 8; ++seed) EXPECT_EQ(c::vote_of(s.raw_scores, seed, "x"), 0.5);
}

TEST(Aggregate, VoteTieBreakDependsOnlyOnSeedAndSample) {
  const auto s = sample("x", "i", c::kSourceOwn, {0.25, 0.75, 0.25, 0.75});
  std::set<double> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const double v = c::vote_of(s.raw_scores, seed, s.sample_id);
    EXPECT_TRUE(v == 0.25 || v == 0.75);
    EXPECT_EQ(v, c::vote_of(s.raw_scores, seed, s.sample_id));
    auto reversed = s.raw_scores;
    std::reverse(reversed.begin(), reversed.end());
    EXPECT_EQ(v, c::vote_of(reversed, seed, s.sample_id));
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(Aggregate, NoScoresThrows) {
  EXPECT_THROW(c::aggregate(sample("x", "i", c::kSourceOwn, {}), 0), vcreval::Error);
}

TEST(Split, OwnAndExternalSizes) {
  c::Corpus own;
  for (int i = 0; i < 600; ++i)
    own.samples.push_back(sample("s" + std::to_string(i), "i" + std::to_string(i / 6), c::kSourceOwn, {1}));
  const auto r = c::split(own, c::own_data_split(3));
  EXPECT_EQ(r.train.size(), 240u);
  EXPECT_EQ(r.test.size(), 360u);

  c::Corpus ext;
  ext.samples.resize(59315);
  for (std::size_t i = 0; i < ext.samples.size(); ++i) ext.samples[i].sample_id = std::to_string(i);
  const auto e = c::split(ext, c::external_data_split(3));
  EXPECT_EQ(e.train.size(), 41521u);
  EXPECT_EQ(e.test.size(), 17794u);
}

TEST(Split, DisjointOrderedAndSeeded) {
  c::Corpus corpus;
  for (int i = 0; i < 50; ++i)
    corpus.samples.push_back(sample("s" + std::to_string(100 + i), "i", c::kSourceOwn, {1}));
  const auto a = c::split(corpus, {0.3, 9, c::SplitGrouping::kPerSample});
  const auto b = c::split(corpus, {0.3, 9, c::SplitGrouping::kPerSample});
  const auto d = c::split(corpus, {0.3, 10, c::SplitGrouping::kPerSample});
  EXPECT_EQ(a.train.samples, b.train.samples);
  EXPECT_NE(a.train.samples, d.train.samples);
  EXPECT_EQ(a.train.size(), 15u);
  std::set<std::string> ids;
  for (const auto* side : {&a.train, &a.test}) {
    for (std::size_t i = 0; i < side->size(); ++i) {
      EXPECT_TRUE(ids.insert(side->samples[i].sample_id).second);
      if (i > 0) {
        EXPECT_LT(side->samples[i - 1].sample_id, side->samples[i].sample_id);
      }
    }
  }
  EXPECT_EQ(ids.size(), 50u);
}

TEST(Split, PerImageKeepsImagesTogether) {
  c::Corpus corpus;
  for (int i = 0; i < 60; ++i)
    corpus.samples.push_back(
        sample("s" + std::to_string(i), "img" + std::to_string(i / 6), c::kSourceOwn, {1}));
  const auto r = c::split(corpus, {0.4, 1, c::SplitGrouping::kPerImage});
  std::set<std::string> train_images;
  for (const auto& s : r.train.samples) train_images.insert(s.image_id);
  for (const auto& s : r.test.samples) EXPECT_EQ(train_images.count(s.image_id), 0u);
  EXPECT_EQ(r.train.size(), 24u);
}

TEST(Split, HalfOfTwo) {
  c::Corpus corpus{{sample("a", "i", c::kSourceOwn, {1}), sample("b", "i", c::kSourceOwn, {1})}};
  const auto r = c::split(corpus, {0.5, 0, c::SplitGrouping::kPerSample});
  EXPECT_EQ(r.train.size(), 1u);
  EXPECT_EQ(r.test.size(), 1u);
}

TEST(Split, RejectsBadFractions) {
  c::Corpus corpus{{sample("a", "i", c::kSourceOwn, {1}), sample("b", "i", c::kSourceOwn, {1})}};
  EXPECT_THROW(c::split(corpus, {0.0, 0, c::SplitGrouping::kPerSample}), vcreval::Error);
  EXPECT_THROW(c::split(corpus, {1.0, 0, c::SplitGrouping::kPerSample}), vcreval::Error);
}

TEST(ExternalFixture, ZeroFilterProtocol) {
  const auto ext = vcreval::synthetic::make_external_corpus();
  EXPECT_EQ(ext.size(), 81289u);
  const auto normalized = c::normalize_scores(ext, c::default_rules());
  const auto filtered = c::filter_zero_scores(normalized);
  EXPECT_EQ(filtered.removed, 21974u);
  EXPECT_EQ(filtered.kept.size(), 59315u);
}
