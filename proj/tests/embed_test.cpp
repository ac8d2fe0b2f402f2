#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "vcreval/embed_metrics.hpp"
#include "vcreval/error.hpp"

namespace em = vcreval::embed;

namespace {

// unit vector at `cos` to e1 in the plane (e1, e2)
std::vector<double> at_cosine(double cos) { return {cos, std::sqrt(1 - cos * cos), 0.0}; }

}  // namespace

TEST(Cosine, Examples) {
  const std::vector<double> u{1, 2, 3}, v{3, 2, 1};
  EXPECT_NEAR(em::cosine(u, v), 10.0 / 14.0, 1e-15);
  EXPECT_NEAR(em::cosine(u, u), 1.0, 1e-15);
  EXPECT_EQ(em::cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
}

TEST(ClipScore, Examples) {
  const std::vector<double> e1{1, 0, 0};
  EXPECT_NEAR(em::clip_score(e1, e1), 2.5, 1e-15);
  EXPECT_EQ(em::clip_score(e1, at_cosine(-0.2)), 0.0);
  EXPECT_NEAR(em::clip_score(e1, at_cosine(0.3)), 0.75, 1e-12);
}

TEST(ClipScoreRef, Examples) {
  const std::vector<double> e1{1, 0, 0};
  const auto cap = at_cosine(0.2);  // clip term 0.5
  const std::vector<std::span<const double>> same{cap};
  EXPECT_NEAR(em::clip_score_ref(e1, cap, same), 2 * 0.5 * 1.0 / 1.5, 1e-12);
  const std::vector<std::span<const double>> capped{e1};
  EXPECT_NEAR(em::clip_score_ref(e1, e1, capped), 1.0, 1e-12);
  const std::vector<double> opposite{-1, 0, 0};
  const std::vector<std::span<const double>> neg{opposite};
  EXPECT_EQ(em::clip_score_ref(e1, e1, neg), 0.0);
}

TEST(BertScore, HandMatrix) {
  const auto s = em::bert_score_from_similarity({{1, 0}, {0, 0.5}});
  EXPECT_DOUBLE_EQ(s.precision, 0.75);
  EXPECT_DOUBLE_EQ(s.recall, 0.75);
  EXPECT_DOUBLE_EQ(s.f1, 0.75);
}

TEST(BertScore, IdentityAndOrthogonal) {
  em::TokenMatrix a;
  a.dim = 2;
  a.append_row(std::vector<double>{1, 0});
  a.append_row(std::vector<double>{0.6, 0.8});
  const auto same = em::bert_score(a, a);
  EXPECT_NEAR(same.f1, 1.0, 1e-12);
  em::TokenMatrix o;
  o.dim = 2;
  o.append_row(std::vector<double>{0, 1});
  em::TokenMatrix r;
  r.dim = 2;
  r.append_row(std::vector<double>{1, 0});
  const auto orth = em::bert_score(o, r);
  EXPECT_EQ(orth.precision, 0.0);
  EXPECT_EQ(orth.f1, 0.0);
}

TEST(EmbeddingIo, JsonlRoundTrip) {
  em::EmbeddingTable t(em::EmbeddingKind::kCaption, 3);
  t.add("s1", std::vector<double>{0.1, -2.5, 1e-7});
  t.add("s2", std::vector<double>{1, 2, 3});
  std::stringstream buf;
  em::write_embeddings(buf, t);
  const auto back = em::read_embeddings(buf);
  EXPECT_EQ(back.kind(), em::EmbeddingKind::kCaption);
  EXPECT_EQ(back.dim(), 3u);
  ASSERT_EQ(back.size(), 2u);
  const auto v = back.vector("s1");
  EXPECT_EQ(std::vector<double>(v.begin(), v.end()), (std::vector<double>{0.1, -2.5, 1e-7}));
  EXPECT_THROW(t.add("s1", std::vector<double>{0, 0, 0}), vcreval::Error);
}

TEST(EmbeddingIo, BinaryRoundTripTokens) {
  em::EmbeddingTable t(em::EmbeddingKind::kTokens, 2);
  t.add("s1", std::vector<double>{0.5, 0.25});
  t.add("s1", std::vector<double>{-1, 2});
  t.add("s2", std::vector<double>{3, 4});
  std::stringstream buf;
  em::write_embeddings_binary(buf, t);
  const auto back = em::read_embeddings_binary(buf, em::EmbeddingKind::kTokens);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.tokens("s1").rows, 2u);
  EXPECT_EQ(back.tokens("s1").data, (std::vector<double>{0.5, 0.25, -1, 2}));
  EXPECT_EQ(back.tokens("s2").data, (std::vector<double>{3, 4}));
}

TEST(EmbeddingIo, TruncatedBinaryThrows) {
  em::EmbeddingTable t(em::EmbeddingKind::kImage, 4);
  t.add("img", std::vector<double>{1, 2, 3, 4});
  std::stringstream buf;
  em::write_embeddings_binary(buf, t);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 3);
  std::istringstream in(bytes);
  EXPECT_THROW(em::read_embeddings_binary(in, em::EmbeddingKind::kImage), vcreval::Error);
}

TEST(ScoreChannel, ReadsValuesAndRejectsNaN) {
  std::istringstream ok(R"({"sample_id":"a","value":0.8})" "\n" R"({"sample_id":"b","value":0.1})" "\n");
  const auto ch = em::read_score_channel(ok, "vilt");
  EXPECT_EQ(ch.values.size(), 2u);
  EXPECT_EQ(ch.get("a"), 0.8);
  EXPECT_FALSE(ch.get("zzz").has_value());

  std::istringstream bad(R"({"sample_id":"a","value":0.8})" "\n" R"({"sample_id":"b","value":NaN})" "\n");
  try {
    em::read_score_channel(bad, "vilt");
    FAIL() << "NaN accepted";
  } catch (const vcreval::Error& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos) << e.what();
  }
}

TEST(ScoreChannel, RoundTrip) {
  em::ScoreChannel ch{"bertgrammar", {{"x", 0.1 + 0.2}, {"y", 1.0 / 3.0}}, ""};
  std::stringstream buf;
  em::write_score_channel(buf, ch);
  const auto back = em::read_score_channel(buf, "bertgrammar");
  EXPECT_EQ(back.values, ch.values);
}
