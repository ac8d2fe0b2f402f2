#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>

#include "vcreval/agreement.hpp"
#include "vcreval/synthetic.hpp"
#include "vcreval/vcrscore.hpp"

namespace vc = vcreval::vcr;
namespace em = vcreval::embed;
namespace c = vcreval::corpus;

namespace {

c::CaptionSample one_sample() {
  c::CaptionSample s;
  s.sample_id = "s1";
  s.image_id = "img1";
  s.model_id = "ofa";
  s.candidate = "a dog";
  s.references = {"a dog runs in the park"};
  s.source = c::kSourceOwn;
  return s;
}

vcreval::pool::WordPool pool_of(std::set<std::string> words) {
  vcreval::pool::WordPool p;
  p.image_id = "img1";
  p.words = std::move(words);
  return p;
}

vc::FeatureContext context_with(const em::ScoreChannel* vilt, const em::ScoreChannel* mcip_ref) {
  vc::FeatureContext ctx;
  ctx.channels["vilt"] = vilt;
  if (mcip_ref) ctx.channels["mcipscore_ref"] = mcip_ref;
  return ctx;
}

vc::VcrModel constant_model(double value) {
  vc::VcrModel m;
  m.feature_names = {"precision", "recall", "vilt", "mcipscore_ref"};
  m.ensemble.init = value;
  m.ensemble.n_features = 4;
  return m;
}

}  // namespace

TEST(Featurize, PrecisionForcedToOne) {
  const em::ScoreChannel vilt{"vilt", {{"s1", 0.8}}, ""};
  const em::ScoreChannel mref{"mcipscore_ref", {{"s1", 0.6}}, ""};
  const auto fv = vc::featurize(one_sample(), pool_of({"a", "dog", "runs", "park", "grass"}),
                                context_with(&vilt, &mref));
  EXPECT_EQ(fv.names, (std::vector<std::string>{"precision", "recall", "vilt", "mcipscore_ref"}));
  EXPECT_EQ(fv.values, (std::vector<double>{1.0, 0.4, 0.8, 0.6}));
}

TEST(Featurize, MissingViltNamesChannel) {
  const em::ScoreChannel vilt{"vilt", {}, ""};
  const em::ScoreChannel mref{"mcipscore_ref", {{"s1", 0.6}}, ""};
  try {
    vc::featurize(one_sample(), pool_of({"a"}), context_with(&vilt, &mref));
    FAIL();
  } catch (const vcreval::MissingInputError& e) {
    EXPECT_EQ(e.input(), "vilt");
    EXPECT_EQ(e.key(), "s1");
  }
}

TEST(Featurize, ClipFeatureFromTables) {
  em::EmbeddingTable images(em::EmbeddingKind::kImage, 2), captions(em::EmbeddingKind::kCaption, 2);
  images.add("img1", std::vector<double>{1, 0});
  captions.add("s1", std::vector<double>{0.6, 0.8});
  captions.add("img1#ref0", std::vector<double>{0.6, 0.8});
  const em::ScoreChannel vilt{"vilt", {{"s1", 0.5}}, ""};
  vc::FeatureContext ctx = context_with(&vilt, nullptr);
  ctx.mcip = {&images, &captions, 2.5};
  const auto fv = vc::featurize(one_sample(), pool_of({"a", "dog"}), ctx);
  // clip term min(2.5 * 0.6, 1) = 1, ref term 1
  EXPECT_NEAR(fv.at("mcipscore_ref"), 1.0, 1e-12);
  ctx.clip_source = vc::ClipSource::kMcipScore;
  EXPECT_NEAR(vc::featurize(one_sample(), pool_of({"a", "dog"}), ctx).at("mcipscore"), 1.5, 1e-12);
}

TEST(VcrScore, Clamps) {
  vc::FeatureVector fv{{"precision", "recall", "vilt", "mcipscore_ref"}, {1, 1, 1, 1}};
  EXPECT_EQ(vc::vcr_score(constant_model(1.07), fv), 1.0);
  EXPECT_EQ(vc::vcr_score(constant_model(-0.02), fv), 0.0);
  EXPECT_EQ(vc::raw_score(constant_model(1.07), fv), 1.07);
}

TEST(VcrScore, SchemaMismatch) {
  vc::FeatureVector fv{{"precision", "recall", "vilt"}, {1, 1, 1}};
  EXPECT_THROW(vc::vcr_score(constant_model(0.5), fv), vc::SchemaError);
  fv = {{"precision", "recall", "vilt", "clipscore"}, {1, 1, 1, 1}};
  EXPECT_THROW(vc::vcr_score(constant_model(0.5), fv), vc::SchemaError);
}

TEST(VcrScore, ConstantTargetPredictsConstant) {
  vcreval::gbr::FeatureMatrix X(10, 4);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 4; ++j) X(i, j) = static_cast<double>((i * 7 + j * 3) % 10) / 10;
  const std::vector<double> y(10, 0.6);
  vcreval::gbr::TrainConfig cfg;
  cfg.n_estimators = 10;
  cfg.min_samples_leaf = 2;
  const auto m = vc::train_vcr(X, {"precision", "recall", "vilt", "mcipscore_ref"}, y, cfg);
  for (std::size_t i = 0; i < 10; ++i)
    EXPECT_DOUBLE_EQ(vc::vcr_score(m, {m.feature_names, {X(i, 0), X(i, 1), X(i, 2), X(i, 3)}}), 0.6);
  const std::vector<double> bad(10, 1.5);
  EXPECT_THROW(vc::train_vcr(X, m.feature_names, bad, cfg), vcreval::Error);
}

class FixturePipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fx_ = new vcreval::synthetic::Fixture(vcreval::synthetic::make_fixture());
  }
  static void TearDownTestSuite() {
    delete fx_;
    fx_ = nullptr;
  }

  vc::FeatureContext context() const {
    vc::FeatureContext ctx;
    ctx.clip = {&fx_->clip_images, &fx_->clip_captions};
    ctx.mcip = {&fx_->mcip_images, &fx_->mcip_captions};
    ctx.channels["vilt"] = &fx_->vilt;
    return ctx;
  }

  static vcreval::synthetic::Fixture* fx_;
};

vcreval::synthetic::Fixture* FixturePipeline::fx_ = nullptr;

TEST_F(FixturePipeline, LearnedBeatsEverySingleFeature) {
  const auto parts = c::split(fx_->corpus, c::own_data_split(0));
  const auto train = vc::featurize_corpus(parts.train, fx_->detections, context());
  const auto test = vc::featurize_corpus(parts.test, fx_->detections, context());
  const auto target = c::aggregate_map(fx_->corpus, c::AggregationMethod::kMean, 0);
  std::vector<double> y_train, y_test;
  for (const auto& id : train.sample_ids) y_train.push_back(target.at(id));
  for (const auto& id : test.sample_ids) y_test.push_back(target.at(id));
  const auto model = vc::train_vcr(train.matrix, train.names, y_train, {});
  const double learned = vcreval::agreement::spearman_rho(vc::vcr_scores(model, test), y_test);
  for (std::size_t f = 0; f < test.names.size(); ++f) {
    std::vector<double> col;
    for (std::size_t r = 0; r < test.matrix.rows(); ++r) col.push_back(test.matrix(r, f));
    EXPECT_GT(learned, vcreval::agreement::spearman_rho(col, y_test)) << test.names[f];
  }
}

TEST_F(FixturePipeline, DeterministicAndPermutationInvariant) {
  const auto table = vc::featurize_corpus(fx_->corpus, fx_->detections, context());
  const auto target = c::aggregate_map(fx_->corpus, c::AggregationMethod::kMean, 0);
  std::vector<double> y;
  for (const auto& id : table.sample_ids) y.push_back(target.at(id));
  vcreval::gbr::TrainConfig cfg;
  cfg.n_estimators = 50;
  cfg.subsample = 0.8;
  cfg.seed = 4;
  const auto a = vc::train_vcr(table.matrix, table.names, y, cfg);
  const auto b = vc::train_vcr(table.matrix, table.names, y, cfg);
  EXPECT_EQ(vc::serialize_model(a), vc::serialize_model(b));

  // same features in another order score the same
  vc::FeatureVector fv{table.names, {}};
  const auto row = table.matrix.row(3);
  fv.values.assign(row.begin(), row.end());
  vc::FeatureVector rev{{table.names.rbegin(), table.names.rend()}, {row.rbegin(), row.rend()}};
  EXPECT_EQ(vc::vcr_score(a, fv), vc::vcr_score(a, rev));

  const auto back = vc::load_model(vc::serialize_model(a));
  EXPECT_EQ(back.feature_names, a.feature_names);
  EXPECT_EQ(vc::vcr_scores(back, table), vc::vcr_scores(a, table));
}

TEST(ModelFile, RoundTripAndErrors) {
  const auto m = constant_model(0.3);
  const std::string path = ::testing::TempDir() + "vcr_model_test.json";
  vc::save_model_file(path, m);
  const auto back = vc::load_model_file(path);
  EXPECT_EQ(vc::serialize_model(back), vc::serialize_model(m));
  std::remove(path.c_str());
  const auto text = vc::serialize_model(m);
  EXPECT_THROW(vc::load_model(text.substr(0, text.size() / 3)), vcreval::ParseError);
  std::string v2 = text;
  v2.replace(v2.find("\"version\": 1"), 12, "\"version\": 2");
  EXPECT_THROW(vc::load_model(v2), vcreval::gbr::VersionError);
}
