#pragma once

// The learned caption metric: pool precision/recall, a ViLT score channel and
// a CLIP-family score, regressed onto mean human judgments with boosted trees.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "vcreval/corpus.hpp"
#include "vcreval/embed_metrics.hpp"
#include "vcreval/gbr.hpp"
#include "vcreval/pool_metric.hpp"

namespace vcreval::vcr {

inline constexpr const char* kPrecision = "precision";
inline constexpr const char* kRecall = "recall";
inline constexpr const char* kVilt = "vilt";

enum class ClipSource { kClipScore, kClipScoreRef, kMcipScore, kMcipScoreRef };

// "clipscore", "clipscore_ref", "mcipscore", "mcipscore_ref"
std::string feature_name(ClipSource source);
ClipSource parse_clip_source(const std::string& name);

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;

  double at(const std::string& name) const;
};

// Image and caption tables of one encoder family. Caption ids: the candidate
// under its sample_id; references under "<sample_id>#ref<k>" or, when the
// sample has none of its own, "<image_id>#ref<k>".
struct EmbeddingFamily {
  const embed::EmbeddingTable* images = nullptr;
  const embed::EmbeddingTable* captions = nullptr;
  double weight = embed::kClipWeight;
};

std::vector<std::span<const double>> reference_vectors(const embed::EmbeddingTable& captions,
                                                       const corpus::CaptionSample& sample);

// Score of one CLIP-family variant for a sample.
double clip_family_score(ClipSource source, const EmbeddingFamily& family,
                         const corpus::CaptionSample& sample);

struct FeatureContext {
  EmbeddingFamily clip;
  EmbeddingFamily mcip;
  // channel name -> channel. "vilt" is required. A channel named like the
  // CLIP feature (e.g. "mcipscore_ref") overrides computing it from tables.
  std::map<std::string, const embed::ScoreChannel*> channels;
  ClipSource clip_source = ClipSource::kMcipScoreRef;
  std::vector<std::string> extra_channels;
  pool::PoolOptions pool_options;
};

std::vector<std::string> schema_for(const FeatureContext& context);

// Errors name the sample and the missing input.
FeatureVector featurize(const corpus::CaptionSample& sample, const pool::WordPool& pool,
                        const FeatureContext& context);

struct FeatureTable {
  std::vector<std::string> names;
  std::vector<std::string> sample_ids;
  gbr::FeatureMatrix matrix;
};

// Builds one pool per image (references of all its samples plus detections)
// and featurizes every sample.
FeatureTable featurize_corpus(const corpus::Corpus& corpus, const pool::DetectionIndex& detections,
                              const FeatureContext& context);

// Pool for an image from the given samples' references and its detections.
pool::WordPool image_pool(const std::string& image_id,
                          const std::vector<const corpus::CaptionSample*>& samples,
                          const pool::DetectionIndex& detections,
                          const pool::PoolOptions& options = {});

class SchemaError : public Error {
 public:
  using Error::Error;
};

struct VcrModel {
  gbr::BoostedEnsemble ensemble;
  std::vector<std::string> feature_names;
  bool clamp = true;
};

VcrModel train_vcr(const gbr::FeatureMatrix& features, const std::vector<std::string>& names,
                   std::span<const double> targets, const gbr::TrainConfig& config);

// Unclamped ensemble output; the vector is reordered by name to the schema.
double raw_score(const VcrModel& model, const FeatureVector& features);
double vcr_score(const VcrModel& model, const FeatureVector& features);
std::vector<double> vcr_scores(const VcrModel& model, const FeatureTable& table);

std::string serialize_model(const VcrModel& model);
VcrModel load_model(const std::string& payload);
void save_model_file(const std::string& path, const VcrModel& model);
VcrModel load_model_file(const std::string& path);

}  // namespace vcreval::vcr
