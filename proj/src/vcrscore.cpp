#include "vcreval/vcrscore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vcreval/error.hpp"

namespace vcreval::vcr {

using nlohmann::ordered_json;

std::string feature_name(ClipSource source) {
  switch (source) {
    case ClipSource::kClipScore:
      return "clipscore";
    case ClipSource::kClipScoreRef:
      return "clipscore_ref";
    case ClipSource::kMcipScore:
      return "mcipscore";
    case ClipSource::kMcipScoreRef:
      return "mcipscore_ref";
  }
  return "mcipscore_ref";
}

ClipSource parse_clip_source(const std::string& name) {
  if (name == "clipscore") return ClipSource::kClipScore;
  if (name == "clipscore_ref") return ClipSource::kClipScoreRef;
  if (name == "mcipscore") return ClipSource::kMcipScore;
  if (name == "mcipscore_ref") return ClipSource::kMcipScoreRef;
  throw Error("unknown CLIP feature source '" + name + "'");
}

double FeatureVector::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  throw SchemaError("feature '" + name + "' not present");
}

std::vector<std::span<const double>> reference_vectors(const embed::EmbeddingTable& captions,
                                                       const corpus::CaptionSample& sample) {
  std::vector<std::span<const double>> out;
  for (const std::string& prefix : {sample.sample_id, sample.image_id}) {
    for (std::size_t k = 0;; ++k) {
      const std::string id = prefix + "#ref" + std::to_string(k);
      if (!captions.contains(id)) break;
      out.push_back(captions.vector(id));
    }
    if (!out.empty()) break;
  }
  if (out.empty()) throw MissingInputError("reference embeddings", sample.sample_id);
  return out;
}

double clip_family_score(ClipSource source, const EmbeddingFamily& family,
                         const corpus::CaptionSample& sample) {
  const std::string name = feature_name(source);
  if (!family.images || !family.captions)
    throw MissingInputError(name + " embedding tables", sample.sample_id);
  if (!family.images->contains(sample.image_id))
    throw MissingInputError(name + " image embedding", sample.sample_id);
  if (!family.captions->contains(sample.sample_id))
    throw MissingInputError(name + " caption embedding", sample.sample_id);
  const auto image = family.images->vector(sample.image_id);
  const auto caption = family.captions->vector(sample.sample_id);
  switch (source) {
    case ClipSource::kClipScore:
    case ClipSource::kMcipScore:
      return embed::clip_score(image, caption, family.weight);
    case ClipSource::kClipScoreRef:
    case ClipSource::kMcipScoreRef:
      return embed::clip_score_ref(image, caption, reference_vectors(*family.captions, sample),
                                   family.weight);
  }
  return 0.0;
}

std::vector<std::string> schema_for(const FeatureContext& context) {
  std::vector<std::string> names = {kPrecision, kRecall, kVilt, feature_name(context.clip_source)};
  names.insert(names.end(), context.extra_channels.begin(), context.extra_channels.end());
  return names;
}

namespace {

double channel_value(const FeatureContext& ctx, const std::string& name,
                     const std::string& sample_id) {
  auto it = ctx.channels.find(name);
  if (it == ctx.channels.end() || it->second == nullptr)
    throw MissingInputError(name, sample_id);
  auto v = it->second->get(sample_id);
  if (!v) throw MissingInputError(name, sample_id);
  return *v;
}

}  // namespace

FeatureVector featurize(const corpus::CaptionSample& sample, const pool::WordPool& pool,
                        const FeatureContext& context) {
  FeatureVector fv;
  fv.names = schema_for(context);
  const auto pr =
      pool::precision_recall(lexical::tokenize(sample.candidate), pool, context.pool_options);
  fv.values.push_back(pr.precision);
  fv.values.push_back(pr.recall);
  fv.values.push_back(channel_value(context, kVilt, sample.sample_id));

  const std::string clip_name = feature_name(context.clip_source);
  if (context.channels.count(clip_name)) {
    fv.values.push_back(channel_value(context, clip_name, sample.sample_id));
  } else {
    const bool mcip = context.clip_source == ClipSource::kMcipScore ||
                      context.clip_source == ClipSource::kMcipScoreRef;
    fv.values.push_back(
        clip_family_score(context.clip_source, mcip ? context.mcip : context.clip, sample));
  }
  for (const auto& extra : context.extra_channels)
    fv.values.push_back(channel_value(context, extra, sample.sample_id));
  for (std::size_t i = 0; i < fv.values.size(); ++i)
    if (!std::isfinite(fv.values[i]))
      throw Error("non-finite feature '" + fv.names[i] + "' for '" + sample.sample_id + "'");
  return fv;
}

pool::WordPool image_pool(const std::string& image_id,
                          const std::vector<const corpus::CaptionSample*>& samples,
                          const pool::DetectionIndex& detections,
                          const pool::PoolOptions& options) {
  std::vector<lexical::TokenSeq> refs;
  for (const auto* s : samples)
    for (const auto& r : s->references) refs.push_back(lexical::tokenize(r));
  auto it = detections.find(image_id);
  return pool::build_pool(image_id, refs, it == detections.end() ? nullptr : &it->second, options);
}

FeatureTable featurize_corpus(const corpus::Corpus& corpus, const pool::DetectionIndex& detections,
                              const FeatureContext& context) {
  std::map<std::string, std::vector<const corpus::CaptionSample*>> by_image;
  for (const auto& s : corpus.samples) by_image[s.image_id].push_back(&s);
  std::map<std::string, pool::WordPool> pools;
  for (const auto& [image, samples] : by_image)
    pools.emplace(image, image_pool(image, samples, detections, context.pool_options));

  FeatureTable table;
  table.names = schema_for(context);
  table.matrix = gbr::FeatureMatrix(0, table.names.size());
  for (const auto& s : corpus.samples) {
    const FeatureVector fv = featurize(s, pools.at(s.image_id), context);
    table.sample_ids.push_back(s.sample_id);
    table.matrix.append_row(fv.values);
  }
  return table;
}

VcrModel train_vcr(const gbr::FeatureMatrix& features, const std::vector<std::string>& names,
                   std::span<const double> targets, const gbr::TrainConfig& config) {
  if (names.size() != features.cols()) throw SchemaError("feature names do not match columns");
  if (features.rows() < 2) throw Error("train_vcr needs at least 2 rows");
  for (double t : targets)
    if (!(t >= 0.0 && t <= 1.0)) throw Error("training targets must lie in [0,1]");
  VcrModel model;
  model.ensemble = gbr::fit(features, targets, config);
  model.feature_names = names;
  return model;
}

double raw_score(const VcrModel& model, const FeatureVector& features) {
  if (features.names.size() != model.feature_names.size())
    throw SchemaError("feature schema has " + std::to_string(features.names.size()) +
                      " entries, model expects " + std::to_string(model.feature_names.size()));
  std::vector<double> x(model.feature_names.size());
  for (std::size_t i = 0; i < model.feature_names.size(); ++i) {
    auto it = std::find(features.names.begin(), features.names.end(), model.feature_names[i]);
    if (it == features.names.end())
      throw SchemaError("feature '" + model.feature_names[i] + "' missing from input");
    x[i] = features.values[static_cast<std::size_t>(it - features.names.begin())];
  }
  return model.ensemble.predict(x);
}

double vcr_score(const VcrModel& model, const FeatureVector& features) {
  const double raw = raw_score(model, features);
  return model.clamp ? std::clamp(raw, 0.0, 1.0) : raw;
}

std::vector<double> vcr_scores(const VcrModel& model, const FeatureTable& table) {
  std::vector<double> out;
  out.reserve(table.matrix.rows());
  FeatureVector fv;
  fv.names = table.names;
  for (std::size_t r = 0; r < table.matrix.rows(); ++r) {
    auto row = table.matrix.row(r);
    fv.values.assign(row.begin(), row.end());
    out.push_back(vcr_score(model, fv));
  }
  return out;
}

std::string serialize_model(const VcrModel& model) {
  ordered_json o;
  o["format"] = "vcreval-model";
  o["version"] = 1;
  o["schema"] = ordered_json{{"features", model.feature_names}, {"clamp", model.clamp}};
  o["ensemble"] = ordered_json::parse(gbr::serialize(model.ensemble));
  return o.dump(1) + "\n";
}

VcrModel load_model(const std::string& payload) {
  ordered_json o;
  try {
    o = ordered_json::parse(payload);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("corrupted model file: ") + e.what(), 0);
  }
  try {
    if (!o.is_object() || o.value("format", "") != "vcreval-model")
      throw ParseError("not a vcreval model file", 0);
    if (o.at("version").get<int>() != 1)
      throw gbr::VersionError("unsupported model file version");
    VcrModel m;
    m.feature_names = o.at("schema").at("features").get<std::vector<std::string>>();
    m.clamp = o.at("schema").at("clamp").get<bool>();
    m.ensemble = gbr::load(o.at("ensemble").dump());
    if (m.ensemble.n_features != m.feature_names.size())
      throw ParseError("schema width differs from ensemble width", 0);
    return m;
  } catch (const ordered_json::exception& e) {
    throw ParseError(std::string("corrupted model file: ") + e.what(), 0);
  }
}

void save_model_file(const std::string& path, const VcrModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file '" + path + "'");
  out << serialize_model(model);
  if (!out) throw Error("write failed for '" + path + "'");
}

VcrModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

}  // namespace vcreval::vcr
