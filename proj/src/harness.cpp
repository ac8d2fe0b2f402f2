#include "vcreval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "vcreval/agreement.hpp"
#include "vcreval/error.hpp"
#include "vcreval/lexical.hpp"

namespace vcreval::harness {

const std::vector<std::string>& all_metrics() {
  static const std::vector<std::string> names = {
      kBleu,     kRouge,        kMeteor, kCider,       kBertScore, kClipScore, kClipScoreRef,
      kMcipScore, kMcipScoreRef, kVilt,  kBertGrammar, kPrecision, kRecall,    kVcrScore};
  return names;
}

bool is_known_metric(const std::string& name) {
  const auto& all = all_metrics();
  return std::find(all.begin(), all.end(), name) != all.end();
}

std::size_t MetricReport::metric_index(const std::string& name) const {
  auto it = std::find(metrics.begin(), metrics.end(), name);
  if (it == metrics.end()) throw Error("metric '" + name + "' not in report");
  return static_cast<std::size_t>(it - metrics.begin());
}

namespace {

std::vector<const embed::TokenMatrix*> reference_tokens(const embed::EmbeddingTable& table,
                                                        const corpus::CaptionSample& s) {
  std::vector<const embed::TokenMatrix*> out;
  for (const std::string& prefix : {s.sample_id, s.image_id}) {
    for (std::size_t k = 0;; ++k) {
      const std::string id = prefix + "#ref" + std::to_string(k);
      if (!table.contains(id)) break;
      out.push_back(&table.tokens(id));
    }
    if (!out.empty()) break;
  }
  if (out.empty()) throw MissingInputError("reference token embeddings", s.sample_id);
  return out;
}

struct Prepared {
  std::vector<lexical::TokenSeq> candidates;
  std::vector<std::vector<lexical::TokenSeq>> references;
  std::map<std::string, pool::WordPool> pools;
};

Prepared prepare(const corpus::Corpus& corpus, const EvaluationInputs& inputs, bool need_pools) {
  Prepared p;
  for (const auto& s : corpus.samples) {
    p.candidates.push_back(lexical::tokenize(s.candidate));
    std::vector<lexical::TokenSeq> refs;
    for (const auto& r : s.references) refs.push_back(lexical::tokenize(r));
    p.references.push_back(std::move(refs));
  }
  if (need_pools) {
    static const pool::DetectionIndex kNone;
    const auto& det = inputs.detections ? *inputs.detections : kNone;
    std::map<std::string, std::vector<const corpus::CaptionSample*>> by_image;
    for (const auto& s : corpus.samples) by_image[s.image_id].push_back(&s);
    for (const auto& [image, samples] : by_image)
      p.pools.emplace(image, vcr::image_pool(image, samples, det, inputs.pool_options));
  }
  return p;
}

bool uses_pool(const std::string& m) { return m == kPrecision || m == kRecall || m == kVcrScore; }

vcr::FeatureContext context_for_model(const vcr::VcrModel& model, const EvaluationInputs& inputs) {
  vcr::FeatureContext ctx;
  ctx.clip = inputs.clip;
  ctx.mcip = inputs.mcip;
  ctx.channels = inputs.channels;
  ctx.pool_options = inputs.pool_options;
  bool have_clip = false;
  for (const auto& name : model.feature_names) {
    if (name == vcr::kPrecision || name == vcr::kRecall || name == vcr::kVilt) continue;
    if (!have_clip && (name == kClipScore || name == kClipScoreRef || name == kMcipScore ||
                       name == kMcipScoreRef)) {
      ctx.clip_source = vcr::parse_clip_source(name);
      have_clip = true;
    } else {
      ctx.extra_channels.push_back(name);
    }
  }
  if (!have_clip) throw vcr::SchemaError("model schema has no CLIP-family feature");
  return ctx;
}

// Why a metric cannot be computed at all, or empty when it can.
std::string missing_input(const std::string& m, const EvaluationInputs& in) {
  auto has_family = [](const vcr::EmbeddingFamily& f) { return f.images && f.captions; };
  if (m == kBertScore && !in.tokens) return "token embeddings";
  if ((m == kClipScore || m == kClipScoreRef) && !has_family(in.clip)) return "clip embeddings";
  if ((m == kMcipScore || m == kMcipScoreRef) && !has_family(in.mcip)) return "mcip embeddings";
  if ((m == kVilt || m == kBertGrammar) && !in.channels.count(m)) return m + " channel";
  if (m == kVcrScore && !in.model) return "trained model";
  return {};
}

}  // namespace

MetricReport evaluate_corpus(const corpus::Corpus& corpus, const std::vector<std::string>& metrics,
                             const EvaluationInputs& inputs) {
  std::set<std::string> seen;
  for (const auto& m : metrics) {
    if (!is_known_metric(m)) throw Error("unknown metric '" + m + "'");
    if (!seen.insert(m).second) throw Error("metric '" + m + "' requested twice");
  }

  MetricReport report;
  report.metrics = metrics;
  const std::size_t n = corpus.size();
  for (const auto& s : corpus.samples) {
    report.sample_ids.push_back(s.sample_id);
    report.sample_models.push_back(s.model_id);
    if (std::find(report.models.begin(), report.models.end(), s.model_id) == report.models.end())
      report.models.push_back(s.model_id);
  }
  report.scores.assign(n, std::vector<Cell>(metrics.size()));

  const bool need_pools = std::any_of(metrics.begin(), metrics.end(), uses_pool);
  const Prepared prep = prepare(corpus, inputs, need_pools);

  for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
    const std::string& m = metrics[mi];
    if (const std::string why = missing_input(m, inputs); !why.empty()) {
      report.warnings.push_back(m + ": absent, no " + why + " supplied");
      continue;
    }
    auto set = [&](std::size_t i, double v) { report.scores[i][mi] = v; };

    if (m == kCider) {
      const auto result = lexical::cider(prep.candidates, prep.references);
      if (result.degenerate) {
        report.warnings.push_back(std::string(kCider) +
                                  ": absent, fewer than two reference sets (idf undefined)");
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) set(i, result.scores[i]);
      continue;
    }

    std::optional<vcr::FeatureContext> vcr_ctx;
    if (m == kVcrScore) vcr_ctx = context_for_model(*inputs.model, inputs);

    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = corpus.samples[i];
      const auto& cand = prep.candidates[i];
      const auto& refs = prep.references[i];
      if (m == kBleu) {
        set(i, lexical::bleu4(cand, refs));
      } else if (m == kRouge) {
        set(i, lexical::rouge_l(cand, refs));
      } else if (m == kMeteor) {
        set(i, lexical::meteor(cand, refs));
      } else if (m == kBertScore) {
        if (!inputs.tokens->contains(s.sample_id))
          throw MissingInputError("candidate token embeddings", s.sample_id);
        set(i, embed::bert_score(inputs.tokens->tokens(s.sample_id),
                                 reference_tokens(*inputs.tokens, s))
                   .f1);
      } else if (m == kClipScore || m == kClipScoreRef) {
        set(i, vcr::clip_family_score(vcr::parse_clip_source(m), inputs.clip, s));
      } else if (m == kMcipScore || m == kMcipScoreRef) {
        set(i, vcr::clip_family_score(vcr::parse_clip_source(m), inputs.mcip, s));
      } else if (m == kVilt || m == kBertGrammar) {
        auto v = inputs.channels.at(m)->get(s.sample_id);
        if (!v) throw MissingInputError(m, s.sample_id);
        set(i, *v);
      } else if (m == kPrecision || m == kRecall) {
        const auto pr =
            pool::precision_recall(cand, prep.pools.at(s.image_id), inputs.pool_options);
        set(i, m == kPrecision ? pr.precision : pr.recall);
      } else if (m == kVcrScore) {
        const auto fv = vcr::featurize(s, prep.pools.at(s.image_id), *vcr_ctx);
        set(i, vcr::vcr_score(*inputs.model, fv));
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t mi = 0; mi < metrics.size(); ++mi)
      if (report.scores[i][mi] && !std::isfinite(*report.scores[i][mi]))
        throw Error("non-finite " + metrics[mi] + " for '" + report.sample_ids[i] + "'");

  report.model_means.assign(report.models.size(), std::vector<Cell>(metrics.size()));
  for (std::size_t k = 0; k < report.models.size(); ++k) {
    for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (report.sample_models[i] == report.models[k] && report.scores[i][mi]) {
          sum += *report.scores[i][mi];
          ++count;
        }
      if (count > 0) report.model_means[k][mi] = sum / static_cast<double>(count);
    }
  }
  return report;
}

namespace {

bool constant(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

}  // namespace

void correlate_with_humans(MetricReport& report, const std::map<std::string, double>& human) {
  const std::size_t n = report.sample_ids.size();
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = human.find(report.sample_ids[i]);
    if (it == human.end()) throw MissingInputError("human score", report.sample_ids[i]);
    h[i] = it->second;
  }

  report.human_rho.assign(report.metrics.size(), std::nullopt);
  report.heatmap.assign(report.models.size(), std::vector<Cell>(report.metrics.size()));
  for (std::size_t mi = 0; mi < report.metrics.size(); ++mi) {
    const std::string& m = report.metrics[mi];
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i)
      if (report.scores[i][mi]) {
        xs.push_back(*report.scores[i][mi]);
        ys.push_back(h[i]);
      }
    if (xs.size() < 2) continue;
    if (constant(xs)) throw DegenerateError("metric column '" + m + "' is constant");
    if (constant(ys)) throw DegenerateError("human scores are constant");
    report.human_rho[mi] = agreement::spearman_rho(xs, ys);

    for (std::size_t k = 0; k < report.models.size(); ++k) {
      std::vector<double> mx, my;
      for (std::size_t i = 0; i < n; ++i)
        if (report.sample_models[i] == report.models[k] && report.scores[i][mi]) {
          mx.push_back(*report.scores[i][mi]);
          my.push_back(h[i]);
        }
      const std::string cell = m + " / " + report.models[k];
      if (mx.size() < 2 || constant(mx) || constant(my)) {
        report.warnings.push_back("heatmap " + cell + ": absent, n=" + std::to_string(mx.size()) +
                                  " or constant series");
        continue;
      }
      if (mx.size() < kSmallSample)
        report.warnings.push_back("heatmap " + cell + ": small sample, n=" +
                                  std::to_string(mx.size()));
      report.heatmap[k][mi] = agreement::spearman_rho(mx, my);
    }
  }
}

std::vector<std::string> metrics_by_correlation(const MetricReport& report) {
  std::vector<std::size_t> idx(report.metrics.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto rho = [&](std::size_t i) -> Cell {
    return i < report.human_rho.size() ? report.human_rho[i] : std::nullopt;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const Cell ra = rho(a), rb = rho(b);
    if (ra && rb) return *ra > *rb;
    return ra.has_value() && !rb.has_value();
  });
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(report.metrics[i]);
  return out;
}

std::string to_string(ViewKind kind) {
  switch (kind) {
    case ViewKind::kVotingSum:
      return "voting-sum";
    case ViewKind::kMeanSum:
      return "mean-sum";
    case ViewKind::kTrimmedSum:
      return "trimmed-sum";
  }
  return "mean-sum";
}

ViewKind parse_view_kind(const std::string& s) {
  if (s == "voting-sum" || s == "voting") return ViewKind::kVotingSum;
  if (s == "mean-sum" || s == "mean") return ViewKind::kMeanSum;
  if (s == "trimmed-sum" || s == "trimmed") return ViewKind::kTrimmedSum;
  throw Error("unknown ranking view '" + s + "'");
}

double RankingView::display(const std::string& model) const {
  if (n_images == 0) throw DegenerateError("ranking view over zero images");
  return sums.at(model) * 100.0 / static_cast<double>(n_images);
}

std::vector<std::string> ranking_from_values(const std::map<std::string, double>& values) {
  std::vector<std::pair<std::string, double>> items(values.begin(), values.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (const auto& [name, v] : items) out.push_back(name);
  return out;
}

RankingView rank_models(const corpus::Corpus& corpus, ViewKind kind, std::uint64_t tie_seed) {
  std::vector<std::string> models;
  std::map<std::string, std::map<std::string, double>> by_image;  // image -> model -> score
  for (const auto& s : corpus.samples) {
    if (std::find(models.begin(), models.end(), s.model_id) == models.end())
      models.push_back(s.model_id);
    const auto agg = corpus::aggregate(s, tie_seed);
    const double v = kind == ViewKind::kVotingSum ? agg.vote_score : agg.mean_score;
    if (!by_image[s.image_id].emplace(s.model_id, v).second)
      throw Error("image '" + s.image_id + "' has two samples from model '" + s.model_id + "'");
  }

  RankingView view;
  view.kind = kind;
  view.n_images = by_image.size();
  for (const auto& m : models) view.sums[m] = 0.0;
  if (kind == ViewKind::kTrimmedSum && models.size() < 3)
    throw Error("trimmed-sum view needs at least 3 models");

  for (const auto& [image, scores] : by_image) {
    if (scores.size() != models.size()) {
      for (const auto& m : models)
        if (!scores.count(m))
          throw MissingInputError("score from model '" + m + "'", image);
    }
    std::size_t drop_max = models.size(), drop_min = models.size();
    if (kind == ViewKind::kTrimmedSum) {
      drop_max = drop_min = 0;
      for (std::size_t k = 1; k < models.size(); ++k) {
        if (scores.at(models[k]) > scores.at(models[drop_max])) drop_max = k;
        if (scores.at(models[k]) < scores.at(models[drop_min])) drop_min = k;
      }
      // all equal: both picks land on the first model; drop a second instance
      if (drop_max == drop_min) drop_min = 1;
    }
    for (std::size_t k = 0; k < models.size(); ++k)
      if (k != drop_max && k != drop_min) view.sums[models[k]] += scores.at(models[k]);
  }

  view.ranking = ranking_from_values(view.sums);
  std::set<double> distinct;
  for (const auto& [m, v] : view.sums) distinct.insert(v);
  view.tied = distinct.size() < view.sums.size();
  return view;
}

double ranking_correlation(const std::vector<std::string>& ranking,
                           const std::vector<std::string>& reference) {
  if (ranking.size() != reference.size())
    throw Error("rankings cover different model sets");
  if (ranking.size() < 2) throw DegenerateError("ranking of fewer than 2 models");
  std::map<std::string, double> pos;
  for (std::size_t i = 0; i < reference.size(); ++i)
    if (!pos.emplace(reference[i], static_cast<double>(i + 1)).second)
      throw Error("model '" + reference[i] + "' repeated in ranking");
  std::vector<double> x, y;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    auto it = pos.find(ranking[i]);
    if (it == pos.end() || !seen.insert(ranking[i]).second)
      throw Error("rankings cover different model sets");
    x.push_back(static_cast<double>(i + 1));
    y.push_back(it->second);
  }
  return agreement::spearman_rho(x, y);
}

std::map<std::string, double> ranking_correlation(
    const std::map<std::string, std::vector<std::string>>& rankings,
    const std::vector<std::string>& reference) {
  std::map<std::string, double> out;
  for (const auto& [metric, r] : rankings) out[metric] = ranking_correlation(r, reference);
  return out;
}

std::vector<std::string> human_ranking_by_mean(const MetricReport& report,
                                               const std::map<std::string, double>& human) {
  std::map<std::string, double> sums, counts;
  for (std::size_t i = 0; i < report.sample_ids.size(); ++i) {
    auto it = human.find(report.sample_ids[i]);
    if (it == human.end()) throw MissingInputError("human score", report.sample_ids[i]);
    sums[report.sample_models[i]] += it->second;
    counts[report.sample_models[i]] += 1.0;
  }
  for (auto& [model, sum] : sums) sum /= counts[model];
  return ranking_from_values(sums);
}

void attach_rankings(MetricReport& report, const std::vector<std::string>& human_ranking) {
  report.human_ranking = human_ranking;
  report.rankings.assign(report.metrics.size(), {});
  report.ranking_rho.assign(report.metrics.size(), std::nullopt);
  for (std::size_t mi = 0; mi < report.metrics.size(); ++mi) {
    std::map<std::string, double> means;
    for (std::size_t k = 0; k < report.models.size(); ++k) {
      if (!report.model_means[k][mi]) {
        means.clear();
        break;
      }
      means[report.models[k]] = *report.model_means[k][mi];
    }
    if (means.empty()) continue;
    report.rankings[mi] = ranking_from_values(means);
    report.ranking_rho[mi] = ranking_correlation(report.rankings[mi], human_ranking);
  }
}

std::vector<std::size_t> histogram(const std::vector<double>& values,
                                   const HistogramOptions& options) {
  if (options.bins == 0 || !(options.hi > options.lo)) throw Error("invalid histogram range");
  std::vector<std::size_t> counts(options.bins, 0);
  const double width = (options.hi - options.lo) / static_cast<double>(options.bins);
  for (double v : values) {
    double b = std::floor((v - options.lo) / width);
    b = std::clamp(b, 0.0, static_cast<double>(options.bins - 1));
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

}  // namespace vcreval::harness
