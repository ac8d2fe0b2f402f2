#pragma once

// Evaluation orchestration: every metric over a corpus, correlation with
// human judgments, model rankings under the three aggregation views, and
// tab-separated report files.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vcreval/corpus.hpp"
#include "vcreval/embed_metrics.hpp"
#include "vcreval/pool_metric.hpp"
#include "vcreval/vcrscore.hpp"

namespace vcreval::harness {

inline constexpr const char* kBleu = "bleu";
inline constexpr const char* kRouge = "rouge";
inline constexpr const char* kMeteor = "meteor";
inline constexpr const char* kCider = "cider";
inline constexpr const char* kBertScore = "bertscore";
inline constexpr const char* kClipScore = "clipscore";
inline constexpr const char* kClipScoreRef = "clipscore_ref";
inline constexpr const char* kMcipScore = "mcipscore";
inline constexpr const char* kMcipScoreRef = "mcipscore_ref";
inline constexpr const char* kVilt = "vilt";
inline constexpr const char* kBertGrammar = "bertgrammar";
inline constexpr const char* kPrecision = "precision";
inline constexpr const char* kRecall = "recall";
inline constexpr const char* kVcrScore = "vcrscore";

// Every metric the harness knows, in report column order.
const std::vector<std::string>& all_metrics();
bool is_known_metric(const std::string& name);

// Inputs left null are "not supplied": metrics that need them come out as
// absent columns with a warning. A supplied input that lacks an entry for
// some sample is an error.
struct EvaluationInputs {
  const pool::DetectionIndex* detections = nullptr;
  vcr::EmbeddingFamily clip;
  vcr::EmbeddingFamily mcip;
  // Token matrices for BERTScore; ids follow the caption-table convention.
  const embed::EmbeddingTable* tokens = nullptr;
  // "vilt", "bertgrammar", and any channel a trained model needs.
  std::map<std::string, const embed::ScoreChannel*> channels;
  const vcr::VcrModel* model = nullptr;
  pool::PoolOptions pool_options;
};

using Cell = std::optional<double>;

struct MetricReport {
  std::vector<std::string> metrics;
  std::vector<std::string> sample_ids;
  std::vector<std::string> sample_models;      // model_id per sample
  std::vector<std::vector<Cell>> scores;       // sample x metric
  std::vector<std::string> models;             // order of first appearance
  std::vector<std::vector<Cell>> model_means;  // model x metric
  std::vector<Cell> human_rho;                 // per metric, all samples
  std::vector<std::vector<Cell>> heatmap;      // model x metric, within-model
  std::vector<std::string> human_ranking;      // best first
  std::vector<std::vector<std::string>> rankings;  // per metric, best first
  std::vector<Cell> ranking_rho;                   // per metric vs human
  std::vector<std::string> warnings;

  std::size_t metric_index(const std::string& name) const;
  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

// Fills the score matrix and per-model means. Unknown metric names throw.
MetricReport evaluate_corpus(const corpus::Corpus& corpus, const std::vector<std::string>& metrics,
                             const EvaluationInputs& inputs);

// Fewer samples than this in a heatmap cell attaches a warning.
inline constexpr std::size_t kSmallSample = 30;

// Spearman of every metric column against the human scores (sample_id ->
// score), over the samples where the metric is present, plus the
// within-model heatmap. Throws MissingInputError when a sample has no human
// score and DegenerateError naming the metric when a present column is
// constant. Heatmap cells that are constant or too small stay absent.
void correlate_with_humans(MetricReport& report, const std::map<std::string, double>& human);

// Metric names ordered by human_rho, highest first; absent ones last.
std::vector<std::string> metrics_by_correlation(const MetricReport& report);

enum class ViewKind { kVotingSum, kMeanSum, kTrimmedSum };

std::string to_string(ViewKind kind);
ViewKind parse_view_kind(const std::string& s);

struct RankingView {
  ViewKind kind = ViewKind::kMeanSum;
  std::size_t n_images = 0;
  std::map<std::string, double> sums;     // raw per-model sums
  std::vector<std::string> ranking;       // descending sum, ties by name
  bool tied = false;                      // two models share a sum

  // sum * 100 / n_images
  double display(const std::string& model) const;
};

// Per-image aggregated human score for every model. The voting view sums
// vote scores, the other two sum mean scores; the trimmed view drops one
// maximum and one minimum per image (first occurrence in model order) before
// summing. Throws when an image lacks a sample for some model, or has two.
RankingView rank_models(const corpus::Corpus& corpus, ViewKind kind, std::uint64_t tie_seed = 0);

// Models ordered by a per-model value, descending, ties by name.
std::vector<std::string> ranking_from_values(const std::map<std::string, double>& values);

// Spearman on positions between two rankings of the same model set.
double ranking_correlation(const std::vector<std::string>& ranking,
                           const std::vector<std::string>& reference);

std::map<std::string, double> ranking_correlation(
    const std::map<std::string, std::vector<std::string>>& rankings,
    const std::vector<std::string>& reference);

// Models of the report ordered by their mean human score over its samples.
std::vector<std::string> human_ranking_by_mean(const MetricReport& report,
                                               const std::map<std::string, double>& human);

// Per-metric rankings from model means, and their correlation with
// `human_ranking`. Metrics with an absent mean for any model get no ranking.
void attach_rankings(MetricReport& report, const std::vector<std::string>& human_ranking);

struct HistogramOptions {
  std::size_t bins = 20;
  double lo = 0.0;
  double hi = 1.0;
};

// counts[b] for b in [0, bins); values outside [lo, hi] land in the edge bins.
std::vector<std::size_t> histogram(const std::vector<double>& values,
                                   const HistogramOptions& options = {});

// Writes scores.tsv, model_means.tsv, human_correlation.tsv,
// model_heatmap.tsv, rankings.tsv, histograms.tsv and warnings.txt.
void emit_report(const MetricReport& report, const std::string& dir,
                 const HistogramOptions& histograms = {});
MetricReport read_report(const std::string& dir);

// Shortest round-trip text for a cell, "NA" when absent.
std::string format_cell(const Cell& cell);
Cell parse_cell(const std::string& text);

}  // namespace vcreval::harness
