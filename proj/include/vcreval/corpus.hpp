#pragma once

// Caption corpus data model: ingestion of line-delimited caption records,
// rating normalization, zero filtering, per-sample aggregation of human
// scores, and seeded train/test splitting.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vcreval::corpus {

// Source tags for the bundled normalization rules.
inline constexpr const char* kSourceOwn = "vcr";
inline constexpr const char* kSourceVicr = "vicr";
inline constexpr const char* kSourceFlickrExpert = "flickr8k-expert";
inline constexpr const char* kSourceFlickrCf = "flickr8k-cf";
inline constexpr const char* kSourceComposite = "composite";

// Composite carries two ratings per caption, recorded under these tagger ids.
inline constexpr const char* kCompositeRelevance = "relevance";
inline constexpr const char* kCompositeThoroughness = "thoroughness";

struct RawScore {
  std::string tagger;
  int phase = 1;
  double score = 0.0;

  friend bool operator==(const RawScore&, const RawScore&) = default;
};

struct CaptionSample {
  std::string sample_id;
  std::string image_id;
  std::string model_id;
  std::string candidate;
  std::vector<std::string> references;
  std::string source;
  std::vector<RawScore> raw_scores;

  friend bool operator==(const CaptionSample&, const CaptionSample&) = default;
};

struct Corpus {
  std::vector<CaptionSample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  std::map<std::string, std::size_t> counts_by_source() const;
  std::size_t distinct_images() const;
  const CaptionSample* find(const std::string& sample_id) const;
};

// Only "jsonl" is defined: one JSON object per line with keys sample_id,
// image_id, model_id, candidate, references, source, raw_scores.
inline constexpr const char* kFormatJsonl = "jsonl";

Corpus read_corpus(std::istream& in, const std::string& format = kFormatJsonl);
Corpus read_corpus_file(const std::string& path, const std::string& format = kFormatJsonl);
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus_file(const std::string& path, const Corpus& corpus);

enum class MappingKind { kLinear, kFraction };

struct NormalizationRule {
  std::string source;
  double scale_min = 0.0;
  double scale_max = 1.0;
  MappingKind kind = MappingKind::kLinear;
};

enum class CompositeMode { kMean, kRelevanceOnly, kThoroughnessOnly };

// VICR and Composite 1..5, Flickr8k-Expert 1..4, Flickr8k-CF and the
// in-house 5-point data as fractions already in [0,1].
std::vector<NormalizationRule> default_rules();

double apply_rule(const NormalizationRule& rule, double value);

// Maps every raw score into [0,1]. Composite samples keep one or both of
// their criterion ratings depending on mode; with kMean both stay, so the
// mean aggregation averages them.
Corpus normalize_scores(Corpus corpus, const std::vector<NormalizationRule>& rules,
                        CompositeMode composite = CompositeMode::kMean);

struct FilterResult {
  Corpus kept;
  std::size_t removed = 0;
};

// Drops samples whose mean normalized score is exactly zero. Samples
// without raw scores are kept.
FilterResult filter_zero_scores(Corpus corpus);

enum class AggregationMethod { kMean, kVote };

struct AggregatedScore {
  std::string sample_id;
  double mean_score = 0.0;
  double vote_score = 0.0;
  std::size_t n_raw = 0;

  double value(AggregationMethod method) const {
    return method == AggregationMethod::kMean ? mean_score : vote_score;
  }
};

double mean_of(const std::vector<RawScore>& scores);

// Most frequent value; ties resolved by a draw seeded from (seed, sample_id)
// so the result does not depend on the order samples are visited.
double vote_of(const std::vector<RawScore>& scores, std::uint64_t seed,
               const std::string& sample_id);

AggregatedScore aggregate(const CaptionSample& sample, std::uint64_t tie_seed);
std::vector<AggregatedScore> aggregate(const Corpus& corpus, std::uint64_t tie_seed);

// sample_id -> aggregated value for the chosen method.
std::map<std::string, double> aggregate_map(const Corpus& corpus, AggregationMethod method,
                                            std::uint64_t tie_seed);

enum class SplitGrouping { kPerSample, kPerImage };

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  SplitGrouping grouping = SplitGrouping::kPerSample;
};

// In-house data: 240 train / 360 test out of 600.
SplitSpec own_data_split(std::uint64_t seed = 0);
// External data: 70 % train.
SplitSpec external_data_split(std::uint64_t seed = 0);

struct SplitResult {
  Corpus train;
  Corpus test;
};

// Train size is round-half-up(fraction * n) per sample, or the closest
// achievable total when whole images are kept together. Both sides keep the
// original corpus order.
SplitResult split(const Corpus& corpus, const SplitSpec& spec);

}  // namespace vcreval::corpus
