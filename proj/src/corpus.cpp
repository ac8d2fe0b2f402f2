#include "vcreval/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "vcreval/error.hpp"
#include "vcreval/random.hpp"

namespace vcreval::corpus {

using nlohmann::json;

namespace {

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

constexpr double kScaleValues[] = {0.0, 0.25, 0.5, 0.75, 1.0};

bool on_five_point_scale(double v) {
  return std::find(std::begin(kScaleValues), std::end(kScaleValues), v) != std::end(kScaleValues);
}

std::string required_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing required field '") + key + "'", line);
  if (!it->is_string()) throw ParseError(std::string("field '") + key + "' must be a string", line);
  return it->get<std::string>();
}

CaptionSample parse_sample(const json& obj, std::size_t line) {
  if (!obj.is_object()) throw ParseError("record is not an object", line);
  CaptionSample s;
  s.sample_id = required_string(obj, "sample_id", line);
  s.image_id = required_string(obj, "image_id", line);
  s.model_id = required_string(obj, "model_id", line);
  s.candidate = required_string(obj, "candidate", line);
  s.source = required_string(obj, "source", line);
  if (s.sample_id.empty()) throw ParseError("empty sample_id", line);
  if (is_blank(s.candidate)) throw ParseError("empty candidate for '" + s.sample_id + "'", line);

  if (auto it = obj.find("references"); it != obj.end()) {
    if (!it->is_array()) throw ParseError("'references' must be an array", line);
    for (const auto& r : *it) {
      if (!r.is_string()) throw ParseError("reference must be a string", line);
      s.references.push_back(r.get<std::string>());
    }
  } else {
    throw ParseError("missing required field 'references'", line);
  }

  if (auto it = obj.find("raw_scores"); it != obj.end()) {
    if (!it->is_array()) throw ParseError("'raw_scores' must be an array", line);
    for (const auto& r : *it) {
      if (!r.is_object()) throw ParseError("raw score must be an object", line);
      RawScore rs;
      rs.tagger = required_string(r, "tagger", line);
      auto ph = r.find("phase");
      if (ph == r.end() || !ph->is_number_integer() || ph->get<int>() < 1)
        throw ParseError("raw score needs an integer phase >= 1", line);
      rs.phase = ph->get<int>();
      auto sc = r.find("score");
      if (sc == r.end() || !sc->is_number()) throw ParseError("raw score needs a numeric score", line);
      rs.score = sc->get<double>();
      if (!std::isfinite(rs.score)) throw ParseError("non-finite score", line);
      if (s.source == kSourceOwn && !on_five_point_scale(rs.score))
        throw ParseError("score " + std::to_string(rs.score) + " is not on the 5-point scale", line);
      s.raw_scores.push_back(std::move(rs));
    }
  } else {
    throw ParseError("missing required field 'raw_scores'", line);
  }
  return s;
}

}  // namespace

std::map<std::string, std::size_t> Corpus::counts_by_source() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : samples) ++counts[s.source];
  return counts;
}

std::size_t Corpus::distinct_images() const {
  std::set<std::string> ids;
  for (const auto& s : samples) ids.insert(s.image_id);
  return ids.size();
}

const CaptionSample* Corpus::find(const std::string& sample_id) const {
  for (const auto& s : samples)
    if (s.sample_id == sample_id) return &s;
  return nullptr;
}

Corpus read_corpus(std::istream& in, const std::string& format) {
  if (format != kFormatJsonl) throw Error("unknown corpus format '" + format + "'");
  Corpus corpus;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (is_blank(text)) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line);
    }
    CaptionSample s = parse_sample(obj, line);
    if (!seen.insert(s.sample_id).second) throw DuplicateIdError(s.sample_id);
    corpus.samples.push_back(std::move(s));
  }
  return corpus;
}

Corpus read_corpus_file(const std::string& path, const std::string& format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file '" + path + "'");
  return read_corpus(in, format);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.samples) {
    nlohmann::ordered_json o;
    o["sample_id"] = s.sample_id;
    o["image_id"] = s.image_id;
    o["model_id"] = s.model_id;
    o["candidate"] = s.candidate;
    o["references"] = s.references;
    o["source"] = s.source;
    o["raw_scores"] = nlohmann::ordered_json::array();
    for (const auto& r : s.raw_scores) {
      nlohmann::ordered_json rs;
      rs["tagger"] = r.tagger;
      rs["phase"] = r.phase;
      rs["score"] = r.score;
      o["raw_scores"].push_back(std::move(rs));
    }
    out << o.dump() << '\n';
  }
}

void write_corpus_file(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write corpus file '" + path + "'");
  write_corpus(out, corpus);
  if (!out) throw Error("write failed for '" + path + "'");
}

std::vector<NormalizationRule> default_rules() {
  return {
      {kSourceOwn, 0.0, 1.0, MappingKind::kFraction},
      {kSourceVicr, 1.0, 5.0, MappingKind::kLinear},
      {kSourceComposite, 1.0, 5.0, MappingKind::kLinear},
      {kSourceFlickrExpert, 1.0, 4.0, MappingKind::kLinear},
      {kSourceFlickrCf, 0.0, 1.0, MappingKind::kFraction},
  };
}

double apply_rule(const NormalizationRule& rule, double value) {
  if (!std::isfinite(value)) throw Error("non-finite rating for source '" + rule.source + "'");
  if (rule.kind == MappingKind::kFraction) {
    if (value < 0.0 || value > 1.0)
      throw Error("fraction " + std::to_string(value) + " outside [0,1] for source '" +
                  rule.source + "'");
    return value;
  }
  if (!(rule.scale_max > rule.scale_min))
    throw Error("rule for '" + rule.source + "' has max <= min");
  if (value < rule.scale_min || value > rule.scale_max)
    throw Error("rating " + std::to_string(value) + " outside scale [" +
                std::to_string(rule.scale_min) + "," + std::to_string(rule.scale_max) +
                "] for source '" + rule.source + "'");
  return (value - rule.scale_min) / (rule.scale_max - rule.scale_min);
}

Corpus normalize_scores(Corpus corpus, const std::vector<NormalizationRule>& rules,
                        CompositeMode composite) {
  std::map<std::string, const NormalizationRule*> by_source;
  for (const auto& r : rules) by_source[r.source] = &r;

  for (auto& s : corpus.samples) {
    auto it = by_source.find(s.source);
    if (it == by_source.end()) throw Error("no normalization rule for source '" + s.source + "'");
    std::vector<RawScore> out;
    out.reserve(s.raw_scores.size());
    for (auto& r : s.raw_scores) {
      if (s.source == kSourceComposite) {
        if (composite == CompositeMode::kRelevanceOnly && r.tagger != kCompositeRelevance) continue;
        if (composite == CompositeMode::kThoroughnessOnly && r.tagger != kCompositeThoroughness)
          continue;
      }
      r.score = apply_rule(*it->second, r.score);
      out.push_back(std::move(r));
    }
    s.raw_scores = std::move(out);
  }
  return corpus;
}

FilterResult filter_zero_scores(Corpus corpus) {
  FilterResult result;
  result.kept.samples.reserve(corpus.samples.size());
  for (auto& s : corpus.samples) {
    if (!s.raw_scores.empty() && mean_of(s.raw_scores) == 0.0) {
      ++result.removed;
      continue;
    }
    result.kept.samples.push_back(std::move(s));
  }
  return result;
}

double mean_of(const std::vector<RawScore>& scores) {
  if (scores.empty()) throw Error("cannot aggregate a sample with no raw scores");
  double sum = 0.0;
  for (const auto& r : scores) sum += r.score;
  return sum / static_cast<double>(scores.size());
}

double vote_of(const std::vector<RawScore>& scores, std::uint64_t seed,
               const std::string& sample_id) {
  if (scores.empty()) throw Error("cannot aggregate a sample with no raw scores");
  std::map<double, std::size_t> counts;
  for (const auto& r : scores) ++counts[r.score];
  std::size_t best = 0;
  for (const auto& [v, c] : counts) best = std::max(best, c);
  std::vector<double> tied;
  for (const auto& [v, c] : counts)
    if (c == best) tied.push_back(v);
  if (tied.size() == 1) return tied.front();
  Rng rng(mix_seed(seed, fnv1a64(sample_id)));
  return tied[uniform_index(rng, tied.size())];
}

AggregatedScore aggregate(const CaptionSample& sample, std::uint64_t tie_seed) {
  if (sample.raw_scores.empty())
    throw Error("sample '" + sample.sample_id + "' has no raw scores");
  AggregatedScore a;
  a.sample_id = sample.sample_id;
  a.mean_score = mean_of(sample.raw_scores);
  a.vote_score = vote_of(sample.raw_scores, tie_seed, sample.sample_id);
  a.n_raw = sample.raw_scores.size();
  return a;
}

std::vector<AggregatedScore> aggregate(const Corpus& corpus, std::uint64_t tie_seed) {
  std::vector<AggregatedScore> out;
  out.reserve(corpus.samples.size());
  for (const auto& s : corpus.samples) out.push_back(aggregate(s, tie_seed));
  return out;
}

std::map<std::string, double> aggregate_map(const Corpus& corpus, AggregationMethod method,
                                            std::uint64_t tie_seed) {
  std::map<std::string, double> out;
  for (const auto& s : corpus.samples) out[s.sample_id] = aggregate(s, tie_seed).value(method);
  return out;
}

SplitSpec own_data_split(std::uint64_t seed) {
  // 240 train / 360 test on 600 samples
  return SplitSpec{0.4, seed, SplitGrouping::kPerSample};
}

SplitSpec external_data_split(std::uint64_t seed) {
  return SplitSpec{0.7, seed, SplitGrouping::kPerSample};
}

SplitResult split(const Corpus& corpus, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw Error("train fraction must lie in (0,1)");
  const std::size_t n = corpus.samples.size();

  // groups of sample indices; one group per sample or per image
  std::vector<std::vector<std::size_t>> groups;
  if (spec.grouping == SplitGrouping::kPerSample) {
    groups.reserve(n);
    for (std::size_t i = 0; i < n; ++i) groups.push_back({i});
  } else {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, inserted] = index.emplace(corpus.samples[i].image_id, groups.size());
      if (inserted) groups.emplace_back();
      groups[it->second].push_back(i);
    }
  }
  if (groups.size() < 2) throw Error("corpus too small to split");

  const auto target = static_cast<std::size_t>(std::floor(spec.train_fraction * n + 0.5));
  if (target == 0 || target >= n) throw Error("corpus too small to honor train fraction");

  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(spec.seed, 0x73706c6974ULL));
  shuffle(std::span<std::size_t>(order), rng);

  std::vector<bool> in_train(n, false);
  std::size_t taken = 0;
  for (std::size_t g : order) {
    const std::size_t sz = groups[g].size();
    if (taken >= target) break;
    // take the group when that lands closer to the target than stopping
    if (taken + sz > target && (taken + sz - target) > (target - taken)) continue;
    for (std::size_t i : groups[g]) in_train[i] = true;
    taken += sz;
  }
  if (taken == 0 || taken == n) throw Error("corpus too small to honor train fraction");

  SplitResult result;
  for (std::size_t i = 0; i < n; ++i)
    (in_train[i] ? result.train : result.test).samples.push_back(corpus.samples[i]);
  return result;
}

}  // namespace vcreval::corpus
