#include "vcreval/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "vcreval/error.hpp"
#include "vcreval/random.hpp"
#include "vcreval/vcrscore.hpp"

namespace vcreval::synthetic {

namespace {

constexpr std::size_t kVocabulary = 400;
constexpr std::size_t kTopicWords = 14;

std::vector<std::string> make_vocabulary(Rng& rng) {
  static const char* const kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p",
                                        "r", "s", "t", "v", "z", "br", "st", "tr", "pl"};
  static const char* const kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::set<std::string> seen;
  std::vector<std::string> words;
  while (words.size() < kVocabulary) {
    std::string w;
    const std::size_t syllables = 2 + uniform_index(rng, 2);
    for (std::size_t s = 0; s < syllables; ++s) {
      w += kOnsets[uniform_index(rng, std::size(kOnsets))];
      w += kVowels[uniform_index(rng, std::size(kVowels))];
    }
    if (seen.insert(w).second) words.push_back(w);
  }
  return words;
}

std::vector<double> unit_normal(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = standard_normal(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

// unit vector orthogonal to u
std::vector<double> orthogonal_to(Rng& rng, const std::vector<double>& u) {
  while (true) {
    auto v = unit_normal(rng, u.size());
    const double d = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
    double norm = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] -= d * u[i];
      norm += v[i] * v[i];
    }
    if (norm < 1e-12) continue;
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
  }
}

std::vector<double> mix(const std::vector<std::pair<double, const std::vector<double>*>>& terms) {
  std::vector<double> out(terms.front().second->size(), 0.0);
  for (const auto& [w, v] : terms)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * (*v)[i];
  return out;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double quarter(double v) { return std::round(clamp01(v) * 4.0) / 4.0; }

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

class WordVectors {
 public:
  WordVectors(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {}

  void add_rows(embed::EmbeddingTable& table, const std::string& id, const std::string& text) {
    for (const auto& tok : lexical::tokenize(text)) {
      Rng rng(mix_seed(seed_, fnv1a64(tok)));
      table.add(id, unit_normal(rng, dim_));
    }
  }

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

struct FamilyNoise {
  double image_weight;  // weight of the image direction at quality 1
  double text_weight;   // weight of the caption-semantics direction at quality 1
  double quality_sd;    // jitter on the quality the encoder "sees"
};

}  // namespace

Fixture make_fixture(const FixtureOptions& o) {
  const auto& models = fixture_models();
  static const double kModelQuality[] = {0.85, 0.80, 0.72, 0.55, 0.42, 0.30};
  static const char* const kFunctionWords[] = {"a", "the", "of", "on", "with", "in"};

  Rng rng(mix_seed(o.seed, 0x666978));
  const auto vocab = make_vocabulary(rng);

  Fixture f;
  f.clip_images = embed::EmbeddingTable(embed::EmbeddingKind::kImage, o.clip_dim);
  f.mcip_images = embed::EmbeddingTable(embed::EmbeddingKind::kImage, o.clip_dim);
  f.clip_captions = embed::EmbeddingTable(embed::EmbeddingKind::kCaption, o.clip_dim);
  f.mcip_captions = embed::EmbeddingTable(embed::EmbeddingKind::kCaption, o.clip_dim);
  f.tokens = embed::EmbeddingTable(embed::EmbeddingKind::kTokens, o.token_dim);
  f.vilt.name = "vilt";
  f.bertgrammar.name = "bertgrammar";
  WordVectors word_vectors(mix_seed(o.seed, 0x746f6b), o.token_dim);

  const FamilyNoise clip_noise{0.34, 0.55, 0.20};
  const FamilyNoise mcip_noise{0.40, 0.80, 0.08};

  std::vector<double> quality;
  for (std::size_t img = 0; img < o.images; ++img) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img%03zu", img);
    const std::string image_id = buf;

    // topic vocabulary and references
    std::vector<std::size_t> order(vocab.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(std::span<std::size_t>(order), rng);
    std::vector<std::string> topic, off_topic;
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < kTopicWords ? topic : off_topic).push_back(vocab[order[i]]);

    std::vector<std::string> references;
    for (std::size_t k = 0; k < o.references_per_image; ++k) {
      std::vector<std::string> words = {"a"};
      const std::size_t len = 6 + uniform_index(rng, 4);
      for (std::size_t w = 0; w < len; ++w) {
        words.push_back(topic[uniform_index(rng, topic.size())]);
        if (w == len / 2) words.push_back(kFunctionWords[1 + uniform_index(rng, 5)]);
      }
      references.push_back(join_words(words));
    }

    pool::DetectionLabels det;
    det.image_id = image_id;
    det.by_detector["detr"] = {topic[0], topic[1] + " " + topic[2]};
    det.by_detector["yolo"] = {topic[3], off_topic[uniform_index(rng, off_topic.size())]};
    f.detections.emplace(image_id, det);

    // embeddings per family
    struct Family {
      embed::EmbeddingTable* images;
      embed::EmbeddingTable* captions;
      FamilyNoise noise;
      std::vector<double> u, s;
    };
    std::vector<Family> families = {{&f.clip_images, &f.clip_captions, clip_noise, {}, {}},
                                    {&f.mcip_images, &f.mcip_captions, mcip_noise, {}, {}}};
    for (auto& fam : families) {
      fam.u = unit_normal(rng, o.clip_dim);
      fam.s = orthogonal_to(rng, fam.u);
      fam.images->add(image_id, fam.u);
      for (std::size_t k = 0; k < references.size(); ++k) {
        const auto z = unit_normal(rng, o.clip_dim);
        fam.captions->add(image_id + "#ref" + std::to_string(k),
                          mix({{0.35, &fam.u}, {0.85, &fam.s}, {0.25, &z}}));
      }
    }
    for (std::size_t k = 0; k < references.size(); ++k)
      word_vectors.add_rows(f.tokens, image_id + "#ref" + std::to_string(k), references[k]);

    for (std::size_t m = 0; m < models.size(); ++m) {
      const double q = std::clamp(kModelQuality[m] + 0.15 * standard_normal(rng), 0.02, 0.98);
      quality.push_back(q);

      std::vector<std::string> words = {"a"};
      const std::size_t len = 5 + uniform_index(rng, 5);
      for (std::size_t w = 0; w < len; ++w) {
        if (uniform_real(rng) < q)
          words.push_back(topic[uniform_index(rng, topic.size())]);
        else
          words.push_back(off_topic[uniform_index(rng, off_topic.size())]);
        if (w == len / 2) words.push_back(kFunctionWords[1 + uniform_index(rng, 5)]);
      }

      corpus::CaptionSample s;
      s.sample_id = image_id + "_" + models[m];
      s.image_id = image_id;
      s.model_id = models[m];
      s.candidate = join_words(words);
      s.references = references;
      s.source = corpus::kSourceOwn;

      for (auto& fam : families) {
        const double seen = clamp01(q + fam.noise.quality_sd * standard_normal(rng));
        const auto z = unit_normal(rng, o.clip_dim);
        const double noise = std::sqrt(std::max(0.05, 1.0 - seen * seen));
        fam.captions->add(s.sample_id, mix({{fam.noise.image_weight * seen, &fam.u},
                                            {fam.noise.text_weight * seen, &fam.s},
                                            {noise, &z}}));
      }
      word_vectors.add_rows(f.tokens, s.sample_id, s.candidate);
      f.vilt.values[s.sample_id] = clamp01(q + 0.12 * standard_normal(rng));
      f.bertgrammar.values[s.sample_id] = clamp01(0.7 + 0.2 * q + 0.1 * standard_normal(rng));
      f.corpus.samples.push_back(std::move(s));
    }
  }

  // human scores from the computed features
  std::map<std::string, std::vector<const corpus::CaptionSample*>> by_image;
  for (const auto& s : f.corpus.samples) by_image[s.image_id].push_back(&s);
  const vcr::EmbeddingFamily mcip{&f.mcip_images, &f.mcip_captions, embed::kClipWeight};
  for (auto& s : f.corpus.samples) {
    const auto pool_words = vcr::image_pool(s.image_id, by_image.at(s.image_id), f.detections);
    const auto pr = pool::precision_recall(lexical::tokenize(s.candidate), pool_words);
    const double mcip_ref = vcr::clip_family_score(vcr::ClipSource::kMcipScoreRef, mcip, s);
    const double g = clamp01(0.3 * pr.precision + 0.2 * std::min(1.0, 4.0 * pr.recall) +
                             0.25 * f.vilt.values.at(s.sample_id) + 0.25 * mcip_ref +
                             o.target_noise * standard_normal(rng));
    for (std::size_t t = 0; t < o.taggers; ++t)
      for (std::size_t p = 0; p < o.phases; ++p)
        s.raw_scores.push_back({"tagger" + std::to_string(t + 1), static_cast<int>(p + 1),
                                quarter(g + o.tagger_noise * standard_normal(rng))});
  }
  return f;
}

corpus::Corpus make_external_corpus(const ExternalOptions& o) {
  struct Source {
    const char* tag;
    std::size_t count;
  };
  const Source sources[] = {{corpus::kSourceVicr, o.vicr},
                            {corpus::kSourceFlickrExpert, o.flickr_expert},
                            {corpus::kSourceFlickrCf, o.flickr_cf},
                            {corpus::kSourceComposite, o.composite}};
  std::size_t total = 0;
  for (const auto& src : sources) total += src.count;
  if (o.zero_rows > total) throw Error("more zero rows requested than samples");

  Rng rng(mix_seed(o.seed, 0x657874));
  std::vector<char> zero(total, 0);
  std::fill(zero.begin(), zero.begin() + static_cast<std::ptrdiff_t>(o.zero_rows), 1);
  shuffle(std::span<char>(zero), rng);

  corpus::Corpus c;
  c.samples.reserve(total);
  std::size_t row = 0;
  for (const auto& src : sources) {
    const std::string tag = src.tag;
    for (std::size_t i = 0; i < src.count; ++i, ++row) {
      corpus::CaptionSample s;
      s.sample_id = tag + "-" + std::to_string(i);
      s.image_id = tag + "-img" + std::to_string(i / 3);
      s.model_id = "external";
      s.candidate = "a caption";
      s.references = {"a reference caption"};
      s.source = tag;
      const bool z = zero[row] != 0;
      if (tag == corpus::kSourceVicr) {
        s.raw_scores.push_back({"crowd", 1, z ? 1.0 : 2.0 + static_cast<double>(uniform_index(rng, 4))});
      } else if (tag == corpus::kSourceFlickrExpert) {
        for (int e = 0; e < 3; ++e) s.raw_scores.push_back({"expert" + std::to_string(e + 1), 1, 1.0});
        if (!z) s.raw_scores[uniform_index(rng, 3)].score = 2.0 + static_cast<double>(uniform_index(rng, 3));
      } else if (tag == corpus::kSourceFlickrCf) {
        s.raw_scores.push_back({"crowdflower", 1, z ? 0.0 : static_cast<double>(1 + uniform_index(rng, 3)) / 3.0});
      } else {
        s.raw_scores.push_back({corpus::kCompositeRelevance, 1, 1.0});
        s.raw_scores.push_back({corpus::kCompositeThoroughness, 1, 1.0});
        if (!z) s.raw_scores[uniform_index(rng, 2)].score = 2.0 + static_cast<double>(uniform_index(rng, 4));
      }
      c.samples.push_back(std::move(s));
    }
  }
  return c;
}

}  // namespace vcreval::synthetic
