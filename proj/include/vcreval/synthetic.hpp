#pragma once

// Seeded fixtures standing in for data that cannot ship with the code: a
// 600-sample tagged corpus with every scoring input, and an external-style
// corpus for the zero-filter protocol.

#include <cstdint>
#include <string>
#include <vector>

#include "vcreval/corpus.hpp"
#include "vcreval/embed_metrics.hpp"
#include "vcreval/pool_metric.hpp"

namespace vcreval::synthetic {

inline const std::vector<std::string>& fixture_models() {
  static const std::vector<std::string> models = {"humans", "ofa",     "blip2",
                                                  "m2",     "convcap", "saat"};
  return models;
}

struct FixtureOptions {
  std::uint64_t seed = 7;
  std::size_t images = 100;
  std::size_t references_per_image = 5;
  std::size_t taggers = 4;
  std::size_t phases = 2;
  std::size_t clip_dim = 16;
  std::size_t token_dim = 8;
  double target_noise = 0.05;  // sd added to the latent target
  double tagger_noise = 0.10;  // sd of each tagger's reading of it
};

struct Fixture {
  corpus::Corpus corpus;  // source "vcr", raw scores on the 5-point scale
  pool::DetectionIndex detections;
  embed::EmbeddingTable clip_images, clip_captions;
  embed::EmbeddingTable mcip_images, mcip_captions;
  embed::EmbeddingTable tokens;
  embed::ScoreChannel vilt;
  embed::ScoreChannel bertgrammar;
};

// images x fixture_models() samples. Each sample has a latent quality that
// drives how many candidate words come from the image's topic vocabulary,
// its ViLT value and the angle of its caption embeddings to the image. The
// taggers read a clamped noisy monotone function of precision, recall, ViLT
// and MCIPScore_ref, rounded to the nearest quarter.
Fixture make_fixture(const FixtureOptions& options = {});

// Source sizes of the external corpus and how many rows normalize to zero.
struct ExternalOptions {
  std::uint64_t seed = 11;
  std::size_t vicr = 15646;
  std::size_t flickr_expert = 5822;
  std::size_t flickr_cf = 47829;
  std::size_t composite = 11992;
  std::size_t zero_rows = 21974;
};

// Raw scores on each source's native scale; exactly zero_rows samples sit at
// the bottom of their scale.
corpus::Corpus make_external_corpus(const ExternalOptions& options = {});

}  // namespace vcreval::synthetic
