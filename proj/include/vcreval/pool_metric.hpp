#pragma once

// Word pool per image (reference tokens plus object-detector labels) and the
// pool-based precision / recall of a candidate caption.

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vcreval/lexical.hpp"

namespace vcreval::pool {

struct WordPool {
  std::string image_id;
  std::set<std::string> words;

  bool empty() const noexcept { return words.empty(); }
  std::size_t size() const noexcept { return words.size(); }
};

struct DetectionLabels {
  std::string image_id;
  // detector name -> labels as written by that detector
  std::map<std::string, std::vector<std::string>> by_detector;

  std::vector<std::string> all_labels() const;
};

// image_id -> labels from every detector seen for that image
using DetectionIndex = std::map<std::string, DetectionLabels>;

// Lines of {"image_id", "detector", "labels": [...]}; a {"header": ...} line
// is skipped. Several lines for one image (one per detector) are merged.
DetectionIndex read_detections(std::istream& in);
DetectionIndex load_detections(const std::string& path);
void write_detections(std::ostream& out, const DetectionIndex& index);

struct PoolOptions {
  bool remove_stopwords = false;
};

// Multi-word labels ("sports ball") contribute each of their tokens.
WordPool build_pool(const std::string& image_id,
                    const std::vector<lexical::TokenSeq>& references,
                    const DetectionLabels* detections, const PoolOptions& options = {});

struct PrecisionRecall {
  std::size_t overlap = 0;  // r: unique candidate words found in the pool
  std::size_t candidate_unique = 0;
  std::size_t pool_size = 0;
  double precision = 0.0;
  double recall = 0.0;
};

// Unique-set semantics on the candidate. Both values in [0,1].
PrecisionRecall precision_recall(const lexical::TokenSeq& candidate, const WordPool& pool,
                                 const PoolOptions& options = {});

// The percentage form (values times 100) for display.
inline double as_percent(double v) { return v * 100.0; }

bool is_stopword(const std::string& token);

}  // namespace vcreval::pool
