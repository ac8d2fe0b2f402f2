#pragma once

// Tokenization and the n-gram / subsequence caption metrics.

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vcreval::lexical {

using TokenSeq = std::vector<std::string>;

// Lowercases ASCII letters, turns every ASCII character that is not a letter
// or digit into a separator and splits on separators. Bytes >= 0x80 (UTF-8
// continuation and lead bytes) are kept inside tokens.
TokenSeq tokenize(std::string_view text);

// Porter (1980) suffix stripper. Input is expected lowercase.
std::string porter_stem(std::string_view word);
TokenSeq stem_all(const TokenSeq& tokens);

// n-gram -> count. Keys join tokens with a single space.
using NGramCounts = std::map<std::string, std::size_t>;
NGramCounts ngram_counts(const TokenSeq& tokens, std::size_t n);

struct BleuOptions {
  // Substituted for a zero clipped count at orders 2..4 so log() is defined.
  double epsilon = 1e-9;
};

// Sentence BLEU-4: geometric mean of clipped 1..4-gram precisions times the
// brevity penalty against the closest reference length. Returns exactly 0
// when no candidate unigram matches any reference.
double bleu4(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
             const BleuOptions& options = {});

// Corpus BLEU-4: counts and lengths summed over all segments first.
double corpus_bleu4(const std::vector<TokenSeq>& candidates,
                    const std::vector<std::vector<TokenSeq>>& references,
                    const BleuOptions& options = {});

// Length of the longest common subsequence, two-row dynamic programme.
template <typename T>
std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
  if (a.empty() || b.empty()) return 0;
  if (a.size() < b.size()) std::swap(a, b);
  constexpr std::size_t kInline = 64;
  std::size_t inline_buf[2 * (kInline + 1)];
  std::vector<std::size_t> heap_buf;
  std::size_t* prev;
  std::size_t* cur;
  if (b.size() <= kInline) {
    prev = inline_buf;
    cur = inline_buf + kInline + 1;
  } else {
    heap_buf.resize(2 * (b.size() + 1));
    prev = heap_buf.data();
    cur = heap_buf.data() + b.size() + 1;
  }
  std::fill(prev, prev + b.size() + 1, std::size_t{0});
  cur[0] = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j)
      cur[j + 1] = a[i] == b[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct RougeOptions {
  double beta = 1.2;
};

// ROUGE-L F-measure against each reference, maximum over references.
double rouge_l(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
               const RougeOptions& options = {});

// F-measure from an LCS length and the two sequence lengths.
double rouge_l_from_lcs(std::size_t lcs, std::size_t candidate_len, std::size_t reference_len,
                        double beta);

// One aligned unigram pair (candidate index, reference index).
struct AlignedPair {
  std::size_t candidate = 0;
  std::size_t reference = 0;
  bool exact = false;

  friend bool operator==(const AlignedPair&, const AlignedPair&) = default;
};

struct MeteorAlignment {
  std::vector<AlignedPair> pairs;  // sorted by candidate index
  std::size_t exact_matches = 0;
  std::size_t stem_matches = 0;
  std::size_t chunks = 0;
  // false when the chunk search hit its node budget and kept the best
  // alignment found so far
  bool optimal = true;
};

// Counts maximal runs of pairs contiguous in both sequences.
std::size_t count_chunks(std::span<const AlignedPair> pairs_sorted_by_candidate);

// Exact matches first, then Porter-stem matches among the rest; among all
// alignments achieving those match counts, one with the fewest chunks.
MeteorAlignment meteor_align(const TokenSeq& candidate, const TokenSeq& reference,
                             std::size_t node_budget = 200000);

struct MeteorOptions {
  double alpha = 0.9;   // Fmean = PR / (alpha P + (1-alpha) R)  -> 10PR/(R+9P)
  double gamma = 0.5;   // penalty weight
  double beta = 3.0;    // penalty exponent
};

double meteor_from_alignment(std::size_t matches, std::size_t chunks, std::size_t candidate_len,
                             std::size_t reference_len, const MeteorOptions& options = {});

// Reduced METEOR (exact + stem stages, no synonym tables), max over refs.
double meteor(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
              const MeteorOptions& options = {});

struct CiderResult {
  std::vector<double> scores;
  // Set when the corpus has fewer than two reference sets; every idf is then
  // zero and all scores are reported as 0.
  bool degenerate = false;
};

// Base CIDEr over a corpus: stemmed tokens, tf-idf vectors per order 1..4
// with document frequencies over each sample's reference set, mean cosine
// over references, uniform order weights, times 10.
CiderResult cider(const std::vector<TokenSeq>& candidates,
                  const std::vector<std::vector<TokenSeq>>& references);

}  // namespace vcreval::lexical
