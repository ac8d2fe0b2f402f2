#include <cmath>
#include <unordered_map>

#include "vcreval/error.hpp"
#include "vcreval/lexical.hpp"

namespace vcreval::lexical {

std::size_t count_chunks(std::span<const AlignedPair> pairs) {
  std::size_t chunks = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const bool continues = k > 0 && pairs[k].candidate == pairs[k - 1].candidate + 1 &&
                           pairs[k].reference == pairs[k - 1].reference + 1;
    if (!continues) ++chunks;
  }
  return chunks;
}

namespace {

// Depth-first search over candidate positions. Each position is matched to a
// free reference position (exact word or equal stem) or left unmatched. The
// search only accepts alignments reaching the maximal exact count and the
// maximal total count, and keeps the one with fewest chunks.
class AlignmentSearch {
 public:
  AlignmentSearch(const TokenSeq& cand, const TokenSeq& ref, std::size_t budget)
      : cand_(cand), ref_(ref), cand_stem_(stem_all(cand)), ref_stem_(stem_all(ref)),
        used_(ref.size(), false), budget_(budget) {
    std::unordered_map<std::string, std::size_t> cw, rw;
    for (const auto& w : cand_) ++cw[w];
    for (const auto& w : ref_) ++rw[w];
    std::unordered_map<std::string, std::size_t> cs_rem, rs_rem;
    for (const auto& [w, c] : cw) {
      auto it = rw.find(w);
      const std::size_t r = it == rw.end() ? 0 : it->second;
      target_exact_ += std::min(c, r);
    }
    // leftovers after the exact stage, pooled by stem
    for (std::size_t i = 0; i < cand_.size(); ++i) ++cs_rem[cand_stem_[i]];
    for (std::size_t j = 0; j < ref_.size(); ++j) ++rs_rem[ref_stem_[j]];
    for (const auto& [w, c] : cw) {
      auto it = rw.find(w);
      const std::size_t m = it == rw.end() ? 0 : std::min(c, it->second);
      const std::string s = porter_stem(w);
      cs_rem[s] -= m;
      rs_rem[s] -= m;
    }
    std::size_t target_stem = 0;
    for (const auto& [s, c] : cs_rem) {
      auto it = rs_rem.find(s);
      if (it != rs_rem.end()) target_stem += std::min(c, it->second);
    }
    target_total_ = target_exact_ + target_stem;

    // suffix counts of candidate words / stems for the feasibility bounds
    suffix_word_.resize(cand_.size() + 1);
    suffix_stem_.resize(cand_.size() + 1);
    for (std::size_t i = cand_.size(); i-- > 0;) {
      suffix_word_[i] = suffix_word_[i + 1];
      ++suffix_word_[i][cand_[i]];
      suffix_stem_[i] = suffix_stem_[i + 1];
      ++suffix_stem_[i][cand_stem_[i]];
    }
    for (const auto& w : ref_) ++free_word_[w];
    for (const auto& s : ref_stem_) ++free_stem_[s];
  }

  MeteorAlignment run() {
    MeteorAlignment result;
    if (target_total_ == 0) return result;
    dfs(0, 0, 0, 0);
    result.pairs = best_pairs_;
    for (const auto& p : best_pairs_) (p.exact ? result.exact_matches : result.stem_matches) += 1;
    result.chunks = best_chunks_;
    result.optimal = !exhausted_;
    return result;
  }

 private:
  std::size_t exact_bound(std::size_t i) const {
    std::size_t b = 0;
    for (const auto& [w, c] : suffix_word_[i]) {
      auto it = free_word_.find(w);
      if (it != free_word_.end()) b += std::min(c, it->second);
    }
    return b;
  }

  std::size_t total_bound(std::size_t i) const {
    std::size_t b = 0;
    for (const auto& [s, c] : suffix_stem_[i]) {
      auto it = free_stem_.find(s);
      if (it != free_stem_.end()) b += std::min(c, it->second);
    }
    return b;
  }

  void take(std::size_t i, std::size_t j, bool exact) {
    used_[j] = true;
    --free_word_[ref_[j]];
    --free_stem_[ref_stem_[j]];
    pairs_.push_back({i, j, exact});
  }

  void release(std::size_t j) {
    used_[j] = false;
    ++free_word_[ref_[j]];
    ++free_stem_[ref_stem_[j]];
    pairs_.pop_back();
  }

  void dfs(std::size_t i, std::size_t exact, std::size_t total, std::size_t chunks) {
    if (exhausted_) return;
    if (++nodes_ > budget_ && found_) {
      exhausted_ = true;
      return;
    }
    if (found_ && chunks >= best_chunks_) return;
    if (exact + exact_bound(i) < target_exact_) return;
    if (total + total_bound(i) < target_total_) return;
    if (i == cand_.size()) {
      if (exact == target_exact_ && total == target_total_) {
        found_ = true;
        best_chunks_ = chunks;
        best_pairs_ = pairs_;
      }
      return;
    }

    const bool has_last = !pairs_.empty();
    const AlignedPair last = has_last ? pairs_.back() : AlignedPair{};
    auto continues = [&](std::size_t j) {
      return has_last && last.candidate + 1 == i && last.reference + 1 == j;
    };
    auto try_match = [&](std::size_t j) {
      const bool exact_match = ref_[j] == cand_[i];
      take(i, j, exact_match);
      dfs(i + 1, exact + (exact_match ? 1 : 0), total + 1, chunks + (continues(j) ? 0 : 1));
      release(j);
    };

    // the continuation of the current chunk first, then exact, then stem
    std::size_t cont = has_last ? last.reference + 1 : ref_.size();
    if (has_last && last.candidate + 1 == i && cont < ref_.size() && !used_[cont] &&
        ref_stem_[cont] == cand_stem_[i]) {
      try_match(cont);
    } else {
      cont = ref_.size();
    }
    for (std::size_t j = 0; j < ref_.size(); ++j)
      if (j != cont && !used_[j] && ref_[j] == cand_[i]) try_match(j);
    for (std::size_t j = 0; j < ref_.size(); ++j)
      if (j != cont && !used_[j] && ref_[j] != cand_[i] && ref_stem_[j] == cand_stem_[i])
        try_match(j);
    dfs(i + 1, exact, total, chunks);
  }

  const TokenSeq& cand_;
  const TokenSeq& ref_;
  TokenSeq cand_stem_;
  TokenSeq ref_stem_;
  std::vector<bool> used_;
  std::vector<std::unordered_map<std::string, std::size_t>> suffix_word_;
  std::vector<std::unordered_map<std::string, std::size_t>> suffix_stem_;
  std::unordered_map<std::string, std::size_t> free_word_;
  std::unordered_map<std::string, std::size_t> free_stem_;
  std::size_t target_exact_ = 0;
  std::size_t target_total_ = 0;
  std::vector<AlignedPair> pairs_;
  std::vector<AlignedPair> best_pairs_;
  std::size_t best_chunks_ = 0;
  bool found_ = false;
  bool exhausted_ = false;
  std::size_t nodes_ = 0;
  std::size_t budget_;
};

}  // namespace

MeteorAlignment meteor_align(const TokenSeq& candidate, const TokenSeq& reference,
                             std::size_t node_budget) {
  return AlignmentSearch(candidate, reference, node_budget).run();
}

double meteor_from_alignment(std::size_t matches, std::size_t chunks, std::size_t candidate_len,
                             std::size_t reference_len, const MeteorOptions& options) {
  if (matches == 0 || candidate_len == 0 || reference_len == 0) return 0.0;
  const double m = static_cast<double>(matches);
  const double p = m / static_cast<double>(candidate_len);
  const double r = m / static_cast<double>(reference_len);
  const double fmean = p * r / (options.alpha * p + (1.0 - options.alpha) * r);
  const double penalty = options.gamma * std::pow(static_cast<double>(chunks) / m, options.beta);
  return fmean * (1.0 - penalty);
}

double meteor(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
              const MeteorOptions& options) {
  if (references.empty()) throw Error("meteor needs at least one reference");
  double best = 0.0;
  for (const auto& ref : references) {
    const MeteorAlignment a = meteor_align(candidate, ref);
    const double s = meteor_from_alignment(a.exact_matches + a.stem_matches, a.chunks,
                                           candidate.size(), ref.size(), options);
    best = std::max(best, s);
  }
  return best;
}

}  // namespace vcreval::lexical
