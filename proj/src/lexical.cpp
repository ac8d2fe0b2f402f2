#include <cmath>
#include <limits>

#include "vcreval/error.hpp"
#include "vcreval/lexical.hpp"

namespace vcreval::lexical {

namespace {

struct BleuStats {
  std::size_t matches[4] = {0, 0, 0, 0};
  std::size_t totals[4] = {0, 0, 0, 0};
  std::size_t candidate_len = 0;
  std::size_t reference_len = 0;
};

// Reference length closest to the candidate length; ties go to the shorter.
std::size_t closest_ref_length(std::size_t cand_len, const std::vector<TokenSeq>& refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [&](std::size_t len) {
      return len > cand_len ? len - cand_len : cand_len - len;
    };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  return best;
}

BleuStats bleu_stats(const TokenSeq& candidate, const std::vector<TokenSeq>& references) {
  BleuStats st;
  st.candidate_len = candidate.size();
  st.reference_len = closest_ref_length(candidate.size(), references);
  for (std::size_t n = 1; n <= 4; ++n) {
    const NGramCounts cand = ngram_counts(candidate, n);
    NGramCounts max_ref;
    for (const auto& r : references)
      for (const auto& [g, c] : ngram_counts(r, n)) {
        auto& slot = max_ref[g];
        slot = std::max(slot, c);
      }
    for (const auto& [g, c] : cand) {
      st.totals[n - 1] += c;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) st.matches[n - 1] += std::min(c, it->second);
    }
  }
  return st;
}

double bleu_from_stats(const BleuStats& st, const BleuOptions& options) {
  if (st.candidate_len == 0 || st.matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    const double num = st.matches[n] > 0 ? static_cast<double>(st.matches[n]) : options.epsilon;
    // a candidate shorter than n has no n-grams; treat the order as unmatched
    const double den = st.totals[n] > 0 ? static_cast<double>(st.totals[n]) : 1.0;
    log_sum += std::log(num / den);
  }
  double bp = 1.0;
  if (st.candidate_len < st.reference_len)
    bp = std::exp(1.0 - static_cast<double>(st.reference_len) /
                            static_cast<double>(st.candidate_len));
  return bp * std::exp(log_sum / 4.0);
}

}  // namespace

double bleu4(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
             const BleuOptions& options) {
  if (references.empty()) throw Error("bleu4 needs at least one reference");
  if (candidate.empty()) return 0.0;
  return bleu_from_stats(bleu_stats(candidate, references), options);
}

double corpus_bleu4(const std::vector<TokenSeq>& candidates,
                    const std::vector<std::vector<TokenSeq>>& references,
                    const BleuOptions& options) {
  if (candidates.size() != references.size())
    throw Error("corpus_bleu4: candidate and reference counts differ");
  BleuStats total;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) throw Error("bleu4 needs at least one reference");
    const BleuStats st = bleu_stats(candidates[i], references[i]);
    for (std::size_t n = 0; n < 4; ++n) {
      total.matches[n] += st.matches[n];
      total.totals[n] += st.totals[n];
    }
    total.candidate_len += st.candidate_len;
    total.reference_len += st.reference_len;
  }
  return bleu_from_stats(total, options);
}

double rouge_l_from_lcs(std::size_t lcs, std::size_t candidate_len, std::size_t reference_len,
                        double beta) {
  if (lcs == 0 || candidate_len == 0 || reference_len == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(candidate_len);
  const double r = static_cast<double>(lcs) / static_cast<double>(reference_len);
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

double rouge_l(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
               const RougeOptions& options) {
  if (references.empty()) throw Error("rouge_l needs at least one reference");
  if (candidate.empty()) return 0.0;
  double best = 0.0;
  for (const auto& ref : references) {
    const std::size_t lcs =
        lcs_length<std::string>(std::span<const std::string>(candidate),
                                std::span<const std::string>(ref));
    best = std::max(best, rouge_l_from_lcs(lcs, candidate.size(), ref.size(), options.beta));
  }
  return best;
}

}  // namespace vcreval::lexical
