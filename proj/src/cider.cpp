#include <cmath>
#include <set>
#include <unordered_map>

#include "vcreval/error.hpp"
#include "vcreval/lexical.hpp"

namespace vcreval::lexical {

namespace {

constexpr std::size_t kMaxOrder = 4;

using Vec = std::unordered_map<std::string, double>;

struct Profile {
  NGramCounts counts[kMaxOrder];
};

Profile profile(const TokenSeq& stemmed) {
  Profile p;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) p.counts[n - 1] = ngram_counts(stemmed, n);
  return p;
}

Vec weight(const NGramCounts& counts, const std::unordered_map<std::string, double>& df,
           double log_n) {
  Vec v;
  for (const auto& [g, c] : counts) {
    auto it = df.find(g);
    const double d = it == df.end() ? 1.0 : std::max(1.0, it->second);
    v.emplace(g, static_cast<double>(c) * (log_n - std::log(d)));
  }
  return v;
}

double norm(const Vec& v) {
  double s = 0.0;
  for (const auto& [g, x] : v) s += x * x;
  return std::sqrt(s);
}

double cosine(const Vec& a, const Vec& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  const Vec& small = a.size() < b.size() ? a : b;
  const Vec& large = a.size() < b.size() ? b : a;
  for (const auto& [g, x] : small) {
    auto it = large.find(g);
    if (it != large.end()) dot += x * it->second;
  }
  return dot / (na * nb);
}

}  // namespace

CiderResult cider(const std::vector<TokenSeq>& candidates,
                  const std::vector<std::vector<TokenSeq>>& references) {
  if (candidates.size() != references.size())
    throw Error("cider: candidate and reference counts differ");
  CiderResult result;
  result.scores.assign(candidates.size(), 0.0);
  if (candidates.size() < 2) {
    result.degenerate = true;
    return result;
  }

  std::vector<Profile> cand_profiles;
  std::vector<std::vector<Profile>> ref_profiles(references.size());
  cand_profiles.reserve(candidates.size());
  for (const auto& c : candidates) cand_profiles.push_back(profile(stem_all(c)));
  for (std::size_t i = 0; i < references.size(); ++i)
    for (const auto& r : references[i]) ref_profiles[i].push_back(profile(stem_all(r)));

  // document frequency: number of reference sets containing the n-gram
  std::unordered_map<std::string, double> df[kMaxOrder];
  for (const auto& refs : ref_profiles) {
    for (std::size_t n = 0; n < kMaxOrder; ++n) {
      std::set<std::string> seen;
      for (const auto& p : refs)
        for (const auto& [g, c] : p.counts[n]) seen.insert(g);
      for (const auto& g : seen) df[n][g] += 1.0;
    }
  }
  const double log_n = std::log(static_cast<double>(references.size()));

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (ref_profiles[i].empty()) continue;
    double total = 0.0;
    for (std::size_t n = 0; n < kMaxOrder; ++n) {
      const Vec cv = weight(cand_profiles[i].counts[n], df[n], log_n);
      double sum = 0.0;
      for (const auto& rp : ref_profiles[i]) sum += cosine(cv, weight(rp.counts[n], df[n], log_n));
      total += sum / static_cast<double>(ref_profiles[i].size());
    }
    result.scores[i] = 10.0 * total / static_cast<double>(kMaxOrder);
  }
  return result;
}

}  // namespace vcreval::lexical
