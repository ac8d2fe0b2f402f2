#include "vcreval/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "vcreval/error.hpp"

namespace vcreval::agreement {

AlphaParts krippendorff_parts(const RatingMatrix& matrix) {
  // distinct values and their index
  std::map<double, std::size_t> index;
  for (const auto& unit : matrix.cells)
    for (const auto& v : unit)
      if (v) index.emplace(*v, 0);
  std::vector<double> values;
  for (auto& [v, i] : index) {
    i = values.size();
    values.push_back(v);
  }
  const std::size_t k = values.size();

  // coincidence matrix
  std::vector<double> o(k * k, 0.0);
  std::vector<std::size_t> present;
  for (const auto& unit : matrix.cells) {
    present.clear();
    for (const auto& v : unit)
      if (v) present.push_back(index[*v]);
    const std::size_t m = present.size();
    if (m < 2) continue;
    const double w = 1.0 / static_cast<double>(m - 1);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        if (a != b) o[present[a] * k + present[b]] += w;
  }
  std::vector<double> nc(k, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < k; ++d) nc[c] += o[c * k + d];
  const double n = std::accumulate(nc.begin(), nc.end(), 0.0);
  if (n < 2.0) throw Error("krippendorff_alpha: no pairable values");

  auto delta2 = [&](std::size_t c, std::size_t d) -> double {
    if (c == d) return 0.0;
    switch (matrix.level) {
      case Level::kNominal:
        return 1.0;
      case Level::kInterval: {
        const double diff = values[c] - values[d];
        return diff * diff;
      }
      case Level::kOrdinal: {
        const std::size_t lo = std::min(c, d), hi = std::max(c, d);
        double s = 0.0;
        for (std::size_t g = lo; g <= hi; ++g) s += nc[g];
        s -= (nc[lo] + nc[hi]) / 2.0;
        return s * s;
      }
    }
    return 0.0;
  };

  double observed = 0.0, expected = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < k; ++d) {
      const double dd = delta2(c, d);
      observed += o[c * k + d] * dd;
      expected += nc[c] * nc[d] * dd;
    }
  AlphaParts parts;
  parts.pairable = n;
  parts.observed = observed / n;
  parts.expected = expected / (n * (n - 1.0));
  if (parts.expected == 0.0)
    throw DegenerateError("krippendorff_alpha: expected disagreement is zero");
  parts.alpha = parts.observed == 0.0 ? 1.0 : 1.0 - parts.observed / parts.expected;
  return parts;
}

double krippendorff_alpha(const RatingMatrix& matrix) { return krippendorff_parts(matrix).alpha; }

namespace {

void check_paired(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("paired series differ in length");
  if (x.size() < 2) throw Error("paired series need at least 2 observations");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw Error("non-finite value in series");
}

// pairs tied within runs of equal values of an already sorted sequence
double tied_pairs(const std::vector<double>& sorted) {
  double ties = 0.0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      ties += static_cast<double>(run) * static_cast<double>(run - 1) / 2.0;
      run = 1;
    }
  }
  return ties;
}

// sorts v ascending, returning the number of inversions removed
std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                          std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, out = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[out++] = v[j++];
    } else {
      buf[out++] = v[i++];
    }
  }
  while (i < mid) buf[out++] = v[i++];
  while (j < hi) buf[out++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

TauCounts kendall_counts(std::span<const double> x, std::span<const double> y) {
  check_paired(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  const double tx = tied_pairs(xs);
  double txy = 0.0;
  {
    std::size_t run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i < n && xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
        ++run;
      } else {
        txy += static_cast<double>(run) * static_cast<double>(run - 1) / 2.0;
        run = 1;
      }
    }
  }
  std::vector<double> buf(n);
  const double discordant = static_cast<double>(merge_count(ys, buf, 0, n));
  const double ty = tied_pairs(ys);  // ys is sorted now

  TauCounts c;
  c.pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  c.ties_x = tx;
  c.ties_y = ty;
  c.concordant_minus_discordant = c.pairs - tx - ty + txy - 2.0 * discordant;
  return c;
}

double kendall_tau(std::span<const double> x, std::span<const double> y, TauVariant variant) {
  const TauCounts c = kendall_counts(x, y);
  if (variant == TauVariant::kA) return c.concordant_minus_discordant / c.pairs;
  const double denom = std::sqrt((c.pairs - c.ties_x) * (c.pairs - c.ties_y));
  if (denom == 0.0) throw DegenerateError("kendall_tau: a series is constant");
  return c.concordant_minus_discordant / denom;
}

std::vector<double> rank_average(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 share the mean of ranks i+1..j
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_paired(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateError("correlation: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  check_paired(x, y);
  const std::vector<double> rx = rank_average(x);
  const std::vector<double> ry = rank_average(y);
  auto has_ties = [](std::span<const double> v) {
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) != s.end();
  };
  if (has_ties(x) || has_ties(y)) return pearson(rx, ry);
  const double n = static_cast<double>(x.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace vcreval::agreement
