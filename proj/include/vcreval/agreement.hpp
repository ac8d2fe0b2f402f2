#pragma once

// Inter-rater agreement (Krippendorff's alpha) and rank correlation
// (Kendall's tau, Spearman's rho).

#include <optional>
#include <span>
#include <vector>

namespace vcreval::agreement {

enum class Level { kNominal, kOrdinal, kInterval };

// units x raters; a missing cell is std::nullopt.
struct RatingMatrix {
  std::vector<std::vector<std::optional<double>>> cells;
  Level level = Level::kInterval;

  std::size_t units() const noexcept { return cells.size(); }
};

struct AlphaParts {
  double observed = 0.0;  // D_o
  double expected = 0.0;  // D_e
  double alpha = 0.0;
  double pairable = 0.0;  // n: values in units with >= 2 ratings
};

// 1 - D_o / D_e from the coincidence matrix. Throws Error when no unit has
// two ratings and DegenerateError when D_e is zero (every pairable value
// identical).
AlphaParts krippendorff_parts(const RatingMatrix& matrix);
double krippendorff_alpha(const RatingMatrix& matrix);

enum class TauVariant { kA, kB };

struct TauCounts {
  double concordant_minus_discordant = 0.0;  // C - D
  double pairs = 0.0;                        // n(n-1)/2
  double ties_x = 0.0;                       // pairs tied in x
  double ties_y = 0.0;                       // pairs tied in y
};

// O(n log n) counting (sort + merge-sort exchange count).
TauCounts kendall_counts(std::span<const double> x, std::span<const double> y);

// tau-a = (C - D) / (n(n-1)/2); tau-b divides by sqrt((m - Tx)(m - Ty)).
double kendall_tau(std::span<const double> x, std::span<const double> y,
                   TauVariant variant = TauVariant::kA);

// Mid-ranks, 1-based.
std::vector<double> rank_average(std::span<const double> values);

// 1 - 6 sum d^2 / (n(n^2-1)) when neither series has ties, Pearson
// correlation of mid-ranks otherwise (the two agree in the tie-free case).
double spearman_rho(std::span<const double> x, std::span<const double> y);

double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace vcreval::agreement
