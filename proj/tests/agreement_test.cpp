#include <gtest/gtest.h>

#include <random>

#include "stats_oracle.hpp"
#include "vcreval/agreement.hpp"
#include "vcreval/error.hpp"

namespace ag = vcreval::agreement;

namespace {

ag::RatingMatrix two_raters(const std::vector<double>& a, const std::vector<double>& b, ag::Level level) {
  ag::RatingMatrix m;
  m.level = level;
  for (std::size_t i = 0; i < a.size(); ++i) m.cells.push_back({a[i], b[i]});
  return m;
}

oracle::AlphaLevel to_oracle(ag::Level l) {
  switch (l) {
    case ag::Level::kNominal:
      return oracle::AlphaLevel::kNominal;
    case ag::Level::kOrdinal:
      return oracle::AlphaLevel::kOrdinal;
    case ag::Level::kInterval:
      break;
  }
  return oracle::AlphaLevel::kInterval;
}

}  // namespace

TEST(Alpha, HandNominalCase) {
  const auto parts = ag::krippendorff_parts(two_raters({0, 0, 1}, {0, 1, 1}, ag::Level::kNominal));
  EXPECT_NEAR(parts.observed, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(parts.expected, 0.6, 1e-12);
  EXPECT_NEAR(parts.alpha, 0.4444, 1e-4);
  EXPECT_NEAR(parts.alpha, 4.0 / 9.0, 1e-12);
}

TEST(Alpha, PerfectAgreement) {
  EXPECT_DOUBLE_EQ(ag::krippendorff_alpha(two_raters({0, 0.5, 1}, {0, 0.5, 1}, ag::Level::kInterval)), 1.0);
}

TEST(Alpha, DegenerateCases) {
  EXPECT_THROW(ag::krippendorff_alpha(two_raters({1, 1}, {1, 1}, ag::Level::kInterval)),
               vcreval::DegenerateError);
  ag::RatingMatrix lonely;
  lonely.cells = {{1.0, std::nullopt}, {std::nullopt, 0.0}};
  EXPECT_THROW(ag::krippendorff_alpha(lonely), vcreval::Error);
}

TEST(Alpha, MatchesPairwiseOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 150; ++trial) {
    ag::RatingMatrix m;
    m.level = static_cast<ag::Level>(trial % 3);
    const std::size_t units = 2 + rng() % 20, raters = 2 + rng() % 4, values = 2 + rng() % 5;
    for (std::size_t u = 0; u < units; ++u) {
      std::vector<std::optional<double>> row;
      for (std::size_t r = 0; r < raters; ++r) {
        if (rng() % 5 == 0)
          row.push_back(std::nullopt);
        else
          row.push_back(static_cast<double>(rng() % values) * 0.25);
      }
      m.cells.push_back(row);
    }
    double want;
    try {
      want = oracle::alpha(m.cells, to_oracle(m.level));
    } catch (const std::exception&) {
      EXPECT_THROW(ag::krippendorff_alpha(m), vcreval::Error) << trial;
      continue;
    }
    EXPECT_NEAR(ag::krippendorff_alpha(m), want, 1e-9) << trial;
  }
}

TEST(Tau, Examples) {
  const std::vector<double> x{1, 2, 3}, y{1, 3, 2};
  const auto c = ag::kendall_counts(x, y);
  EXPECT_EQ(c.concordant_minus_discordant, 1.0);
  EXPECT_EQ(c.pairs, 3.0);
  EXPECT_NEAR(ag::kendall_tau(x, y), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(ag::kendall_tau(x, x), 1.0);
  EXPECT_EQ(ag::kendall_tau(x, std::vector<double>{3, 2, 1}), -1.0);
}

TEST(Tau, TauBReachesOneWithTies) {
  const std::vector<double> x{0.5, 0.5, 1, 0.25};
  EXPECT_LT(ag::kendall_tau(x, x, ag::TauVariant::kA), 1.0);
  EXPECT_DOUBLE_EQ(ag::kendall_tau(x, x, ag::TauVariant::kB), 1.0);
}

TEST(Tau, MatchesPairEnumeration) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 40, values = 2 + rng() % 8;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng() % values);
      y[i] = static_cast<double>(rng() % values);
    }
    EXPECT_NEAR(ag::kendall_tau(x, y, ag::TauVariant::kA), oracle::tau_a(x, y), 1e-12) << trial;
    const auto pc = oracle::count_pairs(x, y);
    if (pc.concordant + pc.discordant + pc.tied_y_only == 0 || pc.concordant + pc.discordant + pc.tied_x_only == 0)
      continue;
    EXPECT_NEAR(ag::kendall_tau(x, y, ag::TauVariant::kB), oracle::tau_b(x, y), 1e-12) << trial;
  }
}

TEST(Spearman, Examples) {
  EXPECT_NEAR(ag::spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(ag::spearman_rho(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 4, 9, 16}), 1.0);
  EXPECT_DOUBLE_EQ(ag::spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0);
  EXPECT_EQ(ag::rank_average(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Spearman, MatchesMidRankPearson) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 30;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng() % (trial % 2 ? 5 : 1000));
      y[i] = static_cast<double>(rng() % (trial % 2 ? 5 : 1000));
    }
    bool constant_x = true, constant_y = true;
    for (std::size_t i = 1; i < n; ++i) {
      constant_x = constant_x && x[i] == x[0];
      constant_y = constant_y && y[i] == y[0];
    }
    if (constant_x || constant_y) continue;
    EXPECT_NEAR(ag::spearman_rho(x, y), oracle::spearman(x, y), 1e-9) << trial;
  }
}

TEST(Spearman, Antisymmetry) {
  const std::vector<double> x{0.1, 0.9, 0.4, 0.7, 0.3}, y{1, 5, 2, 3, 4};
  std::vector<double> neg;
  for (double v : y) neg.push_back(-v);
  EXPECT_NEAR(ag::spearman_rho(x, neg), -ag::spearman_rho(x, y), 1e-15);
  EXPECT_NEAR(ag::kendall_tau(x, neg), -ag::kendall_tau(x, y), 1e-15);
}
