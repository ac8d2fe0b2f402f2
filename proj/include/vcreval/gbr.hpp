#pragma once

// Gradient-boosted regression trees with squared-error loss.
//
// Each stage fits a depth-limited least-squares tree to the current
// residuals and adds it scaled by the learning rate:
//
//   F_0(x)  = mean(y)
//   F_m(x)  = F_{m-1}(x) + eta * tree_m(x)
//
// Split thresholds are midpoints between consecutive distinct feature values
// of the rows reaching a node; rows with x <= threshold go left. Ties in the
// split objective (within a relative 1e-12) go to the lowest feature index,
// then the lowest threshold.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vcreval/error.hpp"

namespace vcreval::gbr {

// Dense row-major feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  void append_row(std::span<const double> values);
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;  // leaf output
  int left = -1;
  int right = -1;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct TrainConfig {
  std::size_t n_estimators = 500;
  double learning_rate = 0.05;
  std::size_t max_depth = 3;
  std::size_t min_samples_leaf = 5;
  double subsample = 1.0;
  std::uint64_t seed = 0;
  // Early stopping is off unless validation_fraction > 0. Training stops
  // after n_iter_no_change stages without validation improvement and the
  // ensemble is truncated to the best stage.
  double validation_fraction = 0.0;
  std::size_t n_iter_no_change = 10;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct BoostedEnsemble {
  double init = 0.0;
  double learning_rate = 1.0;
  std::size_t n_features = 0;
  std::vector<RegressionTree> trees;
  TrainConfig config;
  std::string loss = "squared_error";
  // training MSE after F_0 and after each stage (size trees + 1)
  std::vector<double> train_mse;

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const FeatureMatrix& X) const;
};

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double sse = 0.0;  // summed squared error of the two children
  std::size_t left_count = 0;
};

// Best split of `rows` over all features, each child keeping at least
// min_samples_leaf rows. Exposed for testing against brute force.
SplitChoice best_split(const FeatureMatrix& X, std::span<const double> target,
                       std::span<const std::size_t> rows, std::size_t min_samples_leaf);

// True when `a` should replace incumbent `b` as the minimum.
bool improves(double a, double b);

RegressionTree fit_tree(const FeatureMatrix& X, std::span<const double> target,
                        std::span<const std::size_t> rows, std::size_t max_depth,
                        std::size_t min_samples_leaf);

BoostedEnsemble fit(const FeatureMatrix& X, std::span<const double> y, const TrainConfig& config);

// Versioned JSON text. Reals are written in shortest round-trip form so
// thresholds and leaf values reload bit-exactly.
inline constexpr int kModelVersion = 1;

class VersionError : public Error {
 public:
  using Error::Error;
};

std::string serialize(const BoostedEnsemble& ensemble);
BoostedEnsemble load(const std::string& payload);

}  // namespace vcreval::gbr
