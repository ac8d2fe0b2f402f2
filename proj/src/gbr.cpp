#include "vcreval/gbr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vcreval/random.hpp"

namespace vcreval::gbr {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw Error("feature matrix data size mismatch");
}

void FeatureMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw Error("feature row has wrong width");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                         : n.right);
  }
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

void TrainConfig::validate() const {
  if (n_estimators == 0) throw Error("n_estimators must be positive");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw Error("learning_rate must lie in (0,1]");
  if (max_depth == 0) throw Error("max_depth must be positive");
  if (min_samples_leaf == 0) throw Error("min_samples_leaf must be positive");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw Error("subsample must lie in (0,1]");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw Error("validation_fraction must lie in [0,1)");
  if (validation_fraction > 0.0 && n_iter_no_change == 0)
    throw Error("n_iter_no_change must be positive when early stopping is on");
}

double BoostedEnsemble::predict(std::span<const double> x) const {
  if (x.size() != n_features)
    throw Error("predict: expected " + std::to_string(n_features) + " features, got " +
                std::to_string(x.size()));
  double f = init;
  for (const auto& t : trees) f += learning_rate * t.predict(x);
  return f;
}

std::vector<double> BoostedEnsemble::predict(const FeatureMatrix& X) const {
  if (X.cols() != n_features && X.rows() > 0)
    throw Error("predict: expected " + std::to_string(n_features) + " features, got " +
                std::to_string(X.cols()));
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict(X.row(r));
  return out;
}

bool improves(double a, double b) { return a < b - 1e-12 * std::abs(b); }

namespace {

// Split search over rows already sorted by each feature (sorted[f] lists the
// node's rows in ascending X(., f)).
SplitChoice best_split_sorted(const FeatureMatrix& X, std::span<const double> target,
                              const std::vector<std::vector<std::size_t>>& sorted,
                              std::size_t min_samples_leaf) {
  SplitChoice best;
  if (sorted.empty()) return best;
  const std::size_t n = sorted.front().size();
  if (n < 2 * min_samples_leaf || n < 2) return best;

  // center on the node mean to keep the prefix-sum SSE well conditioned
  double mean = 0.0;
  for (std::size_t r : sorted.front()) mean += target[r];
  mean /= static_cast<double>(n);

  std::vector<double> prefix_sum(n + 1), prefix_sq(n + 1);
  for (std::size_t f = 0; f < X.cols(); ++f) {
    const auto& order = sorted[f];
    prefix_sum[0] = prefix_sq[0] = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = target[order[k]] - mean;
      prefix_sum[k + 1] = prefix_sum[k] + v;
      prefix_sq[k + 1] = prefix_sq[k] + v * v;
    }
    const double total_sum = prefix_sum[n];
    const double total_sq = prefix_sq[n];
    for (std::size_t k = min_samples_leaf; k + min_samples_leaf <= n; ++k) {
      // left = order[0..k), right = order[k..n)
      const double lo = X(order[k - 1], f);
      const double hi = X(order[k], f);
      if (!(lo < hi)) continue;
      const double nl = static_cast<double>(k);
      const double nr = static_cast<double>(n - k);
      const double sl = prefix_sum[k];
      const double sr = total_sum - sl;
      const double ql = prefix_sq[k];
      const double qr = total_sq - ql;
      const double sse = std::max(0.0, ql - sl * sl / nl) + std::max(0.0, qr - sr * sr / nr);
      if (!best.found || improves(sse, best.sse)) {
        double thr = lo + (hi - lo) / 2.0;
        if (!(thr < hi)) thr = lo;
        best.found = true;
        best.feature = f;
        best.threshold = thr;
        best.sse = sse;
        best.left_count = k;
      }
    }
  }
  return best;
}

std::vector<std::vector<std::size_t>> sort_by_features(const FeatureMatrix& X,
                                                        std::span<const std::size_t> rows) {
  std::vector<std::vector<std::size_t>> sorted(X.cols());
  for (std::size_t f = 0; f < X.cols(); ++f) {
    sorted[f].assign(rows.begin(), rows.end());
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](std::size_t a, std::size_t b) { return X(a, f) < X(b, f); });
  }
  return sorted;
}

}  // namespace

SplitChoice best_split(const FeatureMatrix& X, std::span<const double> target,
                       std::span<const std::size_t> rows, std::size_t min_samples_leaf) {
  return best_split_sorted(X, target, sort_by_features(X, rows), min_samples_leaf);
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& X, std::span<const double> target, std::size_t max_depth,
              std::size_t min_leaf)
      : X_(X), target_(target), max_depth_(max_depth), min_leaf_(min_leaf) {}

  RegressionTree build(std::span<const std::size_t> rows) {
    RegressionTree tree;
    grow(tree, sort_by_features(X_, rows), 0);
    return tree;
  }

 private:
  // sorted[f]: the node's rows ordered by feature f
  int grow(RegressionTree& tree, std::vector<std::vector<std::size_t>> sorted, std::size_t depth) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto& rows = sorted.front();
    double sum = 0.0;
    for (std::size_t r : rows) sum += target_[r];
    const double mean = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
    tree.nodes[static_cast<std::size_t>(index)].value = mean;
    if (depth >= max_depth_) return index;

    double parent_sse = 0.0;
    for (std::size_t r : rows) parent_sse += (target_[r] - mean) * (target_[r] - mean);
    if (parent_sse == 0.0) return index;

    const SplitChoice split = best_split_sorted(X_, target_, sorted, min_leaf_);
    if (!split.found || !improves(split.sse, parent_sse)) return index;

    std::vector<std::vector<std::size_t>> left(sorted.size()), right(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      left[f].reserve(split.left_count);
      right[f].reserve(rows.size() - split.left_count);
      for (std::size_t r : sorted[f])
        (X_(r, split.feature) <= split.threshold ? left[f] : right[f]).push_back(r);
    }
    sorted.clear();
    const int l = grow(tree, std::move(left), depth + 1);
    const int rt = grow(tree, std::move(right), depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = static_cast<int>(split.feature);
    node.threshold = split.threshold;
    node.value = 0.0;
    node.left = l;
    node.right = rt;
    return index;
  }

  const FeatureMatrix& X_;
  std::span<const double> target_;
  std::size_t max_depth_;
  std::size_t min_leaf_;
};

double mse_over(std::span<const double> y, const std::vector<double>& f,
                const std::vector<std::size_t>& rows) {
  double s = 0.0;
  for (std::size_t r : rows) s += (y[r] - f[r]) * (y[r] - f[r]);
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

}  // namespace

RegressionTree fit_tree(const FeatureMatrix& X, std::span<const double> target,
                        std::span<const std::size_t> rows, std::size_t max_depth,
                        std::size_t min_samples_leaf) {
  return TreeBuilder(X, target, max_depth, min_samples_leaf).build(rows);
}

BoostedEnsemble fit(const FeatureMatrix& X, std::span<const double> y, const TrainConfig& config) {
  config.validate();
  const std::size_t n = X.rows();
  if (n < 2) throw Error("fit needs at least 2 rows");
  if (X.cols() == 0) throw Error("fit needs at least 1 feature");
  if (y.size() != n) throw Error("fit: target length differs from row count");
  for (double v : X.data())
    if (!std::isfinite(v)) throw Error("fit: non-finite feature value");
  for (double v : y)
    if (!std::isfinite(v)) throw Error("fit: non-finite target value");

  std::vector<std::size_t> train_rows(n);
  std::iota(train_rows.begin(), train_rows.end(), 0);
  std::vector<std::size_t> valid_rows;
  if (config.validation_fraction > 0.0) {
    Rng rng(mix_seed(config.seed, 0x76616c6964ULL));
    shuffle(std::span<std::size_t>(train_rows), rng);
    const auto n_valid =
        static_cast<std::size_t>(std::floor(config.validation_fraction * n + 0.5));
    if (n_valid == 0 || n - n_valid < 2) throw Error("fit: too few rows for validation split");
    valid_rows.assign(train_rows.end() - static_cast<std::ptrdiff_t>(n_valid), train_rows.end());
    train_rows.resize(n - n_valid);
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(valid_rows.begin(), valid_rows.end());
  }

  BoostedEnsemble model;
  model.config = config;
  model.learning_rate = config.learning_rate;
  model.n_features = X.cols();
  double sum = 0.0;
  for (std::size_t r : train_rows) sum += y[r];
  model.init = sum / static_cast<double>(train_rows.size());

  std::vector<double> f(n, model.init);
  std::vector<double> residual(n, 0.0);
  model.train_mse.push_back(mse_over(y, f, train_rows));

  double best_valid = valid_rows.empty() ? 0.0 : mse_over(y, f, valid_rows);
  std::size_t best_stage = 0;
  std::size_t since_best = 0;

  const auto n_sub = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(config.subsample * train_rows.size())));

  for (std::size_t m = 0; m < config.n_estimators; ++m) {
    for (std::size_t r : train_rows) residual[r] = y[r] - f[r];
    std::vector<std::size_t> stage_rows = train_rows;
    if (config.subsample < 1.0) {
      Rng rng(mix_seed(config.seed, m + 1));
      shuffle(std::span<std::size_t>(stage_rows), rng);
      stage_rows.resize(n_sub);
      std::sort(stage_rows.begin(), stage_rows.end());
    }
    RegressionTree tree =
        fit_tree(X, residual, stage_rows, config.max_depth, config.min_samples_leaf);
    for (std::size_t r = 0; r < n; ++r) f[r] += model.learning_rate * tree.predict(X.row(r));
    model.trees.push_back(std::move(tree));
    model.train_mse.push_back(mse_over(y, f, train_rows));

    if (!valid_rows.empty()) {
      const double v = mse_over(y, f, valid_rows);
      if (v < best_valid) {
        best_valid = v;
        best_stage = m + 1;
        since_best = 0;
      } else if (++since_best >= config.n_iter_no_change) {
        break;
      }
    }
  }
  if (!valid_rows.empty()) {
    model.trees.resize(best_stage);
    model.train_mse.resize(best_stage + 1);
  }
  return model;
}

}  // namespace vcreval::gbr
