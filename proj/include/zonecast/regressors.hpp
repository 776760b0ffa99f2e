#pragma once

// Tree ensembles and Gaussian-process regression behind one predict
// interface. Everything here is deterministic under the spec's seed.

#include "zonecast/features.hpp"
#include "zonecast/rng.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace zonecast::regressors {

using features::Matrix;

enum class RegressorKind { RANDOM_FOREST, GP, ADABOOST_R2, GRADIENT_BOOSTING, XGB_STYLE };

inline constexpr std::array<RegressorKind, 5> kAllRegressorKinds = {
    RegressorKind::RANDOM_FOREST, RegressorKind::GP, RegressorKind::ADABOOST_R2,
    RegressorKind::GRADIENT_BOOSTING, RegressorKind::XGB_STYLE};

std::string_view to_string(RegressorKind kind);
std::optional<RegressorKind> parse_regressor_kind(std::string_view name);

struct RegressorSpec {
  RegressorKind kind = RegressorKind::RANDOM_FOREST;
  std::map<std::string, double> hyper;
  std::uint64_t seed = 0;

  /// Spec with the complete default hyperparameter set of `kind`.
  static RegressorSpec defaults(RegressorKind kind, std::uint64_t seed = 0);
  static const std::map<std::string, double>& default_hyper(RegressorKind kind);

  /// Throws ValidationError for a key the kind does not define.
  void set(const std::string& key, double value);
  double get(const std::string& key) const;
  int get_int(const std::string& key) const;
  /// Complete key set and valid ranges.
  void validate() const;

  friend bool operator==(const RegressorSpec&, const RegressorSpec&) = default;
};

// ---------------------------------------------------------------- trees

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  std::uint32_t n_samples = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Flat node array; node 0 is the root. Left takes x[feature] <= threshold.
struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  int depth() const;
  std::size_t n_leaves() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct TreeParams {
  int max_depth = 6;
  int min_leaf = 5;
  /// Second-order gain with L2 leaf shrinkage instead of plain SSE.
  bool xgb = false;
  double lambda = 0.0;
  double gamma = 0.0;
  /// Fraction of features considered per node (needs an Rng when < 1).
  double feature_frac = 1.0;
};

/// Column-major copy of X with a stable per-feature sort order, computed once
/// and shared by every tree fitted on the same rows.
class TrainingData {
 public:
  explicit TrainingData(const Matrix& X);
  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }
  std::span<const double> col(std::size_t f) const { return {cols_.data() + f * n_, n_}; }
  std::span<const std::uint32_t> order(std::size_t f) const { return {order_.data() + f * n_, n_}; }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<double> cols_;
  std::vector<std::uint32_t> order_;
};

/// Greedy exact-scan tree on a multiset of rows: counts[i] copies of row i.
/// If `leaf_of` is given it receives, per row, the index of the leaf it fell
/// in (-1 for rows with count 0).
Tree fit_tree(const TrainingData& data, std::span<const double> y, std::span<const std::uint32_t> counts,
              const TreeParams& params, Rng* rng = nullptr, std::vector<int>* leaf_of = nullptr);

/// CART on all rows once each.
Tree tree_fit(const Matrix& X, std::span<const double> y, int max_depth, int min_leaf);

// ---------------------------------------------------------------- models

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual std::size_t n_features() const = 0;
  /// No dimension check; callers go through predict/predict_one.
  virtual double predict_row(std::span<const double> x) const = 0;

  /// Throws ValidationError naming expected/got feature counts on mismatch.
  double predict_one(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& X) const;

  /// Set by fit(); persisted alongside the model.
  std::optional<RegressorSpec> spec;
};

class ForestModel final : public Regressor {
 public:
  std::size_t n_features() const override { return n_features_; }
  double predict_row(std::span<const double> x) const override;

  std::size_t n_features_ = 0;
  std::vector<Tree> trees;
};

struct ForestParams {
  int n_trees = 100;
  TreeParams tree;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

ForestModel forest_fit(const Matrix& X, std::span<const double> y, const ForestParams& params);

/// prediction = base_score + learning_rate * sum of tree outputs
class BoostedModel final : public Regressor {
 public:
  std::size_t n_features() const override { return n_features_; }
  double predict_row(std::span<const double> x) const override;

  std::size_t n_features_ = 0;
  double base_score = 0.0;
  double learning_rate = 0.1;
  bool xgb = false;
  double lambda = 0.0;
  double gamma = 0.0;
  std::vector<Tree> trees;
};

struct BoostParams {
  int n_rounds = 200;
  double learning_rate = 0.1;
  TreeParams tree;  // tree.xgb selects the XGB-style gain and leaf values
};

/// If `loss_trace` is given it receives the training SSE before round 1 and
/// after every round.
BoostedModel gbt_fit(const Matrix& X, std::span<const double> y, const BoostParams& params,
                     std::vector<double>* loss_trace = nullptr);

class AdaBoostModel final : public Regressor {
 public:
  std::size_t n_features() const override { return n_features_; }
  double predict_row(std::span<const double> x) const override;

  std::size_t n_features_ = 0;
  std::vector<Tree> estimators;
  std::vector<double> weights;  // log(1/beta_k)
};

/// Weighted median: the smallest value whose cumulative weight reaches half
/// the total. Inputs are (value, weight) with positive weights.
double weighted_median(std::vector<std::pair<double, double>> values);

struct AdaBoostParams {
  int n_estimators = 50;
  TreeParams tree;
  std::uint64_t seed = 0;
};

AdaBoostModel adaboost_fit(const Matrix& X, std::span<const double> y, const AdaBoostParams& params);

struct GpParams {
  double length_scale = 1.0;
  double signal_std = 1.0;
  double noise_std = 0.0;
  std::size_t max_samples = 2000;
  bool standardize = true;
  std::uint64_t seed = 0;
};

class GpModel final : public Regressor {
 public:
  std::size_t n_features() const override { return means.size(); }
  /// Posterior mean only; skips the O(n^2) variance solve.
  double predict_row(std::span<const double> x) const override;
  /// Posterior mean and variance (clamped at 0) at one input.
  std::pair<double, double> predict_mean_var(std::span<const double> x) const;

  /// Recomputes the Cholesky factor from X_train and the stored jitter.
  void refactor();

  GpParams params;
  double jitter = 0.0;
  std::vector<double> means;  // per feature, applied before scaling
  std::vector<double> stds;
  double y_mean = 0.0;
  Matrix X_train;  // scaled inputs
  std::vector<double> alpha;
  Matrix chol;  // lower factor of K + (noise^2 + jitter) I
};

/// Throws ValidationError if K cannot be factored with jitter up to 1e-4.
GpModel gp_fit(const Matrix& X, std::span<const double> y, const GpParams& params);

/// Grid over length scale {0.5,1,2,4} x median pairwise distance and noise
/// {0.01,0.1,0.5} x std(y), scored by one-step MAE on the last 20% of the
/// samples after fitting on the first 80%. Axes flagged fixed keep the value
/// from `base`; signal_std <= 0 in `base` becomes std(y).
GpParams gp_select_params(const Matrix& X, std::span<const double> y, const GpParams& base, bool fixed_length,
                          bool fixed_noise);

/// Fits the model described by spec.
std::unique_ptr<Regressor> fit(const RegressorSpec& spec, const Matrix& X, std::span<const double> y);

}  // namespace zonecast::regressors
