#include "zonecast/error.hpp"
#include "zonecast/regressors.hpp"

#include <algorithm>
#include <cmath>

namespace zonecast::regressors {

ForestModel forest_fit(const Matrix& X, std::span<const double> y, const ForestParams& params) {
  if (params.n_trees < 1) throw ValidationError("forest: n_trees must be >= 1");
  const TrainingData data(X);
  const std::size_t n = data.n();
  ForestModel model;
  model.n_features_ = data.d();
  model.trees.reserve(static_cast<std::size_t>(params.n_trees));
  std::vector<std::uint32_t> counts(n);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng = Rng::stream(params.seed, static_cast<std::uint64_t>(t));
    if (params.bootstrap) {
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t i = 0; i < n; ++i) ++counts[rng.index(n)];
    } else {
      std::fill(counts.begin(), counts.end(), 1);
    }
    model.trees.push_back(fit_tree(data, y, counts, params.tree, &rng));
  }
  return model;
}

double ForestModel::predict_row(std::span<const double> x) const {
  double sum = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const double v = trees[t].predict(x);
    sum += v;
    lo = t == 0 ? v : std::min(lo, v);
    hi = t == 0 ? v : std::max(hi, v);
  }
  // Keeps the mean inside the range of tree outputs despite rounding.
  return std::clamp(sum / static_cast<double>(trees.size()), lo, hi);
}

BoostedModel gbt_fit(const Matrix& X, std::span<const double> y, const BoostParams& params,
                     std::vector<double>* loss_trace) {
  if (!(params.learning_rate > 0.0)) throw ValidationError("boosting: learning_rate must be > 0");
  if (params.n_rounds < 0) throw ValidationError("boosting: n_rounds must be >= 0");
  const TrainingData data(X);
  const std::size_t n = data.n();
  if (y.size() != n) throw ValidationError("boosting: target count does not match rows");

  BoostedModel model;
  model.n_features_ = data.d();
  model.learning_rate = params.learning_rate;
  model.xgb = params.tree.xgb;
  model.lambda = params.tree.lambda;
  model.gamma = params.tree.gamma;
  double sum = 0.0;
  for (double v : y) sum += v;
  model.base_score = sum / static_cast<double>(n);

  std::vector<double> pred(n, model.base_score);
  std::vector<double> resid(n);
  const auto update_residuals = [&] {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      resid[i] = y[i] - pred[i];
      loss += resid[i] * resid[i];
    }
    if (loss_trace) loss_trace->push_back(loss);
  };
  if (loss_trace) loss_trace->clear();
  update_residuals();

  const std::vector<std::uint32_t> counts(n, 1);
  std::vector<int> leaf_of;
  model.trees.reserve(static_cast<std::size_t>(params.n_rounds));
  for (int k = 0; k < params.n_rounds; ++k) {
    Tree tree = fit_tree(data, resid, counts, params.tree, nullptr, &leaf_of);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] += model.learning_rate * tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
    }
    model.trees.push_back(std::move(tree));
    update_residuals();
  }
  return model;
}

double BoostedModel::predict_row(std::span<const double> x) const {
  double acc = base_score;
  for (const Tree& t : trees) acc += learning_rate * t.predict(x);
  return acc;
}

double weighted_median(std::vector<std::pair<double, double>> values) {
  if (values.empty()) throw ValidationError("weighted_median: no values");
  std::stable_sort(values.begin(), values.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double total = 0.0;
  for (const auto& v : values) total += v.second;
  const double half = 0.5 * total;
  double cum = 0.0;
  for (const auto& v : values) {
    cum += v.second;
    if (cum >= half) return v.first;
  }
  return values.back().first;
}

AdaBoostModel adaboost_fit(const Matrix& X, std::span<const double> y, const AdaBoostParams& params) {
  if (params.n_estimators < 1) throw ValidationError("adaboost: n_estimators must be >= 1");
  const TrainingData data(X);
  const std::size_t n = data.n();
  if (y.size() != n) throw ValidationError("adaboost: target count does not match rows");

  AdaBoostModel model;
  model.n_features_ = data.d();
  Rng rng(params.seed);
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<double> cdf(n);
  std::vector<std::uint32_t> counts(n);
  std::vector<double> err(n);

  for (int k = 0; k < params.n_estimators; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) cdf[i] = (acc += w[i]);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t s = 0; s < n; ++s) {
      const double u = rng.uniform() * acc;
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      ++counts[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), n - 1)];
    }
    Tree tree = fit_tree(data, y, counts, params.tree, &rng);

    double max_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = std::fabs(tree.predict(X.row(i)) - y[i]);
      max_err = std::max(max_err, err[i]);
    }
    if (max_err == 0.0) {
      model.estimators.push_back(std::move(tree));
      model.weights.push_back(1.0);
      break;
    }
    double avg_loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) avg_loss += w[i] * (err[i] / max_err);
    if (avg_loss >= 0.5 || !(avg_loss > 0.0)) {
      // Too weak to trust, or perfect on every weighted sample.
      if (model.estimators.empty() || !(avg_loss > 0.0)) {
        model.estimators.push_back(std::move(tree));
        model.weights.push_back(1.0);
      }
      break;
    }
    const double beta = avg_loss / (1.0 - avg_loss);
    model.estimators.push_back(std::move(tree));
    model.weights.push_back(std::log(1.0 / beta));

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] *= std::pow(beta, 1.0 - err[i] / max_err);
      total += w[i];
    }
    if (!(total > 0.0) || !std::isfinite(total)) break;
    for (double& wi : w) wi /= total;
  }
  return model;
}

double AdaBoostModel::predict_row(std::span<const double> x) const {
  std::vector<std::pair<double, double>> v;
  v.reserve(estimators.size());
  for (std::size_t k = 0; k < estimators.size(); ++k) v.emplace_back(estimators[k].predict(x), weights[k]);
  return weighted_median(std::move(v));
}

}  // namespace zonecast::regressors
