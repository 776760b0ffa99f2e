#include "zonecast/error.hpp"
#include "zonecast/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace zonecast::regressors {
namespace {

struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    comp += std::fabs(sum) >= std::fabs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

class Builder {
 public:
  Builder(const TrainingData& data, std::span<const double> y, std::span<const std::uint32_t> counts,
          const TreeParams& params, Rng* rng, std::vector<int>* leaf_of)
      : data_(data), y_(y), params_(params), rng_(rng), leaf_of_(leaf_of) {
    const std::size_t n = data.n();
    for (std::size_t i = 0; i < n; ++i) m_ += counts[i];
    if (m_ == 0) throw ValidationError("tree: no training samples");
    // Per feature, the rows in sorted order with their values and targets
    // alongside, so split scans read memory sequentially.
    ord_.resize(data.d() * m_);
    xv_.resize(data.d() * m_);
    yv_.resize(data.d() * m_);
    for (std::size_t f = 0; f < data.d(); ++f) {
      const auto col = data.col(f);
      std::size_t k = f * m_;
      for (std::uint32_t row : data.order(f)) {
        for (std::uint32_t c = 0; c < counts[row]; ++c, ++k) {
          ord_[k] = row;
          xv_[k] = col[row];
          yv_[k] = y[row];
        }
      }
    }
    go_left_.assign(n, 0);
    tmp_.resize(m_);
    tmp_x_.resize(m_);
    tmp_y_.resize(m_);
    pool_.resize(data.d());
    if (leaf_of_) leaf_of_->assign(n, -1);
    const std::size_t d = data.d();
    n_try_ = d;
    if (params.feature_frac < 1.0) {
      n_try_ = static_cast<std::size_t>(std::ceil(params.feature_frac * static_cast<double>(d)));
      n_try_ = std::clamp<std::size_t>(n_try_, 1, d);
      if (n_try_ < d && !rng_) throw ValidationError("tree: feature subsampling needs a random stream");
    }
  }

  Tree run() {
    build(0, m_, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    std::size_t feature = 0;
    std::size_t n_left = 0;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
    bool found = false;
  };

  std::span<const std::uint32_t> slice(std::size_t f, std::size_t b, std::size_t e) const {
    return {ord_.data() + f * m_ + b, e - b};
  }

  std::span<const std::size_t> candidate_features() {
    const std::size_t d = data_.d();
    std::iota(pool_.begin(), pool_.end(), std::size_t{0});
    if (n_try_ < d) {
      for (std::size_t i = 0; i < n_try_; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng_->index(d - i));
        std::swap(pool_[i], pool_[j]);
      }
      std::sort(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(n_try_));
    }
    return {pool_.data(), n_try_};
  }

  int build(std::size_t b, std::size_t e, int depth) {
    const std::size_t cnt = e - b;
    const auto rows = slice(0, b, e);
    const double* yr = yv_.data() + b;
    double sum = 0.0;
    double lo = yr[0];
    double hi = lo;
    for (std::size_t k = 0; k < cnt; ++k) {
      sum += yr[k];
      lo = std::min(lo, yr[k]);
      hi = std::max(hi, yr[k]);
    }
    const double n = static_cast<double>(cnt);
    const double mean = lo == hi ? lo : sum / n;
    TreeNode node;
    node.value = params_.xgb ? sum / (n + params_.lambda) : mean;
    node.n_samples = static_cast<std::uint32_t>(cnt);
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(node);

    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_leaf));
    const bool stop = depth >= params_.max_depth || cnt < 2 * min_leaf || lo == hi;
    const Split best = stop ? Split{} : find_split(b, e, mean, sum, min_leaf);
    if (!best.found) {
      if (leaf_of_) {
        for (std::uint32_t r : rows) (*leaf_of_)[r] = id;
      }
      return id;
    }

    const auto col = data_.col(best.feature);
    for (std::uint32_t r : rows) go_left_[r] = col[r] <= best.threshold ? 1 : 0;
    for (std::size_t f = 0; f < data_.d(); ++f) {
      const std::size_t off = f * m_ + b;
      std::uint32_t* s = ord_.data() + off;
      double* xs = xv_.data() + off;
      double* ys = yv_.data() + off;
      std::size_t nl = 0;
      std::size_t nr = 0;
      // Branchless stable partition: write to both sides, advance one.
      for (std::size_t k = 0; k < cnt; ++k) {
        const std::uint32_t r = s[k];
        const double xk = xs[k];
        const double yk = ys[k];
        const std::size_t g = go_left_[r];
        s[nl] = r;
        xs[nl] = xk;
        ys[nl] = yk;
        tmp_[nr] = r;
        tmp_x_[nr] = xk;
        tmp_y_[nr] = yk;
        nl += g;
        nr += 1 - g;
      }
      std::copy_n(tmp_.begin(), nr, s + nl);
      std::copy_n(tmp_x_.begin(), nr, xs + nl);
      std::copy_n(tmp_y_.begin(), nr, ys + nl);
    }
    const int left = build(b, b + best.n_left, depth + 1);
    const int right = build(b + best.n_left, e, depth + 1);
    TreeNode& self = tree_.nodes[static_cast<std::size_t>(id)];
    self.feature = static_cast<int>(best.feature);
    self.threshold = best.threshold;
    self.left = left;
    self.right = right;
    return id;
  }

  Split find_split(std::size_t b, std::size_t e, double mean, double sum, std::size_t min_leaf) {
    const std::size_t cnt = e - b;
    const bool xgb = params_.xgb;
    const double lambda = xgb ? params_.lambda : 0.0;
    // SSE works on node-centred targets; XGB gain on raw residual sums.
    const double shift = xgb ? 0.0 : mean;
    // Compensated sums, so equal partitions reached through different
    // features score identically and ties resolve by feature index.
    Neumaier total_acc;
    for (std::size_t k = b; k < e; ++k) total_acc.add(yv_[k] - shift);
    const double total = total_acc.value();

    Split best;
    for (std::size_t f : candidate_features()) {
      const double* xs = xv_.data() + f * m_ + b;
      const double* ys = yv_.data() + f * m_ + b;
      Neumaier left_acc;
      for (std::size_t i = 1; i < min_leaf; ++i) left_acc.add(ys[i - 1] - shift);
      for (std::size_t i = min_leaf; i + min_leaf <= cnt; ++i) {
        left_acc.add(ys[i - 1] - shift);
        const double xa = xs[i - 1];
        const double xb = xs[i];
        if (!(xa < xb)) continue;
        const double nl = static_cast<double>(i);
        const double nr = static_cast<double>(cnt - i);
        const double left_sum = left_acc.value();
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / (nl + lambda) + right_sum * right_sum / (nr + lambda);
        if (score > best.score) {
          double thr = xa + (xb - xa) / 2.0;
          if (!(thr < xb)) thr = xa;
          best = {f, i, thr, score, true};
        }
      }
    }
    if (best.found && xgb) {
      const double n = static_cast<double>(cnt);
      const double gain = 0.5 * (best.score - sum * sum / (n + lambda)) - params_.gamma;
      if (!(gain > 0.0)) best.found = false;
    }
    return best;
  }

  const TrainingData& data_;
  std::span<const double> y_;
  const TreeParams& params_;
  Rng* rng_;
  std::vector<int>* leaf_of_;
  std::size_t m_ = 0;
  std::size_t n_try_ = 0;
  std::vector<std::uint32_t> ord_;
  std::vector<std::uint8_t> go_left_;
  std::vector<double> xv_;
  std::vector<double> yv_;
  std::vector<std::uint32_t> tmp_;
  std::vector<double> tmp_x_;
  std::vector<double> tmp_y_;
  std::vector<std::size_t> pool_;
  Tree tree_;
};

int depth_from(const Tree& t, int id) {
  const TreeNode& n = t.nodes[static_cast<std::size_t>(id)];
  if (n.is_leaf()) return 0;
  return 1 + std::max(depth_from(t, n.left), depth_from(t, n.right));
}

}  // namespace

TrainingData::TrainingData(const Matrix& X) : n_(X.rows()), d_(X.cols()) {
  if (n_ == 0) throw ValidationError("training data: no samples");
  if (d_ == 0) throw ValidationError("training data: no features");
  if (n_ > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("training data: too many samples");
  cols_.resize(n_ * d_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t f = 0; f < d_; ++f) {
      const double v = X(i, f);
      if (!std::isfinite(v)) throw ValidationError("training data: non-finite feature value");
      cols_[f * n_ + i] = v;
    }
  }
  order_.resize(n_ * d_);
  for (std::size_t f = 0; f < d_; ++f) {
    const auto first = order_.begin() + static_cast<std::ptrdiff_t>(f * n_);
    const auto last = first + static_cast<std::ptrdiff_t>(n_);
    std::iota(first, last, std::uint32_t{0});
    const double* c = cols_.data() + f * n_;
    std::stable_sort(first, last, [c](std::uint32_t a, std::uint32_t b) { return c[a] < c[b]; });
  }
}

Tree fit_tree(const TrainingData& data, std::span<const double> y, std::span<const std::uint32_t> counts,
              const TreeParams& params, Rng* rng, std::vector<int>* leaf_of) {
  if (y.size() != data.n() || counts.size() != data.n()) {
    throw ValidationError("tree: expected " + std::to_string(data.n()) + " targets and counts, got " +
                          std::to_string(y.size()) + " and " + std::to_string(counts.size()));
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw ValidationError("tree: non-finite target");
  }
  if (params.max_depth < 0) throw ValidationError("tree: max_depth must be >= 0");
  if (params.min_leaf < 1) throw ValidationError("tree: min_leaf must be >= 1");
  if (params.lambda < 0.0 || params.gamma < 0.0) throw ValidationError("tree: lambda and gamma must be >= 0");
  if (!(params.feature_frac > 0.0 && params.feature_frac <= 1.0)) {
    throw ValidationError("tree: feature_frac must be in (0, 1]");
  }
  return Builder(data, y, counts, params, rng, leaf_of).run();
}

Tree tree_fit(const Matrix& X, std::span<const double> y, int max_depth, int min_leaf) {
  const TrainingData data(X);
  const std::vector<std::uint32_t> counts(data.n(), 1);
  TreeParams p;
  p.max_depth = max_depth;
  p.min_leaf = min_leaf;
  return fit_tree(data, y, counts, p);
}

double Tree::predict(std::span<const double> x) const {
  const TreeNode* n = nodes.data();
  while (!n->is_leaf()) {
    n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left
                                                                                                : n->right)];
  }
  return n->value;
}

int Tree::depth() const { return nodes.empty() ? 0 : depth_from(*this, 0); }

std::size_t Tree::n_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) {
    return n.is_leaf();
  }));
}

double Regressor::predict_one(std::span<const double> x) const {
  if (x.size() != n_features()) {
    throw ValidationError("predict: expected " + std::to_string(n_features()) + " features, got " +
                          std::to_string(x.size()));
  }
  return predict_row(x);
}

std::vector<double> Regressor::predict(const Matrix& X) const {
  if (X.cols() != n_features()) {
    throw ValidationError("predict: expected " + std::to_string(n_features()) + " features, got " +
                          std::to_string(X.cols()));
  }
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict_row(X.row(i));
  return out;
}

}  // namespace zonecast::regressors
