#include "zonecast/error.hpp"
#include "zonecast/regressors.hpp"
#include "zonecast/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace zonecast::regressors {
namespace {

constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-4;

double kernel(std::span<const double> a, std::span<const double> b, const GpParams& p) {
  const double sf2 = p.signal_std * p.signal_std;
  return sf2 * std::exp(-simd::squared_distance(a, b) / (2.0 * p.length_scale * p.length_scale));
}

// In-place lower Cholesky of the lower triangle of A (row-major, n x n).
bool cholesky(Matrix& A) {
  const std::size_t n = A.rows();
  for (std::size_t j = 0; j < n; ++j) {
    const auto rj = A.row(j);
    const double d = A(j, j) - simd::dot(rj.first(j), rj.first(j));
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    A(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      const auto ri = A.row(i);
      A(i, j) = (A(i, j) - simd::dot(ri.first(j), rj.first(j))) / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) A(i, j) = 0.0;
  }
  return true;
}

// Solves L v = b in place.
void forward_solve(const Matrix& L, std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = (v[i] - simd::dot(L.row(i).first(i), std::span<const double>(v).first(i))) / L(i, i);
  }
}

// Solves L^T v = b in place.
void backward_solve(const Matrix& L, std::vector<double>& v) {
  for (std::size_t i = v.size(); i-- > 0;) {
    v[i] /= L(i, i);
    const auto ri = L.row(i);
    for (std::size_t j = 0; j < i; ++j) v[j] -= ri[j] * v[i];
  }
}

Matrix kernel_matrix(const Matrix& X, const GpParams& p, double diag) {
  const std::size_t n = X.rows();
  Matrix K(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) K(i, j) = kernel(X.row(i), X.row(j), p);
    K(i, i) = p.signal_std * p.signal_std + diag;
  }
  return K;
}

double population_std(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

void check_params(const GpParams& p) {
  if (!(p.length_scale > 0.0)) throw ValidationError("gp: length_scale must be > 0");
  if (!(p.signal_std > 0.0)) throw ValidationError("gp: signal_std must be > 0");
  if (!(p.noise_std >= 0.0)) throw ValidationError("gp: noise_std must be >= 0");
  if (p.max_samples < 1) throw ValidationError("gp: max_samples must be >= 1");
}

}  // namespace

GpModel gp_fit(const Matrix& X, std::span<const double> y, const GpParams& params) {
  check_params(params);
  const std::size_t n_all = X.rows();
  const std::size_t d = X.cols();
  if (n_all == 0 || d == 0) throw ValidationError("gp: empty training data");
  if (y.size() != n_all) throw ValidationError("gp: target count does not match rows");

  std::vector<std::size_t> idx(n_all);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n_all > params.max_samples) {
    Rng rng(params.seed);
    for (std::size_t i = 0; i < params.max_samples; ++i) {
      std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.index(n_all - i))]);
    }
    idx.resize(params.max_samples);
    std::sort(idx.begin(), idx.end());
  }
  const std::size_t n = idx.size();

  GpModel m;
  m.params = params;
  m.means.assign(d, 0.0);
  m.stds.assign(d, 1.0);
  Matrix Xs = X.take_rows(idx);
  for (double v : Xs.data()) {
    if (!std::isfinite(v)) throw ValidationError("gp: non-finite feature value");
  }
  if (params.standardize) {
    std::vector<double> col(n);
    for (std::size_t f = 0; f < d; ++f) {
      for (std::size_t i = 0; i < n; ++i) col[i] = Xs(i, f);
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(n);
      const double sd = population_std(col);
      m.means[f] = mean;
      m.stds[f] = sd > 0.0 ? sd : 1.0;
      for (std::size_t i = 0; i < n; ++i) Xs(i, f) = (Xs(i, f) - mean) / m.stds[f];
    }
  }
  m.X_train = std::move(Xs);

  double ysum = 0.0;
  for (std::size_t i : idx) ysum += y[i];
  m.y_mean = ysum / static_cast<double>(n);
  std::vector<double> yc(n);
  for (std::size_t i = 0; i < n; ++i) yc[i] = y[idx[i]] - m.y_mean;

  const double noise2 = params.noise_std * params.noise_std;
  for (double eps = kJitterStart; eps <= kJitterMax * 1.0000001; eps *= 10.0) {
    Matrix K = kernel_matrix(m.X_train, params, noise2 + eps);
    if (cholesky(K)) {
      m.jitter = eps;
      m.chol = std::move(K);
      break;
    }
  }
  if (m.chol.rows() == 0) {
    throw ValidationError("gp: kernel matrix is not positive definite even with jitter 1e-4");
  }
  m.alpha = yc;
  forward_solve(m.chol, m.alpha);
  backward_solve(m.chol, m.alpha);
  return m;
}

void GpModel::refactor() {
  check_params(params);
  Matrix K = kernel_matrix(X_train, params, params.noise_std * params.noise_std + jitter);
  if (!cholesky(K)) throw ValidationError("gp: stored model no longer factors");
  chol = std::move(K);
}

double GpModel::predict_row(std::span<const double> x) const {
  std::vector<double> z(x.size());
  for (std::size_t f = 0; f < x.size(); ++f) z[f] = (x[f] - means[f]) / stds[f];
  double acc = 0.0;
  for (std::size_t i = 0; i < X_train.rows(); ++i) acc += kernel(X_train.row(i), z, params) * alpha[i];
  return acc + y_mean;
}

std::pair<double, double> GpModel::predict_mean_var(std::span<const double> x) const {
  if (x.size() != n_features()) {
    throw ValidationError("predict: expected " + std::to_string(n_features()) + " features, got " +
                          std::to_string(x.size()));
  }
  std::vector<double> z(x.size());
  for (std::size_t f = 0; f < x.size(); ++f) z[f] = (x[f] - means[f]) / stds[f];
  std::vector<double> k(X_train.rows());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = kernel(X_train.row(i), z, params);
  const double mean = simd::dot(k, alpha) + y_mean;
  forward_solve(chol, k);
  const double var = params.signal_std * params.signal_std - simd::dot(k, k);
  return {mean, std::max(0.0, var)};
}

GpParams gp_select_params(const Matrix& X, std::span<const double> y, const GpParams& base, bool fixed_length,
                          bool fixed_noise) {
  const std::size_t n = X.rows();
  if (n == 0) throw ValidationError("gp: empty training data");
  GpParams p = base;
  const double ystd = population_std(y);
  const double yscale = ystd > 0.0 ? ystd : 1.0;
  if (!(p.signal_std > 0.0)) p.signal_std = yscale;
  if (fixed_length && fixed_noise) return p;

  // Median pairwise distance over up to 300 evenly spaced rows, scaled the
  // way gp_fit scales them.
  const std::size_t m = std::min<std::size_t>(n, 300);
  std::vector<std::size_t> pick(m);
  for (std::size_t i = 0; i < m; ++i) pick[i] = i * n / m;
  Matrix S = X.take_rows(pick);
  if (base.standardize) {
    std::vector<double> col(m);
    for (std::size_t f = 0; f < S.cols(); ++f) {
      for (std::size_t i = 0; i < m; ++i) col[i] = S(i, f);
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(m);
      double sd = population_std(col);
      if (!(sd > 0.0)) sd = 1.0;
      for (std::size_t i = 0; i < m; ++i) S(i, f) = (S(i, f) - mean) / sd;
    }
  }
  std::vector<double> dists;
  dists.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) dists.push_back(std::sqrt(simd::squared_distance(S.row(i), S.row(j))));
  }
  double median = 1.0;
  if (!dists.empty()) {
    const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    if (*mid > 0.0) median = *mid;
  }

  std::vector<double> lengths{base.length_scale};
  if (!fixed_length) lengths = {0.5 * median, median, 2.0 * median, 4.0 * median};
  std::vector<double> noises{base.noise_std};
  if (!fixed_noise) noises = {0.01 * yscale, 0.1 * yscale, 0.5 * yscale};

  const std::size_t split = n * 4 / 5;
  if (split < 2 || split >= n) {
    p.length_scale = lengths[lengths.size() > 1 ? 1 : 0];
    p.noise_std = noises[noises.size() > 1 ? 1 : 0];
    return p;
  }
  std::vector<std::size_t> head(split);
  std::iota(head.begin(), head.end(), std::size_t{0});
  const Matrix X_fit = X.take_rows(head);
  const std::span<const double> y_fit = y.first(split);

  double best = std::numeric_limits<double>::infinity();
  GpParams best_p = p;
  best_p.length_scale = lengths[0];
  best_p.noise_std = noises[0];
  for (double len : lengths) {
    for (double noise : noises) {
      GpParams trial = p;
      trial.length_scale = len;
      trial.noise_std = noise;
      double mae = std::numeric_limits<double>::infinity();
      try {
        const GpModel model = gp_fit(X_fit, y_fit, trial);
        double sum = 0.0;
        for (std::size_t i = split; i < n; ++i) sum += std::fabs(model.predict_row(X.row(i)) - y[i]);
        mae = sum / static_cast<double>(n - split);
      } catch (const ValidationError&) {
        continue;
      }
      if (mae < best) {
        best = mae;
        best_p = trial;
      }
    }
  }
  return best_p;
}

}  // namespace zonecast::regressors
