#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include "zonecast/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

namespace oracle {

/// SSE of a two-way split as an exact fraction num/den (integer data only):
/// SSE = sum y^2 - S_L^2/n_L - S_R^2/n_R, kept as
/// (sum y^2 * nL * nR - S_L^2 * nR - S_R^2 * nL) / (nL * nR).
struct Fraction {
  __int128 num;
  __int128 den;
  friend bool operator<(const Fraction& a, const Fraction& b) { return a.num * b.den < b.num * a.den; }
  friend bool operator==(const Fraction& a, const Fraction& b) { return a.num * b.den == b.num * a.den; }
};

inline Fraction split_sse(const std::vector<std::vector<long long>>& X, const std::vector<long long>& y,
                          std::size_t f, double thr) {
  __int128 sl = 0, sr = 0, nl = 0, nr = 0, sq = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sq += static_cast<__int128>(y[i]) * y[i];
    if (static_cast<double>(X[i][f]) <= thr) {
      sl += y[i];
      ++nl;
    } else {
      sr += y[i];
      ++nr;
    }
  }
  if (nl == 0 || nr == 0) {
    const __int128 s = sl + sr, n = nl + nr;
    return {sq * n - s * s, n};
  }
  return {sq * nl * nr - sl * sl * nr - sr * sr * nl, nl * nr};
}

/// Exhaustive minimum SSE over no split and every (feature, midpoint) split.
inline Fraction min_stump_sse(const std::vector<std::vector<long long>>& X, const std::vector<long long>& y) {
  Fraction best = split_sse(X, y, 0, 1e300);  // no split
  const std::size_t d = X[0].size();
  for (std::size_t f = 0; f < d; ++f) {
    std::set<long long> vals;
    for (const auto& row : X) vals.insert(row[f]);
    for (auto it = vals.begin(); std::next(it) != vals.end(); ++it) {
      const double thr = (static_cast<double>(*it) + static_cast<double>(*std::next(it))) / 2.0;
      const Fraction s = split_sse(X, y, f, thr);
      if (s < best) best = s;
    }
  }
  return best;
}

/// SSE of an arbitrary double-valued dataset under a fixed partition.
inline double sse_of_predictions(const std::vector<double>& pred, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (pred[i] - y[i]) * (pred[i] - y[i]);
  return s;
}

/// Plain Gauss-Jordan solve of A x = b (small dense systems).
inline std::vector<double> solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(A[r][c]) > std::fabs(A[p][c])) p = r;
    }
    std::swap(A[c], A[p]);
    std::swap(b[c], b[p]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double m = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= m * A[c][k];
      b[r] -= m * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= A[i][i];
  return b;
}

inline double min_pairwise_distance(const zonecast::regressors::Matrix& X) {
  double best = INFINITY;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double s = 0.0;
      for (std::size_t f = 0; f < X.cols(); ++f) s += (X(i, f) - X(j, f)) * (X(i, f) - X(j, f));
      best = std::min(best, std::sqrt(s));
    }
  }
  return best;
}

inline double mae(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace oracle
