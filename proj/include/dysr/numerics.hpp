#pragma once

// Dense double-precision kernels and the scalar nonlinearities shared by the
// rest of the library. Everything is 64-bit: the hand-derived gradients are
// verified against central finite differences, which single precision cannot
// support.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dysr {

using DenseVector = std::vector<double>;

/// Row-major dense matrix. Orientation is always map-from-input-dim (cols)
/// to output-dim (rows): matvec(M, v) requires M.cols == v.size().
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline DenseVector matvec(const DenseMatrix& m, const DenseVector& v) {
  if (m.cols != v.size())
    throw std::invalid_argument("matvec: dimension mismatch, matrix cols=" +
                                std::to_string(m.cols) + " vs vector dim=" +
                                std::to_string(v.size()));
  DenseVector out(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.values.data() + i * m.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

/// m^T v without materializing the transpose.
inline DenseVector matvec_transposed(const DenseMatrix& m, const DenseVector& v) {
  if (m.rows != v.size())
    throw std::invalid_argument("matvec_transposed: dimension mismatch, matrix rows=" +
                                std::to_string(m.rows) + " vs vector dim=" +
                                std::to_string(v.size()));
  DenseVector out(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.values.data() + i * m.cols;
    const double vi = v[i];
    for (std::size_t j = 0; j < m.cols; ++j) out[j] += row[j] * vi;
  }
  return out;
}

/// m += scale * u v^T
inline void add_outer(DenseMatrix& m, const DenseVector& u, const DenseVector& v,
                      double scale = 1.0) {
  if (m.rows != u.size() || m.cols != v.size())
    throw std::invalid_argument("add_outer: dimension mismatch");
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* row = m.values.data() + i * m.cols;
    const double ui = scale * u[i];
    for (std::size_t j = 0; j < m.cols; ++j) row[j] += ui * v[j];
  }
}

inline double dot(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline void axpy(DenseVector& y, double alpha, const DenseVector& x) {
  if (y.size() != x.size()) throw std::invalid_argument("axpy: dimension mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Scalar nonlinearities
// ---------------------------------------------------------------------------

/// log(1 + exp(x)), overflow-safe.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double logistic(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(sigmoid(x)) without underflow; the supervised loss is computed in this
/// form rather than through the probability.
inline double log_logistic(double x) { return -softplus(-x); }

/// psi * log(1 + exp(x / psi)): a softplus whose sharpness is governed by a
/// positive scale. Beyond x/psi > 30 the linear asymptote x is returned.
inline double scaled_softplus(double x, double psi) {
  if (!(psi > 0.0)) throw std::invalid_argument("scaled_softplus: psi must be positive");
  const double u = x / psi;
  if (u > 30.0) return x;
  return psi * softplus(u);
}

/// Value plus partial derivatives of scaled_softplus, used by the loss
/// gradients. In the asymptote branch d/dx = 1 and d/dpsi = 0.
struct ScaledSoftplusEval {
  double value;
  double d_x;
  double d_psi;
};

inline ScaledSoftplusEval scaled_softplus_eval(double x, double psi) {
  if (!(psi > 0.0)) throw std::invalid_argument("scaled_softplus_eval: psi must be positive");
  const double u = x / psi;
  if (u > 30.0) return {x, 1.0, 0.0};
  const double sp = softplus(u);
  const double sig = logistic(u);
  return {psi * sp, sig, sp - u * sig};
}

/// Softmax over the `active` subset of indices; entries outside the subset
/// are exactly zero in the result. Stabilized by max subtraction.
inline DenseVector softmax_masked(const DenseVector& scores, std::span<const int> active) {
  if (active.empty())
    throw std::invalid_argument("softmax_masked: active index set must be nonempty");
  double m = -std::numeric_limits<double>::infinity();
  for (int i : active) {
    if (i < 0 || static_cast<std::size_t>(i) >= scores.size())
      throw std::invalid_argument("softmax_masked: active index out of range");
    m = std::max(m, scores[i]);
  }
  DenseVector out(scores.size(), 0.0);
  double z = 0.0;
  for (int i : active) {
    const double e = std::exp(scores[i] - m);
    out[i] = e;
    z += e;
  }
  for (int i : active) out[i] /= z;
  return out;
}

// ---------------------------------------------------------------------------
// Random initialization helpers
// ---------------------------------------------------------------------------

inline DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev,
                                   std::mt19937_64& rng) {
  DenseMatrix m(rows, cols);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : m.values) x = dist(rng);
  return m;
}

inline DenseVector gaussian_vector(std::size_t dim, double stddev, std::mt19937_64& rng) {
  DenseVector v(dim, 0.0);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : v) x = dist(rng);
  return v;
}

}  // namespace dysr
