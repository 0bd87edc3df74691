#pragma once

// Supervised requirement->service matching: an affine alignment of the
// requirement vector into service space, a bilinear score against each
// service representation, and a negative-sampled binary cross-entropy loss
// computed in log-sigmoid form. With the alignment turned off (the
// space-ablation variant) the bilinear matrix takes shape d_s x d_r and
// scores the raw requirement vector directly.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dysr/numerics.hpp"

namespace dysr {

struct RecParams {
  DenseMatrix w_psi;     // d_s x d_r alignment map (empty when no_transform)
  DenseVector b_psi;     // d_s translation
  DenseMatrix w_lambda;  // d_s x d_s bilinear matching (d_s x d_r when no_transform)
  bool no_transform = false;

  std::size_t d_s() const { return w_lambda.rows; }
  std::size_t d_r() const { return no_transform ? w_lambda.cols : w_psi.cols; }
};

inline RecParams init_rec_params(std::size_t d_r, std::size_t d_s, std::mt19937_64& rng,
                                 bool no_transform = false) {
  RecParams p;
  p.no_transform = no_transform;
  if (no_transform) {
    p.w_lambda = gaussian_matrix(d_s, d_r, 1.0 / std::sqrt(static_cast<double>(d_r)), rng);
  } else {
    p.w_psi = gaussian_matrix(d_s, d_r, 1.0 / std::sqrt(static_cast<double>(d_r)), rng);
    p.b_psi.assign(d_s, 0.0);
    p.w_lambda = gaussian_matrix(d_s, d_s, 1.0 / std::sqrt(static_cast<double>(d_s)), rng);
  }
  return p;
}

/// Affine alignment of a requirement vector into service space.
inline DenseVector transform(const RecParams& p, const DenseVector& v_r) {
  if (p.no_transform)
    throw std::logic_error("transform: alignment disabled for this parameter set");
  DenseVector out = matvec(p.w_psi, v_r);
  axpy(out, 1.0, p.b_psi);
  return out;
}

/// Bilinear match score z_s^T W_Lambda aligned_r.
inline double match_score(const RecParams& p, const DenseVector& aligned_r,
                          const DenseVector& z_s) {
  if (z_s.size() != p.w_lambda.rows)
    throw std::invalid_argument("match_score: service representation dimension mismatch");
  const DenseVector wv = matvec(p.w_lambda, aligned_r);
  return dot(z_s, wv);
}

inline double match_prob(double score) { return logistic(score); }

/// Negative samples drawn uniformly without replacement from the complement
/// of the positives, capped by the complement size.
inline std::vector<int> sample_negatives(const std::vector<int>& positives, int universe,
                                         std::mt19937_64& rng, int factor = 6) {
  std::set<int> pos(positives.begin(), positives.end());
  std::vector<int> complement;
  complement.reserve(universe);
  for (int s = 0; s < universe; ++s)
    if (!pos.count(s)) complement.push_back(s);
  if (complement.empty())
    throw std::invalid_argument("sample_negatives: no candidate negatives outside C+");
  const std::size_t want =
      std::min(complement.size(), static_cast<std::size_t>(factor) * positives.size());
  for (std::size_t i = 0; i < want; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, complement.size() - 1);
    std::swap(complement[i], complement[pick(rng)]);
  }
  complement.resize(want);
  std::sort(complement.begin(), complement.end());
  return complement;
}

namespace detail {

inline DenseVector aligned_requirement(const RecParams& p, const DenseVector& v_r) {
  if (p.no_transform) {
    if (v_r.size() != p.w_lambda.cols)
      throw std::invalid_argument("requirement vector dimension mismatch");
    return v_r;
  }
  return transform(p, v_r);
}

inline void check_disjoint(const std::vector<int>& pos, const std::vector<int>& neg) {
  std::set<int> s(pos.begin(), pos.end());
  for (int n : neg)
    if (s.count(n))
      throw std::invalid_argument("supervised loss: C+ and C- overlap at service " +
                                  std::to_string(n));
}

}  // namespace detail

struct SupervisedEval {
  double loss = 0.0;
  std::vector<double> probs;  // positives first, then negatives
};

/// L1 = -sum over C+ u C- of [y log yhat + (1-y) log(1-yhat)], evaluated as
/// softplus terms on the raw scores so extreme scores cannot underflow.
inline SupervisedEval supervised_loss(const RecParams& p, const DenseVector& v_r,
                                      const std::vector<DenseVector>& z,
                                      const std::vector<int>& positives,
                                      const std::vector<int>& negatives) {
  detail::check_disjoint(positives, negatives);
  const DenseVector a = detail::aligned_requirement(p, v_r);
  const DenseVector wv = matvec(p.w_lambda, a);
  SupervisedEval out;
  auto score_one = [&](int s, bool positive) {
    if (s < 0 || static_cast<std::size_t>(s) >= z.size())
      throw std::invalid_argument("supervised_loss: service index " + std::to_string(s) +
                                  " not in snapshot");
    const double x = dot(z[s], wv);
    out.loss += positive ? softplus(-x) : softplus(x);
    out.probs.push_back(logistic(x));
  };
  for (int s : positives) score_one(s, true);
  for (int s : negatives) score_one(s, false);
  return out;
}

struct RecGrads {
  DenseMatrix w_psi;
  DenseVector b_psi;
  DenseMatrix w_lambda;
};

/// Analytic gradients of supervised_loss with the service representations
/// held constant. With e_s = yhat_s - y_s:
///   dL/dW_Lambda = sum e_s z_s a^T
///   dL/da        = sum e_s W_Lambda^T z_s,  dL/db = dL/da,
///   dL/dW_Psi    = (dL/da) v_r^T
inline RecGrads supervised_grads(const RecParams& p, const DenseVector& v_r,
                                 const std::vector<DenseVector>& z,
                                 const std::vector<int>& positives,
                                 const std::vector<int>& negatives) {
  detail::check_disjoint(positives, negatives);
  const DenseVector a = detail::aligned_requirement(p, v_r);
  const DenseVector wv = matvec(p.w_lambda, a);
  RecGrads g;
  g.w_lambda = DenseMatrix(p.w_lambda.rows, p.w_lambda.cols);
  DenseVector g_a(p.no_transform ? 0 : p.d_s(), 0.0);
  auto accumulate = [&](int s, double y) {
    if (s < 0 || static_cast<std::size_t>(s) >= z.size())
      throw std::invalid_argument("supervised_grads: service index " + std::to_string(s) +
                                  " not in snapshot");
    const double e = logistic(dot(z[s], wv)) - y;
    add_outer(g.w_lambda, z[s], a, e);
    if (!p.no_transform) {
      const DenseVector wtz = matvec_transposed(p.w_lambda, z[s]);
      axpy(g_a, e, wtz);
    }
  };
  for (int s : positives) accumulate(s, 1.0);
  for (int s : negatives) accumulate(s, 0.0);
  if (!p.no_transform) {
    g.b_psi = g_a;
    g.w_psi = DenseMatrix(p.w_psi.rows, p.w_psi.cols);
    add_outer(g.w_psi, g_a, v_r);
  }
  return g;
}

struct ScoredService {
  int service = -1;
  double score = 0.0;
  double prob = 0.0;
};

/// Top-N services by raw score, descending, ties broken by ascending id;
/// excluded ids never appear. Returns all candidates when N exceeds them.
inline std::vector<ScoredService> rank_services(const RecParams& p, const DenseVector& v_r,
                                                const std::vector<DenseVector>& z, std::size_t n,
                                                const std::set<int>& exclude = {}) {
  if (n < 1) throw std::invalid_argument("rank_services: N must be at least 1");
  if (z.empty()) throw std::invalid_argument("rank_services: empty snapshot");
  const DenseVector a = detail::aligned_requirement(p, v_r);
  const DenseVector wv = matvec(p.w_lambda, a);
  std::vector<ScoredService> scored;
  scored.reserve(z.size());
  for (std::size_t s = 0; s < z.size(); ++s) {
    if (exclude.count(static_cast<int>(s))) continue;
    const double x = dot(z[s], wv);
    scored.push_back({static_cast<int>(s), x, logistic(x)});
  }
  const std::size_t take = std::min(n, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + take, scored.end(),
                    [](const ScoredService& a, const ScoredService& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.service < b.service;
                    });
  scored.resize(take);
  return scored;
}

}  // namespace dysr
