#pragma once

// Central finite-difference gradient oracle. The loss closure reads the
// parameters through the registered blocks; coordinates are perturbed in
// place and restored after each probe.

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dysr {

struct ParamBlock {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
};

inline std::vector<std::vector<double>> finite_diff_grad(
    const std::function<double()>& loss_fn, std::span<ParamBlock> blocks, double h = 1e-5) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  std::vector<std::vector<double>> grads;
  grads.reserve(blocks.size());
  for (const ParamBlock& b : blocks) {
    std::vector<double> g(b.size, 0.0);
    for (std::size_t i = 0; i < b.size; ++i) {
      const double saved = b.data[i];
      b.data[i] = saved + h;
      const double fp = loss_fn();
      b.data[i] = saved - h;
      const double fm = loss_fn();
      b.data[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("finite_diff_grad: non-finite loss while probing '" + b.name +
                                 "'");
      g[i] = (fp - fm) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

/// Relative error with a floor on the denominator so near-zero pairs compare
/// on an absolute scale.
inline double max_rel_error(std::span<const double> analytic, std::span<const double> numeric,
                            double floor = 1e-3) {
  if (analytic.size() != numeric.size())
    throw std::invalid_argument("max_rel_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

}  // namespace dysr
