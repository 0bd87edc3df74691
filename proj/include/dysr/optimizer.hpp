#pragma once

// Adaptive-moment optimizer with optional per-entry gradient clipping.
// Parameter tensors are registered lazily by name; each named slot keeps its
// own moment accumulators and step counter.

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dysr {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 0.0;  // 0 disables clipping
};

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  explicit AdamOptimizer(AdamConfig cfg) : cfg_(cfg) {}

  /// One update of `params` in place. Gradient entries are clamped to
  /// [-clip, clip] before entering the moment estimates.
  void step(const std::string& name, std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size())
      throw std::invalid_argument("adam_step: params/grads shape mismatch for '" + name + "'");
    Slot& slot = slots_[name];
    if (slot.m.empty()) {
      slot.m.assign(params.size(), 0.0);
      slot.v.assign(params.size(), 0.0);
    } else if (slot.m.size() != params.size()) {
      throw std::invalid_argument("adam_step: parameter '" + name + "' changed shape");
    }
    slot.t += 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(slot.t));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(slot.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      double g = grads[i];
      if (cfg_.clip > 0.0) {
        if (g > cfg_.clip) g = cfg_.clip;
        if (g < -cfg_.clip) g = -cfg_.clip;
      }
      if (std::abs(g) > max_effective_grad_) max_effective_grad_ = std::abs(g);
      slot.m[i] = cfg_.beta1 * slot.m[i] + (1.0 - cfg_.beta1) * g;
      slot.v[i] = cfg_.beta2 * slot.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = slot.m[i] / bc1;
      const double vhat = slot.v[i] / bc2;
      params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }

  long step_count(const std::string& name) const {
    auto it = slots_.find(name);
    return it == slots_.end() ? 0 : it->second.t;
  }

  /// Largest absolute gradient entry that entered a moment update so far.
  /// With clipping enabled this never exceeds the clip value.
  double max_effective_grad() const { return max_effective_grad_; }
  void reset_effective_grad_tracker() { max_effective_grad_ = 0.0; }

  const AdamConfig& config() const { return cfg_; }

 private:
  struct Slot {
    std::vector<double> m, v;
    long t = 0;
  };

  AdamConfig cfg_;
  std::map<std::string, Slot> slots_;
  double max_effective_grad_ = 0.0;
};

}  // namespace dysr
