#pragma once

// Alternating two-optimizer training. Requirements stream through in
// temporal order, grouped into batches; within a batch every supervised
// update (opt1 over the alignment and matching parameters, scored against
// the representation snapshot from the end of the previous batch) runs
// before any unsupervised update (opt2 over the point-process parameters,
// gradient-clipped). The graph state carries across batches; at each epoch
// boundary the full state (A, S, last_update, Z) is restored to the
// post-init checkpoint: every epoch replays the same event stream, so the
// counts must not inflate and the representation trajectory is re-rolled
// from Z0 under the current parameters. Optimizer state and parameters
// persist across epochs.
//
// Early stopping watches F1@5 on a temporal validation tail of the training
// requirements; the best-epoch parameters and state are retained.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dysr/data.hpp"
#include "dysr/dynrep.hpp"
#include "dysr/eval.hpp"
#include "dysr/graph_state.hpp"
#include "dysr/optimizer.hpp"
#include "dysr/recommend.hpp"
#include "dysr/rng.hpp"
#include "dysr/types.hpp"

namespace dysr {

struct AblationSwitches {
  bool rand_init = false;    // random service init instead of provided vectors
  bool static_z = false;     // no unsupervised task; representations stay Z0
  bool no_transform = false; // score the raw requirement vector directly
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 50;
  double clip = 100.0;  // opt2 per-entry gradient clip
  double lr1 = 1e-3;
  double lr2 = 1e-3;
  int negative_factor = 6;
  int nonevent_factor = 5;
  double time_scale = 30.0;
  Activation activation = Activation::kTanh;
  NoneventForm nonevent_form = NoneventForm::kSurvival;
  int patience = 5;
  double validation_fraction = 0.1;
  std::uint64_t seed = 1;
  AblationSwitches ablation;
  bool log_ops = false;

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (negative_factor < 1 || nonevent_factor < 1)
      throw std::invalid_argument("config: sampling factors must be >= 1");
    if (validation_fraction < 0.0 || validation_fraction >= 1.0)
      throw std::invalid_argument("config: validation_fraction must be in [0, 1)");
    if (epochs < 0) throw std::invalid_argument("config: epochs must be nonnegative");
  }
};

struct TrainReport {
  std::vector<double> epoch_l1;  // per-epoch means over requirements
  std::vector<double> epoch_l2;
  std::vector<std::vector<double>> batch_l1;  // per-epoch, per-batch means
  std::vector<std::vector<double>> batch_l2;
  std::vector<double> val_f1_trace;
  int best_epoch = 0;  // 1-based; 0 when no epoch ran
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  double max_clipped_grad = 0.0;  // opt2 clipping-hook observable
  std::vector<std::string> op_log;
};

/// Service init vectors, honoring the random-initialization ablation.
inline std::vector<DenseVector> build_initial_z(const std::vector<ServiceRecord>& services,
                                                std::size_t d_s, bool rand_init,
                                                std::uint64_t seed) {
  std::vector<DenseVector> z0;
  z0.reserve(services.size());
  if (rand_init) {
    auto rng = make_stream(seed, "init/z");
    for (std::size_t i = 0; i < services.size(); ++i)
      z0.push_back(gaussian_vector(d_s, 0.1, rng));
    return z0;
  }
  for (const ServiceRecord& s : services) {
    if (s.z0.size() != d_s)
      throw std::invalid_argument("service '" + s.id + "' has no " + std::to_string(d_s) +
                                  "-dim init vector");
    z0.push_back(s.z0);
  }
  return z0;
}

namespace detail {

inline void step_rec(AdamOptimizer& opt, RecParams& rec, const RecGrads& g,
                     std::vector<std::string>* op_log) {
  if (!rec.no_transform) {
    opt.step("recommend.w_psi", rec.w_psi.values, g.w_psi.values);
    if (op_log) op_log->push_back("opt1:recommend.w_psi");
    opt.step("recommend.b_psi", rec.b_psi, g.b_psi);
    if (op_log) op_log->push_back("opt1:recommend.b_psi");
  }
  opt.step("recommend.w_lambda", rec.w_lambda.values, g.w_lambda.values);
  if (op_log) op_log->push_back("opt1:recommend.w_lambda");
}

inline void step_dyrep(AdamOptimizer& opt, DyRepParams& dy, const DyRepGrads& g,
                       std::vector<std::string>* op_log) {
  opt.step("dyrep.w_a", dy.w_a.values, g.w_a.values);
  opt.step("dyrep.w_rec", dy.w_rec.values, g.w_rec.values);
  opt.step("dyrep.w_t", dy.w_t, g.w_t);
  opt.step("dyrep.w_h", dy.w_h.values, g.w_h.values);
  std::vector<double> rho{dy.rho}, rho_g{g.rho};
  opt.step("dyrep.rho", rho, rho_g);
  dy.rho = rho[0];
  opt.step("dyrep.omega", dy.omega, g.omega);
  if (op_log) op_log->push_back("opt2:dyrep");
}

inline double validation_f1_at_5(const std::vector<RequirementSample>& val,
                                 DynamicGraphState& state, const RecParams& rec,
                                 const DyRepParams& dy) {
  if (val.empty()) return std::numeric_limits<double>::quiet_NaN();
  EvalOptions opt;
  opt.mode = EvalMode::kFrozen;
  opt.n_list = {5};
  return evaluate(val, state, rec, dy, opt).mean.at(5).f1;
}

}  // namespace detail

/// Runs the alternating loop over the training samples, mutating the state
/// and both parameter sets in place. On return they hold the best-epoch
/// values (by validation F1@5 when a validation tail exists, else the final
/// epoch).
inline TrainReport train(const std::vector<RequirementSample>& samples, const TrainConfig& cfg,
                         DynamicGraphState& state, RecParams& rec, DyRepParams& dy) {
  cfg.validate();
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].t < samples[i - 1].t)
      throw std::invalid_argument("train: samples not sorted ascending by timestamp");

  const auto t_start = std::chrono::steady_clock::now();
  TrainReport report;
  report.seed = cfg.seed;

  const std::size_t n_val =
      static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(samples.size()));
  const std::vector<RequirementSample> fit(samples.begin(), samples.end() - n_val);
  const std::vector<RequirementSample> val(samples.end() - n_val, samples.end());

  const GraphSnapshot post_init = state.snapshot();
  AdamOptimizer opt1(AdamConfig{cfg.lr1, 0.9, 0.999, 1e-8, 0.0});
  AdamOptimizer opt2(AdamConfig{cfg.lr2, 0.9, 0.999, 1e-8, cfg.clip});
  auto rng_neg = make_stream(cfg.seed, "negatives");
  auto rng_non = make_stream(cfg.seed, "nonevents");
  std::vector<std::string>* op_log = cfg.log_ops ? &report.op_log : nullptr;

  double best_f1 = -1.0;
  int epochs_since_best = 0;
  GraphSnapshot best_state;
  RecParams best_rec;
  DyRepParams best_dy;
  bool have_best = false;

  const int n_services = state.service_count();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    state.restore(post_init);
    std::vector<double> batch_l1_means, batch_l2_means;
    double epoch_l1 = 0.0, epoch_l2 = 0.0;
    std::size_t epoch_l1_count = 0, epoch_l2_count = 0;

    for (std::size_t begin = 0; begin < fit.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, fit.size());
      const std::size_t batch_index = begin / cfg.batch_size;

      // Phase 1: supervised steps against the snapshot entering this batch.
      const std::vector<DenseVector> z_snapshot = state.representations();
      double batch_l1 = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const RequirementSample& r = fit[i];
        const std::vector<int> neg =
            sample_negatives(r.components, n_services, rng_neg, cfg.negative_factor);
        const SupervisedEval ev = supervised_loss(rec, r.v_r, z_snapshot, r.components, neg);
        if (!std::isfinite(ev.loss))
          throw std::runtime_error("train: non-finite L1 at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(batch_index) + " requirement " +
                                   r.id);
        const RecGrads g = supervised_grads(rec, r.v_r, z_snapshot, r.components, neg);
        detail::step_rec(opt1, rec, g, op_log);
        batch_l1 += ev.loss;
      }
      batch_l1 /= static_cast<double>(end - begin);
      batch_l1_means.push_back(batch_l1);
      epoch_l1 += batch_l1 * static_cast<double>(end - begin);
      epoch_l1_count += end - begin;

      // Phase 2: unsupervised steps; events mutate the live state.
      if (!cfg.ablation.static_z) {
        double batch_l2 = 0.0;
        std::size_t batch_l2_count = 0;
        for (std::size_t i = begin; i < end; ++i) {
          const RequirementSample& r = fit[i];
          const std::vector<CoInvocationEvent> events = generate_events(r.components, r.t);
          if (events.empty()) continue;
          EventTape tape = process_event_batch(state, dy, events);
          const std::vector<CoInvocationEvent> nonevents =
              sample_nonevents(n_services, events, rng_non, cfg.nonevent_factor);
          attach_nonevents(tape, state, nonevents);
          const EventBatchLoss loss = unsupervised_loss_from_tape(tape, dy, cfg.nonevent_form);
          if (!std::isfinite(loss.total()))
            throw std::runtime_error("train: non-finite L2 at epoch " + std::to_string(epoch) +
                                     " batch " + std::to_string(batch_index) + " requirement " +
                                     r.id);
          const DyRepGrads g = unsupervised_grads(tape, dy, cfg.nonevent_form);
          detail::step_dyrep(opt2, dy, g, op_log);
          batch_l2 += loss.total();
          batch_l2_count += 1;
        }
        if (batch_l2_count > 0) {
          batch_l2 /= static_cast<double>(batch_l2_count);
          batch_l2_means.push_back(batch_l2);
          epoch_l2 += batch_l2 * static_cast<double>(batch_l2_count);
          epoch_l2_count += batch_l2_count;
        }
      }
    }

    report.batch_l1.push_back(std::move(batch_l1_means));
    report.batch_l2.push_back(std::move(batch_l2_means));
    report.epoch_l1.push_back(epoch_l1_count ? epoch_l1 / epoch_l1_count : 0.0);
    report.epoch_l2.push_back(epoch_l2_count ? epoch_l2 / epoch_l2_count : 0.0);

    const double val_f1 = detail::validation_f1_at_5(val, state, rec, dy);
    report.val_f1_trace.push_back(val_f1);

    if (!val.empty()) {
      if (val_f1 > best_f1) {
        best_f1 = val_f1;
        report.best_epoch = epoch;
        best_state = state.snapshot();
        best_rec = rec;
        best_dy = dy;
        have_best = true;
        epochs_since_best = 0;
      } else {
        epochs_since_best += 1;
        if (cfg.patience > 0 && epochs_since_best >= cfg.patience) break;
      }
    } else {
      report.best_epoch = epoch;
    }
  }

  if (have_best) {
    state.restore(best_state);
    rec = best_rec;
    dy = best_dy;
  }
  report.max_clipped_grad = opt2.max_effective_grad();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

// ---------------------------------------------------------------------------
// Multi-seed orchestration
// ---------------------------------------------------------------------------

struct SeedOutcome {
  std::uint64_t seed = 0;
  TrainReport report;
  MetricsReport metrics;
};

struct MultiSeedReport {
  std::vector<SeedOutcome> runs;
  std::map<int, MetricTriple> mean;
  std::map<int, MetricTriple> stddev;
};

/// Initializes parameters for one seed from the named init streams.
inline std::pair<RecParams, DyRepParams> init_params(std::size_t d_r, std::size_t d_s,
                                                     const TrainConfig& cfg) {
  auto rng_rec = make_stream(cfg.seed, "init/rec");
  auto rng_dy = make_stream(cfg.seed, "init/dyrep");
  RecParams rec = init_rec_params(d_r, d_s, rng_rec, cfg.ablation.no_transform);
  DyRepParams dy = init_dyrep_params(d_s, rng_dy, cfg.activation, cfg.time_scale);
  return {std::move(rec), std::move(dy)};
}

/// Trains and evaluates one fully isolated run for the given config.
inline SeedOutcome run_single(const CorpusSplit& split,
                              const std::vector<ServiceRecord>& services, std::size_t d_s,
                              const TrainConfig& cfg, const EvalOptions& eval_opt,
                              DynamicGraphState* final_state = nullptr,
                              RecParams* final_rec = nullptr, DyRepParams* final_dy = nullptr) {
  const std::size_t d_r =
      split.train.empty() ? (split.test.empty() ? 0 : split.test.front().v_r.size())
                          : split.train.front().v_r.size();
  DynamicGraphState state = init_from_history(
      split.init_history, build_initial_z(services, d_s, cfg.ablation.rand_init, cfg.seed));
  auto [rec, dy] = init_params(d_r, d_s, cfg);

  SeedOutcome out;
  out.seed = cfg.seed;
  out.report = train(split.train, cfg, state, rec, dy);

  EvalOptions opt = eval_opt;
  opt.static_z = cfg.ablation.static_z;
  out.metrics = evaluate(split.test, state, rec, dy, opt);
  if (final_state) *final_state = std::move(state);
  if (final_rec) *final_rec = std::move(rec);
  if (final_dy) *final_dy = std::move(dy);
  return out;
}

/// k isolated trainings with seeds seed .. seed+k-1; per-metric mean and
/// standard deviation over the runs.
inline MultiSeedReport run_seeds(const CorpusSplit& split,
                                 const std::vector<ServiceRecord>& services, std::size_t d_s,
                                 const TrainConfig& cfg, int k, const EvalOptions& eval_opt) {
  if (k < 1) throw std::invalid_argument("run_seeds: k must be at least 1");
  MultiSeedReport multi;
  for (int i = 0; i < k; ++i) {
    TrainConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(i);
    multi.runs.push_back(run_single(split, services, d_s, c, eval_opt));
  }
  for (int n : eval_opt.n_list) {
    MetricTriple mean, var;
    for (const SeedOutcome& run : multi.runs) {
      const MetricTriple& m = run.metrics.mean.at(n);
      mean.precision += m.precision;
      mean.recall += m.recall;
      mean.f1 += m.f1;
    }
    const double kk = static_cast<double>(k);
    mean.precision /= kk;
    mean.recall /= kk;
    mean.f1 /= kk;
    for (const SeedOutcome& run : multi.runs) {
      const MetricTriple& m = run.metrics.mean.at(n);
      var.precision += (m.precision - mean.precision) * (m.precision - mean.precision);
      var.recall += (m.recall - mean.recall) * (m.recall - mean.recall);
      var.f1 += (m.f1 - mean.f1) * (m.f1 - mean.f1);
    }
    multi.mean[n] = mean;
    multi.stddev[n] = {std::sqrt(var.precision / kk), std::sqrt(var.recall / kk),
                       std::sqrt(var.f1 / kk)};
  }
  return multi;
}

}  // namespace dysr
