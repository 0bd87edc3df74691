#pragma once

// Randomized gradient-fidelity harness over both loss paths. Each instance
// draws a tiny problem, computes the analytic gradients, and compares them
// against central finite differences of the very objective the analytic code
// differentiates (for the unsupervised side that is the recorded-tape
// objective; see dynrep.hpp). Reports the worst relative error per tensor.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dysr/dynrep.hpp"
#include "dysr/gradcheck.hpp"
#include "dysr/graph_state.hpp"
#include "dysr/recommend.hpp"
#include "dysr/rng.hpp"
#include "dysr/types.hpp"

namespace dysr {

struct GradCheckOptions {
  int instances = 20;
  std::uint64_t seed = 7;
  std::size_t d_r = 6;
  std::size_t d_s = 4;
  int services = 5;
  int events = 3;
  double h = 1e-5;
  double tolerance = 1e-4;
  std::string corrupt_tensor;  // test hook: perturbs one analytic tensor
};

struct GradCheckRow {
  std::string tensor;
  double max_rel_err = 0.0;
  bool ok = true;
};

inline std::vector<GradCheckRow> run_gradcheck(const GradCheckOptions& opt) {
  std::map<std::string, double> worst;
  auto record = [&](const std::string& tensor, std::vector<double> analytic,
                    const std::vector<double>& numeric) {
    if (opt.corrupt_tensor == tensor && !analytic.empty()) analytic[0] += 1.0;
    const double err = max_rel_error(analytic, numeric);
    auto [it, inserted] = worst.emplace(tensor, err);
    if (!inserted && err > it->second) it->second = err;
  };

  for (int inst = 0; inst < opt.instances; ++inst) {
    const std::uint64_t seed = opt.seed + static_cast<std::uint64_t>(inst);
    auto rng = make_stream(seed, "gradcheck");
    std::normal_distribution<double> unit(0.0, 1.0);

    // --- Supervised path -------------------------------------------------
    {
      RecParams rec = init_rec_params(opt.d_r, opt.d_s, rng);
      std::vector<DenseVector> z(opt.services);
      for (auto& v : z) v = gaussian_vector(opt.d_s, 1.0, rng);
      DenseVector v_r = gaussian_vector(opt.d_r, 1.0, rng);
      std::uniform_int_distribution<int> pick(0, opt.services - 1);
      const int pos = pick(rng);
      std::vector<int> positives{pos};
      std::vector<int> negatives;
      for (int s = 0; s < opt.services; ++s)
        if (s != pos) negatives.push_back(s);

      const RecGrads analytic = supervised_grads(rec, v_r, z, positives, negatives);
      ParamBlock blocks[] = {
          {"recommend.w_psi", rec.w_psi.values.data(), rec.w_psi.values.size()},
          {"recommend.b_psi", rec.b_psi.data(), rec.b_psi.size()},
          {"recommend.w_lambda", rec.w_lambda.values.data(), rec.w_lambda.values.size()},
      };
      auto loss_fn = [&]() {
        return supervised_loss(rec, v_r, z, positives, negatives).loss;
      };
      const auto numeric = finite_diff_grad(loss_fn, blocks, opt.h);
      record("recommend.w_psi", analytic.w_psi.values, numeric[0]);
      record("recommend.b_psi", analytic.b_psi, numeric[1]);
      record("recommend.w_lambda", analytic.w_lambda.values, numeric[2]);
    }

    // --- Unsupervised path ------------------------------------------------
    {
      DyRepParams dy = init_dyrep_params(opt.d_s, rng);
      std::vector<DenseVector> z0(opt.services);
      for (auto& v : z0) v = gaussian_vector(opt.d_s, 1.0, rng);

      // One seed mashup so neighborhoods are nonempty from the start.
      RequirementSample seed_mashup;
      seed_mashup.id = "seed";
      seed_mashup.t = 0.0;
      std::uniform_int_distribution<int> pick(0, opt.services - 1);
      std::set<int> comp;
      const std::size_t seed_size = std::min<std::size_t>(3, opt.services);
      while (comp.size() < seed_size) comp.insert(pick(rng));
      seed_mashup.components.assign(comp.begin(), comp.end());
      DynamicGraphState state = init_from_history({seed_mashup}, z0);

      std::vector<CoInvocationEvent> events;
      for (int e = 0; e < opt.events; ++e) {
        int u = pick(rng), v = pick(rng);
        while (v == u) v = pick(rng);
        events.push_back({u, v, static_cast<double>(e + 1)});
      }
      EventTape tape = process_event_batch(state, dy, events);
      auto rng_non = make_stream(seed, "gradcheck/nonevents");
      const auto nonevents = sample_nonevents(opt.services, events, rng_non);
      attach_nonevents(tape, state, nonevents);

      const DyRepGrads analytic = unsupervised_grads(tape, dy);
      ParamBlock blocks[] = {
          {"dyrep.w_a", dy.w_a.values.data(), dy.w_a.values.size()},
          {"dyrep.w_rec", dy.w_rec.values.data(), dy.w_rec.values.size()},
          {"dyrep.w_t", dy.w_t.data(), dy.w_t.size()},
          {"dyrep.w_h", dy.w_h.values.data(), dy.w_h.values.size()},
          {"dyrep.rho", &dy.rho, 1},
          {"dyrep.omega", dy.omega.data(), dy.omega.size()},
      };
      auto loss_fn = [&]() { return unsupervised_loss_from_tape(tape, dy).total(); };
      const auto numeric = finite_diff_grad(loss_fn, blocks, opt.h);
      record("dyrep.w_a", analytic.w_a.values, numeric[0]);
      record("dyrep.w_rec", analytic.w_rec.values, numeric[1]);
      record("dyrep.w_t", analytic.w_t, numeric[2]);
      record("dyrep.w_h", analytic.w_h.values, numeric[3]);
      record("dyrep.rho", {analytic.rho}, numeric[4]);
      record("dyrep.omega", analytic.omega, numeric[5]);
    }
  }

  std::vector<GradCheckRow> rows;
  for (const auto& [tensor, err] : worst)
    rows.push_back({tensor, err, err < opt.tolerance});
  return rows;
}

}  // namespace dysr
