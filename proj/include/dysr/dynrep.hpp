#pragma once

// Event-driven representation learning on the co-invocation graph.
//
// Per event (u, v, t):
//   lambda = psi * log(1 + exp(omega . [z_u; z_v] / psi))     pre-event z
//   h_j    = per-dim max over neighbors r of q_r * (W_h z_r)  q = softmax of
//            the attention row restricted to the neighbor support
//   z_j(t) = act(W_a h_j + W_rec z_j_prev + W_t * dt)         both endpoints,
//            dt = (t - last_update_j) / time_scale
// followed by the topology/attention update with lambda.
//
// The batch loss is L_events + L_nonevents where L_events = -sum log lambda_p
// over the batch's events and L_nonevents is a Monte Carlo survival term over
// sampled non-event pairs, evaluated on the post-batch representations.
//
// Gradient truncation happens at requirement boundaries: every update and
// intensity inside one requirement's event batch is differentiated (the
// batch forms a shallow DAG of update steps, at most a few dozen), while
// representations entering the batch, the attention weights, and the time
// gaps are constants. The recorded tape makes this truncated objective a
// pure function of the parameters, so the analytic gradients below can be
// checked against central finite differences on the very same function.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dysr/graph_state.hpp"
#include "dysr/numerics.hpp"
#include "dysr/rng.hpp"

namespace dysr {

enum class Activation { kTanh, kLogistic };

inline double apply_activation(Activation a, double x) {
  return a == Activation::kTanh ? std::tanh(x) : logistic(x);
}

/// Derivative expressed through the activation output.
inline double activation_grad_from_value(Activation a, double y) {
  return a == Activation::kTanh ? 1.0 - y * y : y * (1.0 - y);
}

struct DyRepParams {
  DenseMatrix w_a;    // d_s x d_s, aggregation term
  DenseMatrix w_rec;  // d_s x d_s, self-propagation term
  DenseVector w_t;    // d_s, exogenous drive (scaled time gap)
  DenseMatrix w_h;    // d_s x d_s, neighbor projection inside aggregation
  double rho = 0.0;   // unconstrained; psi = softplus(rho) keeps psi > 0
  DenseVector omega;  // 2 * d_s, compatibility direction over [z_u; z_v]
  Activation activation = Activation::kTanh;
  double time_scale = 30.0;  // days per unit of exogenous drive

  std::size_t dim() const { return w_t.size(); }
  double psi() const { return softplus(rho); }
};

/// Stability-oriented initialization: the recurrent term starts at the
/// identity with the aggregation and exogenous terms small, so an untrained
/// update is close to a no-op and representations are not scrambled before
/// the loss has shaped the maps. Aggressive random initial maps erase every
/// representation within one epoch of events, which truncated training
/// cannot repair.
inline DyRepParams init_dyrep_params(std::size_t d_s, std::mt19937_64& rng,
                                     Activation act = Activation::kTanh,
                                     double time_scale = 30.0) {
  DyRepParams p;
  const double std_mat = 1.0 / std::sqrt(static_cast<double>(d_s));
  p.w_a = gaussian_matrix(d_s, d_s, 0.05 * std_mat, rng);
  p.w_rec = gaussian_matrix(d_s, d_s, 0.03 * std_mat, rng);
  for (std::size_t i = 0; i < d_s; ++i) p.w_rec(i, i) += 1.0;
  p.w_t = gaussian_vector(d_s, 1e-4, rng);
  p.w_h = gaussian_matrix(d_s, d_s, 0.3 * std_mat, rng);
  p.rho = 0.5413248546129181;  // softplus(rho) = 1
  p.omega = gaussian_vector(2 * d_s, 1.0 / std::sqrt(2.0 * static_cast<double>(d_s)), rng);
  p.activation = act;
  p.time_scale = time_scale;
  return p;
}

/// Conditional intensity of a co-invocation between two representations,
/// concatenated in (u, v) order. Strictly positive.
inline double intensity(const DyRepParams& p, const DenseVector& z_u, const DenseVector& z_v) {
  if (z_u.size() != p.dim() || z_v.size() != p.dim())
    throw std::invalid_argument("intensity: representation dimension mismatch");
  double x = 0.0;
  for (std::size_t i = 0; i < z_u.size(); ++i) x += p.omega[i] * z_u[i];
  for (std::size_t i = 0; i < z_v.size(); ++i) x += p.omega[p.dim() + i] * z_v[i];
  return scaled_softplus(x, p.psi());
}

// ---------------------------------------------------------------------------
// Recorded update inputs (the one-step tape)
// ---------------------------------------------------------------------------

/// Everything one representation update reads: previous representation,
/// scaled time gap, and the neighbor softmax weights with the neighbor
/// representations at that moment. The *_rec indices point at the update
/// step (within the same batch tape) that produced each representation
/// value; -1 marks a value that predates the batch and enters as a
/// constant.
struct UpdateInputs {
  int service = -1;
  double dt = 0.0;  // already divided by time_scale
  DenseVector z_prev;
  int z_prev_rec = -1;
  std::vector<int> nbr_service;
  std::vector<double> nbr_weight;
  std::vector<DenseVector> nbr_z;
  std::vector<int> nbr_rec;
};

/// Aggregation output for recorded inputs: per-dimension max over neighbors
/// of weight * (W_h z_nbr); zero vector when the neighborhood is empty. The
/// argmax index per dimension is returned for the backward pass.
inline DenseVector compute_aggregate(const DyRepParams& p, const UpdateInputs& in,
                                     std::vector<int>* argmax = nullptr) {
  const std::size_t d = p.dim();
  DenseVector h(d, 0.0);
  if (argmax) argmax->assign(d, -1);
  if (in.nbr_weight.empty()) return h;
  for (std::size_t r = 0; r < in.nbr_weight.size(); ++r) {
    const DenseVector proj = matvec(p.w_h, in.nbr_z[r]);
    for (std::size_t k = 0; k < d; ++k) {
      const double cand = in.nbr_weight[r] * proj[k];
      if (r == 0 || cand > h[k]) {
        h[k] = cand;
        if (argmax) (*argmax)[k] = static_cast<int>(r);
      }
    }
  }
  return h;
}

/// Forward of one representation update from recorded inputs.
inline DenseVector compute_update(const DyRepParams& p, const UpdateInputs& in,
                                  DenseVector* h_out = nullptr,
                                  std::vector<int>* argmax = nullptr) {
  DenseVector h = compute_aggregate(p, in, argmax);
  DenseVector g = matvec(p.w_a, h);
  const DenseVector rec = matvec(p.w_rec, in.z_prev);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] += rec[k] + p.w_t[k] * in.dt;
  for (double& x : g) x = apply_activation(p.activation, x);
  if (h_out) *h_out = std::move(h);
  return g;
}

/// Snapshot of what an update of `s` at time `t` would read from the live
/// state. Throws on out-of-order events.
inline UpdateInputs make_update_inputs(const DynamicGraphState& state, const DyRepParams& p,
                                       int s, double t) {
  if (t < state.last_update(s))
    throw std::invalid_argument("update_representation: out-of-order event for service " +
                                std::to_string(s) + " (t=" + std::to_string(t) +
                                " < last_update=" + std::to_string(state.last_update(s)) + ")");
  UpdateInputs in;
  in.service = s;
  in.dt = (t - state.last_update(s)) / p.time_scale;
  in.z_prev = state.representation(s);
  const std::vector<int> nbrs = state.neighbors(s);
  if (!nbrs.empty()) {
    DenseVector scores(static_cast<std::size_t>(state.service_count()), 0.0);
    const auto& row = state.attention_row(s);
    for (const auto& [v, a] : row) scores[v] = a;
    const DenseVector w = softmax_masked(scores, nbrs);
    in.nbr_weight.reserve(nbrs.size());
    in.nbr_z.reserve(nbrs.size());
    for (int v : nbrs) {
      in.nbr_service.push_back(v);
      in.nbr_weight.push_back(w[v]);
      in.nbr_z.push_back(state.representation(v));
      in.nbr_rec.push_back(-1);
    }
  }
  return in;
}

/// Attention-weighted neighbor aggregation for a service in its current
/// state; the zero vector for an empty neighborhood.
inline DenseVector aggregate(const DynamicGraphState& state, const DyRepParams& p, int s) {
  UpdateInputs in = make_update_inputs(state, p, s, state.last_update(s));
  return compute_aggregate(p, in);
}

/// Applies one representation update for `s` at time `t` to the state and
/// returns the new representation.
inline DenseVector update_representation(DynamicGraphState& state, const DyRepParams& p, int s,
                                         double t) {
  UpdateInputs in = make_update_inputs(state, p, s, t);
  DenseVector z = compute_update(p, in);
  state.set_representation(s, z, t);
  return z;
}

// ---------------------------------------------------------------------------
// Batch processing with tape
// ---------------------------------------------------------------------------

struct EventTape {
  /// One endpoint of a recorded intensity: the representation value at that
  /// moment plus the index of the update step that produced it within this
  /// batch (-1 when it predates the batch and is therefore a constant).
  struct Endpoint {
    int service = -1;
    int record = -1;
    DenseVector z;
  };
  struct EventRec {
    Endpoint u, v;
  };
  struct NoneventRec {
    Endpoint a, b;
  };

  std::vector<UpdateInputs> updates;  // every update step, in order
  std::vector<EventRec> events;
  std::vector<double> event_lambda;  // recorded intensities
  std::vector<NoneventRec> nonevents;
  std::map<int, int> last_record_of;  // service -> latest update index
  double event_time = 0.0;

  std::size_t event_count() const { return event_lambda.size(); }
  std::size_t nonevent_count() const { return nonevents.size(); }

  Endpoint endpoint(int service, const DenseVector& z_now) const {
    auto it = last_record_of.find(service);
    return {service, it == last_record_of.end() ? -1 : it->second, z_now};
  }
};

/// Processes one event against the live state: intensity from the pre-event
/// representations, both endpoint updates from pre-event snapshots, then the
/// topology/attention update. Returns lambda; records onto the tape when one
/// is given.
inline double process_event(DynamicGraphState& state, const DyRepParams& p,
                            const CoInvocationEvent& o, EventTape* tape = nullptr) {
  const double t_u = state.last_update(o.u);
  const double t_v = state.last_update(o.v);
  if (o.t < std::max(t_u, t_v))
    throw std::invalid_argument("process_event: out-of-order event at t=" + std::to_string(o.t));

  const DenseVector& z_u = state.representation(o.u);
  const DenseVector& z_v = state.representation(o.v);
  const double lambda = intensity(p, z_u, z_v);

  if (tape) {
    tape->events.push_back({tape->endpoint(o.u, z_u), tape->endpoint(o.v, z_v)});
    tape->event_lambda.push_back(lambda);
    tape->event_time = o.t;
  }

  // Both endpoints read the pre-event state, including each other's
  // pre-event representation inside the aggregation.
  UpdateInputs in_u = make_update_inputs(state, p, o.u, o.t);
  UpdateInputs in_v = make_update_inputs(state, p, o.v, o.t);
  if (tape) {
    auto annotate = [&](UpdateInputs& in) {
      auto it = tape->last_record_of.find(in.service);
      in.z_prev_rec = it == tape->last_record_of.end() ? -1 : it->second;
      for (std::size_t r = 0; r < in.nbr_service.size(); ++r) {
        auto nit = tape->last_record_of.find(in.nbr_service[r]);
        in.nbr_rec[r] = nit == tape->last_record_of.end() ? -1 : nit->second;
      }
    };
    annotate(in_u);
    annotate(in_v);
  }
  DenseVector new_u = compute_update(p, in_u);
  DenseVector new_v = compute_update(p, in_v);
  state.set_representation(o.u, std::move(new_u), o.t);
  state.set_representation(o.v, std::move(new_v), o.t);
  if (tape) {
    tape->updates.push_back(std::move(in_u));
    tape->last_record_of[o.u] = static_cast<int>(tape->updates.size()) - 1;
    tape->updates.push_back(std::move(in_v));
    tape->last_record_of[o.v] = static_cast<int>(tape->updates.size()) - 1;
  }

  state.apply_event_topology(o, lambda);
  return lambda;
}

/// Runs a requirement's event set in order, recording the tape used by the
/// loss and gradient computations.
inline EventTape process_event_batch(DynamicGraphState& state, const DyRepParams& p,
                                     std::span<const CoInvocationEvent> events) {
  EventTape tape;
  for (const CoInvocationEvent& o : events) process_event(state, p, o, &tape);
  return tape;
}

/// Uniform non-event pairs over ordered (u, v), u != v, excluding any pair
/// that co-invoked in the batch. Sample count is factor * batch size, all
/// stamped with the batch's event time.
inline std::vector<CoInvocationEvent> sample_nonevents(int n_services,
                                                       std::span<const CoInvocationEvent> events,
                                                       std::mt19937_64& rng, int factor = 5) {
  if (n_services < 2)
    throw std::invalid_argument("sample_nonevents: need at least 2 registered services");
  std::set<std::pair<int, int>> positives;
  double t = 0.0;
  for (const CoInvocationEvent& o : events) {
    positives.insert({std::min(o.u, o.v), std::max(o.u, o.v)});
    t = o.t;
  }
  const std::size_t want = factor * events.size();
  std::vector<CoInvocationEvent> out;
  out.reserve(want);
  std::uniform_int_distribution<int> pick(0, n_services - 1);
  std::size_t attempts = 0;
  const std::size_t max_attempts = 100 * want + 100;
  while (out.size() < want) {
    if (++attempts > max_attempts)
      throw std::runtime_error("sample_nonevents: candidate pair space exhausted after " +
                               std::to_string(attempts - 1) + " draws");
    const int u = pick(rng);
    const int v = pick(rng);
    if (u == v) continue;
    if (positives.count({std::min(u, v), std::max(u, v)})) continue;
    out.push_back({u, v, t});
  }
  return out;
}

/// Registers sampled non-events on the tape; representations of services the
/// batch never updated enter as constants.
inline void attach_nonevents(EventTape& tape, const DynamicGraphState& state,
                             std::span<const CoInvocationEvent> nonevents) {
  for (const CoInvocationEvent& o : nonevents)
    tape.nonevents.push_back({tape.endpoint(o.u, state.representation(o.u)),
                              tape.endpoint(o.v, state.representation(o.v))});
}

// ---------------------------------------------------------------------------
// Loss and gradients
// ---------------------------------------------------------------------------

enum class NoneventForm {
  kSurvival,     // mean of sampled non-event intensities
  kPaperLiteral  // sum of their logs
};

struct EventBatchLoss {
  double events = 0.0;     // -sum log lambda_p
  double nonevents = 0.0;  // survival term (form-dependent)
  std::size_t p = 0;
  std::size_t m = 0;

  double total() const { return events + nonevents; }
};

/// Loss from already-computed intensities.
inline EventBatchLoss unsupervised_loss(std::span<const double> lambda_events,
                                        std::span<const double> lambda_nonevents,
                                        NoneventForm form = NoneventForm::kSurvival) {
  EventBatchLoss out;
  out.p = lambda_events.size();
  out.m = lambda_nonevents.size();
  for (double l : lambda_events) {
    if (!(l > 0.0))
      throw std::logic_error("unsupervised_loss: non-positive event intensity");
    out.events -= std::log(l);
  }
  if (!lambda_nonevents.empty()) {
    double acc = 0.0;
    for (double l : lambda_nonevents) {
      if (!(l > 0.0))
        throw std::logic_error("unsupervised_loss: non-positive non-event intensity");
      acc += form == NoneventForm::kSurvival ? l : std::log(l);
    }
    out.nonevents = form == NoneventForm::kSurvival
                        ? acc / static_cast<double>(lambda_nonevents.size())
                        : acc;
  }
  return out;
}

namespace detail {

/// Recomputes update outputs as functions of the current parameters,
/// resolving every in-batch input through its producing record (records
/// reference strictly earlier records, so the recursion terminates). At the
/// parameters that recorded the tape the resolved values equal the recorded
/// ones bit for bit.
struct TapeForward {
  struct Node {
    DenseVector z;
    DenseVector h;
    std::vector<int> argmax;
    DenseVector z_prev;               // resolved
    std::vector<DenseVector> nbr_z;   // resolved
  };

  const EventTape& tape;
  const DyRepParams& p;
  std::map<int, Node> cache;

  const Node& node(int record) {
    auto it = cache.find(record);
    if (it != cache.end()) return it->second;
    const UpdateInputs& in = tape.updates[record];
    Node n;
    n.z_prev = in.z_prev_rec < 0 ? in.z_prev : node(in.z_prev_rec).z;
    n.nbr_z.resize(in.nbr_z.size());
    for (std::size_t r = 0; r < in.nbr_z.size(); ++r)
      n.nbr_z[r] = in.nbr_rec[r] < 0 ? in.nbr_z[r] : node(in.nbr_rec[r]).z;

    const std::size_t d = p.dim();
    n.h.assign(d, 0.0);
    n.argmax.assign(d, -1);
    for (std::size_t r = 0; r < in.nbr_weight.size(); ++r) {
      const DenseVector proj = matvec(p.w_h, n.nbr_z[r]);
      for (std::size_t k = 0; k < d; ++k) {
        const double cand = in.nbr_weight[r] * proj[k];
        if (r == 0 || cand > n.h[k]) {
          n.h[k] = cand;
          n.argmax[k] = static_cast<int>(r);
        }
      }
    }
    n.z = matvec(p.w_a, n.h);
    const DenseVector rec = matvec(p.w_rec, n.z_prev);
    for (std::size_t k = 0; k < d; ++k)
      n.z[k] = apply_activation(p.activation, n.z[k] + rec[k] + p.w_t[k] * in.dt);
    return cache.emplace(record, std::move(n)).first->second;
  }

  const DenseVector& z(const EventTape::Endpoint& e) {
    return e.record < 0 ? e.z : node(e.record).z;
  }
};

}  // namespace detail

/// The truncated batch objective as a pure function of the parameters: each
/// intensity reads representations recomputed through the single update step
/// that produced them (constants when that step predates the batch). At the
/// parameters that recorded the tape this equals the live-processing loss.
inline EventBatchLoss unsupervised_loss_from_tape(const EventTape& tape, const DyRepParams& p,
                                                  NoneventForm form = NoneventForm::kSurvival) {
  detail::TapeForward fwd{tape, p, {}};
  std::vector<double> lam_ev;
  lam_ev.reserve(tape.event_count());
  for (const EventTape::EventRec& e : tape.events)
    lam_ev.push_back(intensity(p, fwd.z(e.u), fwd.z(e.v)));
  std::vector<double> lam_non;
  lam_non.reserve(tape.nonevent_count());
  for (const EventTape::NoneventRec& ne : tape.nonevents)
    lam_non.push_back(intensity(p, fwd.z(ne.a), fwd.z(ne.b)));
  return unsupervised_loss(lam_ev, lam_non, form);
}

struct DyRepGrads {
  DenseMatrix w_a, w_rec, w_h;
  DenseVector w_t;
  double rho = 0.0;
  DenseVector omega;
};

/// Analytic gradients of unsupervised_loss_from_tape at the given
/// parameters. Intensity chains:
///   d(-log lambda)/d lambda = -1/lambda; survival uses 1/M (or 1/lambda in
///   the literal form); d lambda/d x = sig(x/psi) with x = omega . concat;
///   d lambda/d psi = softplus(x/psi) - (x/psi) sig(x/psi); d psi/d rho =
///   sig(rho).
/// Endpoint adjoints enter their producing update step and propagate in
/// reverse record order: through act'(g) into W_a (outer with h), W_rec
/// (outer with z_prev), W_t (times dt), through the max-pool argmax into
/// W_h, and onward into the producing records of z_prev and of the argmax
/// neighbors.
inline DyRepGrads unsupervised_grads(const EventTape& tape, const DyRepParams& p,
                                     NoneventForm form = NoneventForm::kSurvival) {
  const std::size_t d = p.dim();
  DyRepGrads g;
  g.w_a = DenseMatrix(d, d);
  g.w_rec = DenseMatrix(d, d);
  g.w_h = DenseMatrix(d, d);
  g.w_t.assign(d, 0.0);
  g.omega.assign(2 * d, 0.0);
  double d_psi = 0.0;
  const double psi = p.psi();

  detail::TapeForward fwd{tape, p, {}};
  std::map<int, DenseVector> record_adjoint;
  auto push_adjoint = [&](int record, std::size_t i, double v) {
    DenseVector& adj = record_adjoint.try_emplace(record, DenseVector(d, 0.0)).first->second;
    adj[i] += v;
  };

  auto backprop_pair = [&](const EventTape::Endpoint& a, const EventTape::Endpoint& b,
                           bool is_event, double inv_m) {
    const DenseVector za = fwd.z(a);
    const DenseVector zb = fwd.z(b);
    double x = 0.0;
    for (std::size_t i = 0; i < d; ++i) x += p.omega[i] * za[i] + p.omega[d + i] * zb[i];
    const ScaledSoftplusEval ev = scaled_softplus_eval(x, psi);
    const double dldl = is_event ? -1.0 / ev.value
                                 : (form == NoneventForm::kSurvival ? inv_m : 1.0 / ev.value);
    for (std::size_t i = 0; i < d; ++i) {
      g.omega[i] += dldl * ev.d_x * za[i];
      g.omega[d + i] += dldl * ev.d_x * zb[i];
    }
    d_psi += dldl * ev.d_psi;
    const double coef = dldl * ev.d_x;
    if (a.record >= 0)
      for (std::size_t i = 0; i < d; ++i) push_adjoint(a.record, i, coef * p.omega[i]);
    if (b.record >= 0)
      for (std::size_t i = 0; i < d; ++i) push_adjoint(b.record, i, coef * p.omega[d + i]);
  };

  for (const EventTape::EventRec& e : tape.events) backprop_pair(e.u, e.v, true, 0.0);
  const double inv_m =
      tape.nonevents.empty() ? 0.0 : 1.0 / static_cast<double>(tape.nonevents.size());
  for (const EventTape::NoneventRec& ne : tape.nonevents)
    backprop_pair(ne.a, ne.b, false, inv_m);

  // Reverse sweep: records only reference earlier records, so walking the
  // indices downward visits every adjoint after it is fully accumulated.
  for (int rec_idx = static_cast<int>(tape.updates.size()) - 1; rec_idx >= 0; --rec_idx) {
    auto it = record_adjoint.find(rec_idx);
    if (it == record_adjoint.end()) continue;
    const DenseVector& adj = it->second;
    const detail::TapeForward::Node& nf = fwd.node(rec_idx);
    const UpdateInputs& in = tape.updates[rec_idx];

    DenseVector delta_g(d, 0.0);
    for (std::size_t k = 0; k < d; ++k)
      delta_g[k] = adj[k] * activation_grad_from_value(p.activation, nf.z[k]);

    add_outer(g.w_a, delta_g, nf.h);
    add_outer(g.w_rec, delta_g, nf.z_prev);
    axpy(g.w_t, in.dt, delta_g);
    if (in.z_prev_rec >= 0) {
      const DenseVector back = matvec_transposed(p.w_rec, delta_g);
      for (std::size_t i = 0; i < d; ++i) push_adjoint(in.z_prev_rec, i, back[i]);
    }
    if (!in.nbr_weight.empty()) {
      const DenseVector delta_h = matvec_transposed(p.w_a, delta_g);
      for (std::size_t k = 0; k < d; ++k) {
        const int r = nf.argmax[k];
        if (r < 0) continue;
        const double w = in.nbr_weight[r] * delta_h[k];
        const DenseVector& zn = nf.nbr_z[r];
        double* row = g.w_h.values.data() + k * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += w * zn[j];
        if (in.nbr_rec[r] >= 0)
          for (std::size_t j = 0; j < d; ++j) push_adjoint(in.nbr_rec[r], j, w * p.w_h(k, j));
      }
    }
  }

  g.rho = d_psi * logistic(p.rho);
  return g;
}

}  // namespace dysr
