#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "dysr/dynrep.hpp"
#include "dysr/gradcheck.hpp"
#include "dysr/gradcheck_suite.hpp"
#include "dysr/graph_state.hpp"
#include "dysr/rng.hpp"

using namespace dysr;

namespace {

DyRepParams zero_params(std::size_t d) {
  DyRepParams p;
  p.w_a = DenseMatrix(d, d);
  p.w_rec = DenseMatrix(d, d);
  p.w_t.assign(d, 0.0);
  p.w_h = DenseMatrix(d, d);
  p.rho = 0.5413248546129181;  // psi = 1
  p.omega.assign(2 * d, 0.0);
  return p;
}

DyRepParams random_params(std::size_t d, std::uint64_t seed) {
  auto rng = make_stream(seed, "dynrep-test");
  return init_dyrep_params(d, rng);
}

// Straight-line recomputation of the update equation, independent of the
// production code path (its own softmax and max-pool).
DenseVector oracle_update(const DyRepParams& p, const DynamicGraphState& s, int u, double t) {
  const std::size_t d = p.dim();
  const std::vector<int> nbrs = s.neighbors(u);
  DenseVector h(d, 0.0);
  if (!nbrs.empty()) {
    // softmax over the attention row values restricted to neighbors
    std::vector<double> w(nbrs.size(), 0.0);
    double mx = -1e300;
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const auto& row = s.attention_row(u);
      auto it = row.find(nbrs[i]);
      w[i] = it == row.end() ? 0.0 : it->second;
      mx = std::max(mx, w[i]);
    }
    double z = 0.0;
    for (double& x : w) {
      x = std::exp(x - mx);
      z += x;
    }
    for (double& x : w) x /= z;
    for (std::size_t k = 0; k < d; ++k) {
      double best = -1e300;
      for (std::size_t i = 0; i < nbrs.size(); ++i) {
        double proj = 0.0;
        for (std::size_t j = 0; j < d; ++j)
          proj += p.w_h(k, j) * s.representation(nbrs[i])[j];
        best = std::max(best, w[i] * proj);
      }
      h[k] = best;
    }
  }
  const double dt = (t - s.last_update(u)) / p.time_scale;
  DenseVector out(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    double acc = p.w_t[k] * dt;
    for (std::size_t j = 0; j < d; ++j) {
      acc += p.w_a(k, j) * h[j];
      acc += p.w_rec(k, j) * s.representation(u)[j];
    }
    out[k] = std::tanh(acc);
  }
  return out;
}

}  // namespace

TEST_CASE("aggregate conventions", "[dynrep]") {
  const std::size_t d = 3;
  DyRepParams p = random_params(d, 41);

  SECTION("isolated service yields the zero vector") {
    DynamicGraphState s(std::vector<DenseVector>(2, DenseVector(d, 1.0)));
    CHECK(aggregate(s, p, 0) == DenseVector(d, 0.0));
  }
  SECTION("single neighbor with weight one yields W_h z_r") {
    std::vector<DenseVector> z{{0.0, 0.0, 0.0}, {0.2, -1.0, 0.7}};
    DynamicGraphState s(z);
    s.apply_event_topology({0, 1, 1.0}, 0.5);
    const DenseVector h = aggregate(s, p, 0);
    const DenseVector expect = matvec(p.w_h, z[1]);
    for (std::size_t k = 0; k < d; ++k) CHECK(h[k] == Catch::Approx(expect[k]).margin(1e-12));
  }
  SECTION("two neighbors: per-coordinate max of weighted projections") {
    std::vector<DenseVector> z{{0, 0, 0}, {1.0, -2.0, 0.5}, {-0.5, 1.5, 2.0}};
    DynamicGraphState s(z);
    s.apply_event_topology({0, 1, 1.0}, 0.5);
    s.apply_event_topology({0, 2, 2.0}, 0.25);
    // softmax of the attention row over both neighbors
    const auto& row = s.attention_row(0);
    const double a1 = row.at(1), a2 = row.at(2);
    const double e1 = std::exp(a1 - std::max(a1, a2)), e2 = std::exp(a2 - std::max(a1, a2));
    const double q1 = e1 / (e1 + e2), q2 = e2 / (e1 + e2);
    const DenseVector p1 = matvec(p.w_h, z[1]);
    const DenseVector p2 = matvec(p.w_h, z[2]);
    const DenseVector h = aggregate(s, p, 0);
    for (std::size_t k = 0; k < d; ++k)
      CHECK(h[k] == Catch::Approx(std::max(q1 * p1[k], q2 * p2[k])).margin(1e-12));
  }
}

TEST_CASE("update_representation basics", "[dynrep]") {
  const std::size_t d = 3;

  SECTION("all-zero parameters map everything to tanh(0) = 0") {
    DyRepParams p = zero_params(d);
    DynamicGraphState s(std::vector<DenseVector>(2, DenseVector(d, 0.8)));
    s.apply_event_topology({0, 1, 0.5}, 0.5);
    const DenseVector z = update_representation(s, p, 0, 1.0);
    CHECK(z == DenseVector(d, 0.0));
    CHECK(s.last_update(0) == 1.0);
  }
  SECTION("identity self-propagation isolates tanh(z_prev)") {
    DyRepParams p = zero_params(d);
    p.w_rec = DenseMatrix::identity(d);
    std::vector<DenseVector> z{{0.3, -0.9, 2.0}};
    DynamicGraphState s(z);
    const DenseVector out = update_representation(s, p, 0, 12.0);
    for (std::size_t k = 0; k < d; ++k)
      CHECK(out[k] == Catch::Approx(std::tanh(z[0][k])).margin(1e-15));
  }
  SECTION("matches the straight-line oracle on a random instance") {
    DyRepParams p = random_params(d, 42);
    auto rng = make_stream(43, "dynrep-test");
    std::vector<DenseVector> z;
    for (int i = 0; i < 5; ++i) z.push_back(gaussian_vector(d, 1.0, rng));
    DynamicGraphState s(z);
    s.apply_event_topology({0, 1, 1.0}, 0.4);
    s.apply_event_topology({0, 2, 2.0}, 0.9);
    s.apply_event_topology({3, 4, 2.5}, 0.2);
    const DenseVector expect = oracle_update(p, s, 0, 7.0);
    const DenseVector got = update_representation(s, p, 0, 7.0);
    for (std::size_t k = 0; k < d; ++k) CHECK(got[k] == Catch::Approx(expect[k]).margin(1e-12));
  }
  SECTION("out-of-order update is rejected") {
    DyRepParams p = zero_params(d);
    DynamicGraphState s(std::vector<DenseVector>(1, DenseVector(d, 0.0)));
    update_representation(s, p, 0, 5.0);
    CHECK_THROWS_AS(update_representation(s, p, 0, 4.0), std::invalid_argument);
  }
}

TEST_CASE("intensity values and asymmetry", "[dynrep]") {
  const std::size_t d = 2;
  DyRepParams p = zero_params(d);

  SECTION("omega = 0 gives psi ln 2") {
    CHECK(intensity(p, {1.0, 2.0}, {3.0, 4.0}) ==
          Catch::Approx(std::log(2.0)).margin(1e-12));
  }
  SECTION("activation at 2 with psi = 1") {
    p.omega = {1.0, 0.0, 0.0, 0.0};
    CHECK(intensity(p, {2.0, 0.0}, {0.0, 0.0}) == Catch::Approx(2.126928).margin(1e-6));
  }
  SECTION("order matters in general") {
    DyRepParams q = random_params(d, 44);
    const DenseVector zu{0.3, -0.2}, zv{-1.0, 0.6};
    const double luv = intensity(q, zu, zv);
    const double lvu = intensity(q, zv, zu);
    CHECK(luv != lvu);  // omega is not symmetric under block swap
    CHECK(luv > 0.0);
    CHECK(lvu > 0.0);
  }
  SECTION("strictly increasing in the activation") {
    DyRepParams q = zero_params(1);
    q.omega = {1.0, 1.0};
    double prev = 0.0;
    for (double x = -30.0; x <= 30.0; x += 0.5) {
      const double l = intensity(q, {x / 2.0}, {x / 2.0});
      if (x > -30.0) CHECK(l > prev);
      prev = l;
    }
  }
}

TEST_CASE("process_event composes intensity, updates and topology", "[dynrep]") {
  const std::size_t d = 2;

  SECTION("zero parameters") {
    DyRepParams p = zero_params(d);
    DynamicGraphState s(std::vector<DenseVector>(2, DenseVector(d, 0.5)));
    const double lambda = process_event(s, p, {0, 1, 1.0});
    CHECK(lambda == Catch::Approx(std::log(2.0)).margin(1e-12));
    CHECK(s.representation(0) == DenseVector(d, 0.0));
    CHECK(s.representation(1) == DenseVector(d, 0.0));
    CHECK(s.count(0, 1) == 1);
    CHECK(s.attention_row(0).at(1) == Catch::Approx(1.0).margin(1e-15));
  }
  SECTION("first event in an empty graph uses initial representations") {
    DyRepParams p = random_params(d, 45);
    std::vector<DenseVector> z{{0.1, 0.2}, {0.3, -0.4}};
    DynamicGraphState s(z);
    const double expected = intensity(p, z[0], z[1]);
    CHECK(process_event(s, p, {0, 1, 1.0}) == Catch::Approx(expected).margin(1e-15));
  }
  SECTION("second event on the same pair sees post-first-event representations") {
    DyRepParams p = random_params(d, 46);
    std::vector<DenseVector> z{{0.1, 0.2}, {0.3, -0.4}};
    DynamicGraphState s(z);
    process_event(s, p, {0, 1, 1.0});
    const double expected = intensity(p, s.representation(0), s.representation(1));
    CHECK(process_event(s, p, {0, 1, 2.0}) == Catch::Approx(expected).margin(1e-15));
  }
  SECTION("out-of-order events propagate the error") {
    DyRepParams p = zero_params(d);
    DynamicGraphState s(std::vector<DenseVector>(2, DenseVector(d, 0.0)));
    process_event(s, p, {0, 1, 5.0});
    CHECK_THROWS_AS(process_event(s, p, {0, 1, 1.0}), std::invalid_argument);
  }
  SECTION("deterministic given state, params and event") {
    DyRepParams p = random_params(d, 47);
    std::vector<DenseVector> z{{0.1, 0.2}, {0.3, -0.4}, {0.0, 1.0}};
    DynamicGraphState a(z), b(z);
    const double la = process_event(a, p, {0, 1, 1.0});
    const double lb = process_event(b, p, {0, 1, 1.0});
    CHECK(la == lb);
    CHECK(a.representation(0) == b.representation(0));
  }
}

TEST_CASE("tanh updates stay inside (-1, 1)", "[dynrep]") {
  const std::size_t d = 4;
  DyRepParams p = random_params(d, 48);
  auto rng = make_stream(49, "dynrep-test");
  std::vector<DenseVector> z;
  for (int i = 0; i < 6; ++i) z.push_back(gaussian_vector(d, 3.0, rng));
  DynamicGraphState s(z);
  std::uniform_int_distribution<int> pick(0, 5);
  for (int e = 0; e < 200; ++e) {
    int u = pick(rng), v = pick(rng);
    while (v == u) v = pick(rng);
    process_event(s, p, {u, v, static_cast<double>(e)});
    for (double x : s.representation(u)) {
      CHECK(x > -1.0);
      CHECK(x < 1.0);
    }
  }
}

TEST_CASE("empty-neighborhood update degenerates to the two remaining terms", "[dynrep]") {
  const std::size_t d = 3;
  DyRepParams p = random_params(d, 50);
  std::vector<DenseVector> z{{0.4, -0.2, 0.9}};
  DynamicGraphState s(z);
  const double t = 6.0;
  const DenseVector got = update_representation(s, p, 0, t);
  const double dt = t / p.time_scale;
  DenseVector manual = matvec(p.w_rec, z[0]);
  for (std::size_t k = 0; k < d; ++k) manual[k] = std::tanh(manual[k] + p.w_t[k] * dt);
  for (std::size_t k = 0; k < d; ++k) CHECK(got[k] == Catch::Approx(manual[k]).margin(1e-14));
}

TEST_CASE("sample_nonevents contract", "[dynrep]") {
  std::vector<CoInvocationEvent> events{{0, 1, 3.0}};

  SECTION("P = 1 yields exactly five samples") {
    auto rng = make_stream(51, "nonevents");
    const auto ne = sample_nonevents(6, events, rng);
    CHECK(ne.size() == 5);
    for (const auto& o : ne) {
      CHECK(o.u != o.v);
      CHECK(o.t == 3.0);
      CHECK_FALSE((std::min(o.u, o.v) == 0 && std::max(o.u, o.v) == 1));
    }
  }
  SECTION("degenerate two-service universe reports exhaustion") {
    auto rng = make_stream(52, "nonevents");
    CHECK_THROWS_AS(sample_nonevents(2, events, rng), std::runtime_error);
  }
  SECTION("fewer than two services is rejected") {
    auto rng = make_stream(53, "nonevents");
    CHECK_THROWS_AS(sample_nonevents(1, events, rng), std::invalid_argument);
  }
  SECTION("seed-fixed runs are identical") {
    auto rng1 = make_stream(54, "nonevents");
    auto rng2 = make_stream(54, "nonevents");
    const auto a = sample_nonevents(9, events, rng1);
    const auto b = sample_nonevents(9, events, rng2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].u == b[i].u);
      CHECK(a[i].v == b[i].v);
    }
  }
}

TEST_CASE("unsupervised_loss analytic cases", "[dynrep]") {
  SECTION("single event at lambda = 1, no nonevents") {
    const double lam[] = {1.0};
    const EventBatchLoss l = unsupervised_loss(lam, {});
    CHECK(l.total() == Catch::Approx(0.0).margin(1e-15));
    CHECK(l.p == 1);
    CHECK(l.m == 0);
  }
  SECTION("survival form averages non-event intensities") {
    const double ev[] = {std::exp(1.0)};
    const double ne[] = {2.0, 4.0};
    const EventBatchLoss l = unsupervised_loss(ev, ne);
    CHECK(l.events == Catch::Approx(-1.0).margin(1e-12));
    CHECK(l.nonevents == Catch::Approx(3.0).margin(1e-12));
    CHECK(l.total() == Catch::Approx(2.0).margin(1e-12));
  }
  SECTION("paper-literal form sums the logs") {
    const double ne[] = {std::exp(1.0), std::exp(1.0)};
    const EventBatchLoss l = unsupervised_loss({}, ne, NoneventForm::kPaperLiteral);
    CHECK(l.nonevents == Catch::Approx(2.0).margin(1e-12));
  }
  SECTION("non-positive intensities violate the invariant") {
    const double bad[] = {0.0};
    CHECK_THROWS_AS(unsupervised_loss(bad, {}), std::logic_error);
  }
}

TEST_CASE("unsupervised gradients match finite differences", "[dynrep]") {
  GradCheckOptions opt;
  opt.instances = 6;
  opt.seed = 101;
  const auto rows = run_gradcheck(opt);
  REQUIRE_FALSE(rows.empty());
  for (const auto& r : rows) {
    INFO(r.tensor << " max_rel_err=" << r.max_rel_err);
    CHECK(r.ok);
  }
}

TEST_CASE("aggregation weights are a dead path when neighborhoods are empty", "[dynrep]") {
  const std::size_t d = 3;
  DyRepParams p = random_params(d, 55);
  // Empty starting topology: the batch's single event updates both endpoints
  // with empty pre-event neighborhoods, so W_a and W_h cannot influence the
  // loss.
  std::vector<DenseVector> z{{0.2, -0.1, 0.5}, {0.4, 0.3, -0.6}, {0.1, 0.1, 0.1}};
  DynamicGraphState s(z);
  std::vector<CoInvocationEvent> events{{0, 1, 1.0}};
  EventTape tape = process_event_batch(s, p, events);
  std::vector<CoInvocationEvent> nonevents{{1, 2, 1.0}, {2, 0, 1.0}};
  attach_nonevents(tape, s, nonevents);
  const DyRepGrads g = unsupervised_grads(tape, p);
  for (double x : g.w_a.values) CHECK(x == 0.0);
  for (double x : g.w_h.values) CHECK(x == 0.0);
  // while the one-step paths that do exist carry signal
  double wrec_norm = 0.0;
  for (double x : g.w_rec.values) wrec_norm += std::abs(x);
  CHECK(wrec_norm > 0.0);
}

TEST_CASE("tape loss equals live loss at the recording parameters", "[dynrep]") {
  const std::size_t d = 4;
  DyRepParams p = random_params(d, 56);
  auto rng = make_stream(57, "dynrep-test");
  std::vector<DenseVector> z;
  for (int i = 0; i < 5; ++i) z.push_back(gaussian_vector(d, 1.0, rng));
  DynamicGraphState s(z);
  std::vector<CoInvocationEvent> events{{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}};
  EventTape tape = process_event_batch(s, p, events);
  auto rng_non = make_stream(58, "nonevents");
  const auto nonevents = sample_nonevents(5, events, rng_non);
  attach_nonevents(tape, s, nonevents);

  // Recorded lambdas match a replay of the tape objective.
  const EventBatchLoss from_tape = unsupervised_loss_from_tape(tape, p);
  std::vector<double> lam_non;
  for (const auto& ne : tape.nonevents)
    lam_non.push_back(
        intensity(p, s.representation(ne.a.service), s.representation(ne.b.service)));
  const EventBatchLoss direct = unsupervised_loss(tape.event_lambda, lam_non);
  CHECK(from_tape.events == Catch::Approx(direct.events).margin(1e-12));
  CHECK(from_tape.nonevents == Catch::Approx(direct.nonevents).margin(1e-12));
}
