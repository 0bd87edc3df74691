#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>

#include "dysr/graph_state.hpp"
#include "dysr/rng.hpp"

using namespace dysr;

namespace {

DynamicGraphState empty_state(int n, std::size_t d = 2) {
  std::vector<DenseVector> z(n, DenseVector(d, 0.0));
  return DynamicGraphState(std::move(z));
}

double row_sum(const DynamicGraphState& s, int j) {
  double sum = 0.0;
  for (const auto& [v, y] : s.attention_row(j)) sum += y;
  return sum;
}

}  // namespace

TEST_CASE("neighbors on empty and small graphs", "[graph]") {
  DynamicGraphState s = empty_state(4);
  CHECK(s.neighbors(0).empty());
  CHECK_THROWS_AS(s.neighbors(9), std::invalid_argument);

  s.apply_event_topology({0, 1, 1.0}, 0.5);
  CHECK(s.neighbors(0) == std::vector<int>{1});
  CHECK(s.neighbors(1) == std::vector<int>{0});

  // 3-clique from three pairwise events
  DynamicGraphState c = empty_state(3);
  c.apply_event_topology({0, 1, 1.0}, 0.5);
  c.apply_event_topology({0, 2, 2.0}, 0.5);
  c.apply_event_topology({1, 2, 3.0}, 0.5);
  for (int j = 0; j < 3; ++j) CHECK(c.neighbors(j).size() == 2);
}

TEST_CASE("attention update: first-ever event", "[graph]") {
  DynamicGraphState s = empty_state(3);
  s.apply_event_topology({0, 1, 1.0}, 0.5);
  CHECK(s.count(0, 1) == 1);
  CHECK(s.count(1, 0) == 1);
  REQUIRE(s.attention_row(0).size() == 1);
  CHECK(s.attention_row(0).at(1) == Catch::Approx(1.0).margin(1e-15));
  CHECK(s.attention_row(1).at(0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("attention update: repeat event keeps singleton rows normalized", "[graph]") {
  DynamicGraphState s = empty_state(2);
  s.apply_event_topology({0, 1, 1.0}, 0.5);
  s.apply_event_topology({0, 1, 2.0}, 0.5);
  CHECK(s.count(0, 1) == 2);
  CHECK(s.attention_row(0).at(1) == Catch::Approx(1.0).margin(1e-15));
  CHECK(s.attention_row(1).at(0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("attention update: existing neighbor gains a new one", "[graph]") {
  // a=0 already linked to c=2, then event (a, b=1) with lambda=0.5.
  // Hand trace: row a has y_b = 1/2 + 1/2 = 1, y_c = 1 - (1 - 1/2) = 1/2,
  // normalizing to {b: 2/3, c: 1/3}; row b becomes {a: 1}.
  DynamicGraphState s = empty_state(3);
  s.apply_event_topology({0, 2, 1.0}, 0.5);
  s.apply_event_topology({0, 1, 2.0}, 0.5);
  const auto& row_a = s.attention_row(0);
  REQUIRE(row_a.size() == 2);
  CHECK(row_a.at(1) == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(row_a.at(2) == Catch::Approx(1.0 / 3.0).margin(1e-12));
  CHECK(s.attention_row(1).at(0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("apply_event_topology input validation", "[graph]") {
  DynamicGraphState s = empty_state(3);
  CHECK_THROWS_AS(s.apply_event_topology({0, 1, 1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(s.apply_event_topology({0, 1, 1.0}, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(s.apply_event_topology({0, 0, 1.0}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(s.apply_event_topology({0, 7, 1.0}, 0.5), std::invalid_argument);
}

TEST_CASE("counts match a brute-force tally and rows stay stochastic", "[graph]") {
  const int n = 12;
  auto rng = make_stream(21, "graph");
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_real_distribution<double> lam(0.01, 2.0);
  DynamicGraphState s = empty_state(n);
  std::map<std::pair<int, int>, int> tally;
  for (int e = 0; e < 500; ++e) {
    int u = pick(rng), v = pick(rng);
    while (v == u) v = pick(rng);
    const double l = lam(rng);
    s.apply_event_topology({u, v, static_cast<double>(e)}, l);
    tally[{std::min(u, v), std::max(u, v)}] += 1;

    for (int j : {u, v}) {
      CHECK(row_sum(s, j) == Catch::Approx(1.0).margin(1e-9));
      for (const auto& [w, y] : s.attention_row(j)) {
        CHECK(y >= 0.0);
        CHECK(s.count(j, w) > 0);
      }
    }
  }
  for (int u = 0; u < n; ++u) {
    CHECK(s.count(u, u) == 0);
    for (int v = 0; v < n; ++v) {
      CHECK(s.count(u, v) == s.count(v, u));
      if (u < v) {
        auto it = tally.find({u, v});
        CHECK(s.count(u, v) == (it == tally.end() ? 0 : it->second));
      }
    }
  }
}

TEST_CASE("same event order reproduces identical state", "[graph]") {
  auto run = [](std::uint64_t seed) {
    auto rng = make_stream(seed, "graph");
    std::uniform_int_distribution<int> pick(0, 7);
    DynamicGraphState s = empty_state(8);
    for (int e = 0; e < 100; ++e) {
      int u = pick(rng), v = pick(rng);
      while (v == u) v = pick(rng);
      s.apply_event_topology({u, v, double(e)}, 0.3);
    }
    return s.snapshot();
  };
  const GraphSnapshot a = run(5);
  const GraphSnapshot b = run(5);
  CHECK(a.adjacency == b.adjacency);
  CHECK(a.attention == b.attention);
}

TEST_CASE("init_from_history", "[graph]") {
  SECTION("zero mashups") {
    DynamicGraphState s = init_from_history({}, {DenseVector{1.0}, DenseVector{2.0}});
    CHECK(s.neighbors(0).empty());
    CHECK(s.representation(0) == DenseVector{1.0});
    CHECK(s.last_update(0) == 0.0);
  }
  SECTION("one mashup with three services") {
    RequirementSample m;
    m.id = "m0";
    m.t = 3.0;
    m.components = {0, 1, 2};
    std::vector<DenseVector> z(4, DenseVector(2, 0.0));
    DynamicGraphState s = init_from_history({m}, z);
    for (int j : {0, 1, 2}) {
      CHECK(s.neighbors(j).size() == 2);
      for (const auto& [v, y] : s.attention_row(j))
        CHECK(y == Catch::Approx(0.5).margin(1e-15));
      CHECK(s.last_update(j) == 3.0);
    }
    CHECK(s.last_update(3) == 0.0);
    CHECK(s.count(0, 1) == 1);
    CHECK(s.count(0, 2) == 1);
    CHECK(s.count(1, 2) == 1);
  }
  SECTION("counts equal a brute-force pair tally over a prefix") {
    auto rng = make_stream(33, "graph");
    std::uniform_int_distribution<int> pick(0, 9);
    std::vector<RequirementSample> mashups;
    std::map<std::pair<int, int>, int> tally;
    for (int i = 0; i < 300; ++i) {
      std::set<int> comp;
      while (comp.size() < 3) comp.insert(pick(rng));
      RequirementSample m;
      m.id = "m" + std::to_string(i);
      m.t = static_cast<double>(i / 10);
      m.components.assign(comp.begin(), comp.end());
      for (auto a = comp.begin(); a != comp.end(); ++a)
        for (auto b = std::next(a); b != comp.end(); ++b) tally[{*a, *b}] += 1;
      mashups.push_back(std::move(m));
    }
    DynamicGraphState s = init_from_history(mashups, std::vector<DenseVector>(10, {0.0}));
    for (const auto& [uv, c] : tally) CHECK(s.count(uv.first, uv.second) == c);
  }
  SECTION("unknown component index") {
    RequirementSample m;
    m.components = {0, 5};
    CHECK_THROWS_AS(init_from_history({m}, {DenseVector{0.0}, DenseVector{0.0}}),
                    std::runtime_error);
  }
}

TEST_CASE("snapshots are immutable views", "[graph]") {
  DynamicGraphState s = empty_state(3);
  s.apply_event_topology({0, 1, 1.0}, 0.5);
  const GraphSnapshot snap1 = s.snapshot();
  const GraphSnapshot snap2 = s.snapshot();
  CHECK(snap1.adjacency == snap2.adjacency);
  CHECK(snap1.z == snap2.z);

  s.apply_event_topology({1, 2, 2.0}, 0.5);
  s.set_representation(0, DenseVector{9.0, 9.0}, 3.0);
  CHECK(snap1.adjacency[1].size() == 1);
  CHECK(snap1.z[0] == DenseVector(2, 0.0));
  CHECK(s.representation(0) == DenseVector{9.0, 9.0});
}

TEST_CASE("generate_events enumerates unordered pairs", "[graph]") {
  CHECK(generate_events({2, 0, 1}, 5.0).size() == 3);
  CHECK(generate_events({0}, 5.0).empty());
  CHECK(generate_events({1, 2, 3, 4, 5, 6}, 5.0).size() == 15);
  const auto evs = generate_events({3, 1}, 2.0);
  REQUIRE(evs.size() == 1);
  CHECK(evs[0].u == 1);
  CHECK(evs[0].v == 3);
  CHECK(evs[0].t == 2.0);
}
