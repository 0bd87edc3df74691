#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "dysr/embedding_io.hpp"
#include "dysr/gradcheck.hpp"
#include "dysr/numerics.hpp"
#include "dysr/optimizer.hpp"
#include "dysr/rng.hpp"

using namespace dysr;
namespace fs = std::filesystem;

TEST_CASE("matvec basics", "[numerics]") {
  const DenseMatrix id2 = DenseMatrix::identity(2);
  CHECK(matvec(id2, {0.3, -0.7}) == DenseVector{0.3, -0.7});

  const DenseMatrix zero(2, 2);
  CHECK(matvec(zero, {5.0, 5.0}) == DenseVector{0.0, 0.0});

  DenseMatrix m(2, 2);
  m(0, 0) = 1; m(0, 1) = 2; m(1, 0) = 3; m(1, 1) = 4;
  CHECK(matvec(m, {1.0, 1.0}) == DenseVector{3.0, 7.0});

  CHECK_THROWS_AS(matvec(m, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("matvec is linear", "[numerics]") {
  auto rng = make_stream(11, "test");
  const DenseMatrix m = gaussian_matrix(4, 3, 1.0, rng);
  const DenseVector u = gaussian_vector(3, 1.0, rng);
  const DenseVector v = gaussian_vector(3, 1.0, rng);
  const double a = 0.37, b = -1.25;
  DenseVector combo(3);
  for (int i = 0; i < 3; ++i) combo[i] = a * u[i] + b * v[i];
  const DenseVector lhs = matvec(m, combo);
  DenseVector rhs = matvec(m, u);
  const DenseVector mv = matvec(m, v);
  for (int i = 0; i < 4; ++i) rhs[i] = a * rhs[i] + b * mv[i];
  for (int i = 0; i < 4; ++i) CHECK(std::abs(lhs[i] - rhs[i]) < 1e-12);
}

TEST_CASE("softmax_masked examples", "[numerics]") {
  {
    const std::vector<int> active{0};
    const DenseVector out = softmax_masked({2.0}, active);
    CHECK(out[0] == Catch::Approx(1.0).margin(1e-15));
  }
  {
    const std::vector<int> active{0, 1, 2};
    const DenseVector out = softmax_masked({1.0, 1.0, 1.0}, active);
    for (int i = 0; i < 3; ++i) CHECK(out[i] == Catch::Approx(1.0 / 3.0).margin(1e-15));
  }
  {
    const std::vector<int> active{0, 1};
    const DenseVector out = softmax_masked({0.0, std::log(3.0)}, active);
    CHECK(out[0] == Catch::Approx(0.25).margin(1e-14));
    CHECK(out[1] == Catch::Approx(0.75).margin(1e-14));
  }
  CHECK_THROWS_AS(softmax_masked({1.0, 2.0}, std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("softmax_masked is a probability vector on the active set", "[numerics]") {
  auto rng = make_stream(12, "test");
  std::uniform_real_distribution<double> dist(-50.0, 50.0);
  for (int trial = 0; trial < 50; ++trial) {
    DenseVector scores(8);
    for (double& s : scores) s = dist(rng);
    const std::vector<int> active{1, 3, 4, 6};
    const DenseVector out = softmax_masked(scores, active);
    double sum = 0.0;
    for (int i : active) {
      CHECK(out[i] >= 0.0);
      sum += out[i];
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
    CHECK(out[0] == 0.0);
    CHECK(out[2] == 0.0);
    CHECK(out[5] == 0.0);
    CHECK(out[7] == 0.0);
  }
}

TEST_CASE("scaled_softplus values", "[numerics]") {
  CHECK(scaled_softplus(0.0, 1.0) == Catch::Approx(0.693147).margin(1e-6));
  CHECK(scaled_softplus(2.0, 1.0) == Catch::Approx(2.126928).margin(1e-6));
  CHECK(scaled_softplus(0.0, 2.0) == Catch::Approx(1.386294).margin(1e-6));
  CHECK_THROWS_AS(scaled_softplus(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("scaled_softplus bounds, monotonicity and overflow guard", "[numerics]") {
  auto rng = make_stream(13, "test");
  std::uniform_real_distribution<double> xs(-200.0, 200.0);
  std::uniform_real_distribution<double> ps(0.05, 10.0);
  const double ln2 = std::log(2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = xs(rng);
    const double psi = ps(rng);
    const double y = scaled_softplus(x, psi);
    CHECK(y > 0.0);
    CHECK(y > std::max(0.0, x) - psi * ln2);
    CHECK(scaled_softplus(x + 0.5, psi) > y);
  }
  // Deep in the linear regime the asymptote is returned exactly.
  CHECK(scaled_softplus(1e6, 1.0) == 1e6);
  CHECK(std::isfinite(scaled_softplus(700.0, 1.0)));

  // Partial derivatives agree with finite differences on both branches.
  for (double x : {-3.0, 0.4, 2.0, 40.0}) {
    const double psi = 1.3;
    const ScaledSoftplusEval ev = scaled_softplus_eval(x, psi);
    const double h = 1e-6;
    const double dx_num = (scaled_softplus(x + h, psi) - scaled_softplus(x - h, psi)) / (2 * h);
    const double dp_num = (scaled_softplus(x, psi + h) - scaled_softplus(x, psi - h)) / (2 * h);
    CHECK(ev.d_x == Catch::Approx(dx_num).margin(1e-6));
    CHECK(ev.d_psi == Catch::Approx(dp_num).margin(1e-6));
  }
}

TEST_CASE("adam first step and zero gradient", "[numerics]") {
  AdamOptimizer opt(AdamConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
  std::vector<double> theta{1.0};

  std::vector<double> zero{0.0};
  opt.step("theta", theta, zero);
  CHECK(theta[0] == 1.0);  // fresh state, zero gradient: no movement

  std::vector<double> g{1.0};
  AdamOptimizer opt2(AdamConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
  std::vector<double> theta2{1.0};
  opt2.step("theta", theta2, g);
  // bias-corrected mhat/sqrt(vhat) = 1 on the first step
  CHECK(theta2[0] == Catch::Approx(0.9).margin(1e-7));
  CHECK(opt2.step_count("theta") == 1);
}

TEST_CASE("adam clipping makes huge gradients behave like the clip value", "[numerics]") {
  AdamOptimizer a(AdamConfig{0.1, 0.9, 0.999, 1e-8, 100.0});
  AdamOptimizer b(AdamConfig{0.1, 0.9, 0.999, 1e-8, 100.0});
  std::vector<double> pa{2.0}, pb{2.0};
  std::vector<double> huge{1e6}, clipped{100.0};
  for (int i = 0; i < 5; ++i) {
    a.step("x", pa, huge);
    b.step("x", pb, clipped);
  }
  CHECK(pa[0] == pb[0]);
  CHECK(a.max_effective_grad() <= 100.0);
}

TEST_CASE("adam rejects shape changes", "[numerics]") {
  AdamOptimizer opt(AdamConfig{});
  std::vector<double> p{1.0, 2.0};
  std::vector<double> g{0.1, 0.1};
  opt.step("p", p, g);
  std::vector<double> p3{1.0, 2.0, 3.0};
  std::vector<double> g3{0.1, 0.1, 0.1};
  CHECK_THROWS_AS(opt.step("p", p3, g3), std::invalid_argument);
  CHECK_THROWS_AS(opt.step("q", p, g3), std::invalid_argument);
}

TEST_CASE("finite_diff_grad on simple functions", "[numerics]") {
  double theta = 3.0;
  ParamBlock blocks[] = {{"theta", &theta, 1}};
  auto square = [&]() { return theta * theta; };
  const auto g = finite_diff_grad(square, blocks, 1e-5);
  CHECK(g[0][0] == Catch::Approx(6.0).margin(1e-8));

  auto constant = [&]() { return 42.0; };
  const auto gc = finite_diff_grad(constant, blocks, 1e-5);
  CHECK(gc[0][0] == 0.0);

  auto bad = [&]() { return std::numeric_limits<double>::quiet_NaN(); };
  CHECK_THROWS_AS(finite_diff_grad(bad, blocks, 1e-5), std::runtime_error);
}

TEST_CASE("embedding binary round trip and validation", "[numerics]") {
  const fs::path dir = fs::temp_directory_path() / "dysr_emb_test";
  fs::create_directories(dir);
  const std::string path = (dir / "e.bin").string();

  auto rng = make_stream(14, "test");
  std::vector<DenseVector> rows;
  for (int i = 0; i < 7; ++i) rows.push_back(gaussian_vector(5, 2.0, rng));
  write_embeddings_binary(path, rows);
  const auto back = read_embeddings_binary(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(back[i] == rows[i]);

  const std::string csv = (dir / "e.csv").string();
  std::vector<std::string> ids;
  for (int i = 0; i < 7; ++i) ids.push_back("row" + std::to_string(i));
  write_embeddings_csv(csv, ids, rows);
  const auto [cids, crows] = read_embeddings_csv(csv);
  CHECK(cids == ids);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(crows[i] == rows[i]);

  const std::string bad = (dir / "bad.bin").string();
  {
    std::ofstream out(bad, std::ios::binary);
    out << "NOPExxxxxxxxxxxxxxxx";
  }
  CHECK_THROWS_AS(read_embeddings_binary(bad), std::runtime_error);
  fs::remove_all(dir);
}
