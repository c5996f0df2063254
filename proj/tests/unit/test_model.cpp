#include <doctest.h>

#include <cmath>

#include "roaforge/common.hpp"
#include "roaforge/model.hpp"
#include "roaforge/rng.hpp"

using namespace roaforge;

TEST_CASE("degree-3 index sets: sizes and lexicographic order") {
  auto s1 = index_set(1);
  REQUIRE(s1.size() == 1);
  CHECK(s1[0].exponents == std::vector<int>{3});

  auto s2 = index_set(2);
  REQUIRE(s2.size() == 4);
  CHECK(s2[0].exponents == std::vector<int>{0, 3});
  CHECK(s2[1].exponents == std::vector<int>{1, 2});
  CHECK(s2[2].exponents == std::vector<int>{2, 1});
  CHECK(s2[3].exponents == std::vector<int>{3, 0});

  CHECK(index_set(3).size() == 10);   // C(5,3)
  CHECK(index_set(10).size() == 220); // C(12,3)

  for (const auto& m : index_set(4)) {
    int total = 0;
    for (int e : m.exponents) total += e;
    CHECK(total == 3);
  }
}

TEST_CASE("residual forward: zero parameters give zero output") {
  ParamLayout layout;
  layout.n = 2;
  layout.width = 4;
  layout.depth = 2;
  layout.n_out = 4;
  TaylorLyapunov model(layout);
  const double x[2] = {0.4, -0.9};
  for (double v : model.residual_forward(x)) CHECK(v == 0.0);
}

TEST_CASE("residual forward: scalar single-neuron chain") {
  ParamLayout layout;
  layout.n = 1;
  layout.width = 1;
  layout.depth = 1;
  layout.n_out = 1;
  TaylorLyapunov model(layout);
  model.params()[layout.w0_offset()] = 1.0;    // W0
  model.params()[layout.wout_offset()] = 2.0;  // W_out
  const double x[1] = {0.5};
  CHECK(model.residual_forward(x)[0] == doctest::Approx(2.0 * std::tanh(0.5)).epsilon(1e-12));
  CHECK(model.residual_forward(x)[0] == doctest::Approx(0.924234).epsilon(1e-6));
}

TEST_CASE("residual forward stays within the activation bound") {
  TaylorLyapunov model = TaylorLyapunov::init(2, 8, 2, 99);
  const ParamLayout& L = model.layout();
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const double x[2] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const auto out = model.residual_forward(x);
    for (int r = 0; r < L.n_out; ++r) {
      double bound = std::abs(model.bout(r));
      for (int c = 0; c < L.width; ++c) bound += std::abs(model.wout(r, c));
      CHECK(std::abs(out[r]) <= bound + 1e-12);
    }
  }
}

TEST_CASE("candidate value: frozen examples") {
  ParamLayout layout;
  layout.n = 2;
  layout.width = 2;
  layout.depth = 1;
  layout.n_out = 4;
  TaylorLyapunov model(layout);
  model.set_p_matrix(2.0 * Eigen::MatrixXd::Identity(2, 2));

  const double zero[2] = {0.0, 0.0};
  CHECK(model.value_unclamped(zero) == 0.0);

  const double x[2] = {0.5, 0.5};
  CHECK(model.value_unclamped(x) == doctest::Approx(0.5).epsilon(1e-12));

  // Constant residual vector (1,1,1,1): each cubic monomial at (0.5, 0.5)
  // contributes 0.125.
  for (int r = 0; r < 4; ++r) model.params()[layout.bout_offset() + r] = 1.0;
  CHECK(model.value_unclamped(x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("clamped candidate: min branch plus the gamma ridge") {
  ParamLayout layout;
  layout.n = 2;
  layout.width = 2;
  layout.depth = 1;
  layout.n_out = 4;
  TaylorLyapunov model(layout);
  model.set_gamma(0.1);

  model.set_p_matrix(4.0 * Eigen::MatrixXd::Identity(2, 2));  // v_hat = 2|x|^2
  const double x1[2] = {0.5, 0.0};                            // v_hat = 0.5
  CHECK(model.value(x1) == doctest::Approx(0.5 + 0.01 * 0.25).epsilon(1e-12));

  const double x2[2] = {1.0, 0.0};  // v_hat = 2 -> clamped
  CHECK(model.value(x2) == doctest::Approx(1.01).epsilon(1e-12));

  const double zero[2] = {0.0, 0.0};
  CHECK(model.value(zero) == 0.0);
}

TEST_CASE("initialization: identity P, zero biases, frozen scalars, determinism") {
  TaylorLyapunov a = TaylorLyapunov::init(3, 16, 2, 1234);
  CHECK((a.p_matrix() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.gamma() == 0.01);
  CHECK(a.beta() == 1.0);
  const ParamLayout& L = a.layout();
  for (int l = 0; l < L.depth; ++l) {
    for (int r = 0; r < L.width; ++r) CHECK(a.bias(l, r) == 0.0);
  }
  for (int r = 0; r < L.n_out; ++r) CHECK(a.bout(r) == 0.0);

  const double bound0 = std::sqrt(6.0 / (3 + 16));
  for (int i = 0; i < L.w0_count(); ++i) {
    CHECK(std::abs(a.params()[L.w0_offset() + i]) <= bound0);
  }

  TaylorLyapunov b = TaylorLyapunov::init(3, 16, 2, 1234);
  CHECK(a.params() == b.params());
  TaylorLyapunov c = TaylorLyapunov::init(3, 16, 2, 1235);
  CHECK(a.params() != c.params());
}

TEST_CASE("parameter layout length matches the closed form") {
  for (int n : {1, 2, 3, 10}) {
    for (int depth : {1, 2, 3}) {
      const int width = 8;
      TaylorLyapunov m = TaylorLyapunov::init(n, width, depth, 7);
      const int n_i = static_cast<int>(index_set(n).size());
      const int expected = n * (n + 1) / 2 +
                           (width * n + (depth - 1) * width * width + width * n_i) +
                           (depth * width + n_i) + 2;
      CHECK(m.layout().total() == expected);
      CHECK(static_cast<int>(m.params().size()) == expected);
    }
  }
  TaylorLyapunov s = TaylorLyapunov::init(2, 4, 1, 7, /*supervised=*/true);
  CHECK(s.layout().total() == s.layout().epsilon_index() + 1);
  CHECK(s.epsilon() == doctest::Approx(0.1));
}

TEST_CASE("candidate vanishes at the origin for random parameters") {
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    TaylorLyapunov m = TaylorLyapunov::init(3, 8, 2, rng.next_u64());
    for (double& p : m.params()) p += rng.uniform(-0.5, 0.5);
    const double zero[3] = {0.0, 0.0, 0.0};
    CHECK(m.value(zero) == 0.0);
  }
}

TEST_CASE("zero residual net makes the unclamped candidate exactly quadratic") {
  ParamLayout layout;
  layout.n = 2;
  layout.width = 4;
  layout.depth = 2;
  layout.n_out = 4;
  TaylorLyapunov m(layout);
  Eigen::MatrixXd p(2, 2);
  p << 2.0, 0.3, 0.3, 1.5;
  m.set_p_matrix(p);
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    const double x[2] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double s = rng.uniform(0.1, 2.0);
    const double sx[2] = {s * x[0], s * x[1]};
    CHECK(m.value_unclamped(sx) ==
          doctest::Approx(s * s * m.value_unclamped(x)).epsilon(1e-12));
  }
}

TEST_CASE("near the origin the candidate is dominated by its quadratic part") {
  // |V(x) - (x'Px/2 + gamma^2 |x|^2)| <= C |x|^3 with C set by the residual
  // bound; checked on shrinking shells.
  TaylorLyapunov m = TaylorLyapunov::init(2, 8, 2, 77);
  for (double& p : m.params()) p += 0.01;  // make the net nontrivial
  const Eigen::MatrixXd p = m.p_matrix();
  const ParamLayout& L = m.layout();
  double residual_bound = 0.0;
  for (int r = 0; r < L.n_out; ++r) {
    double b = std::abs(m.bout(r));
    for (int c = 0; c < L.width; ++c) b += std::abs(m.wout(r, c));
    residual_bound = std::max(residual_bound, b);
  }
  const double c_bound = L.n_out * residual_bound;
  Rng rng(9);
  for (double radius : {1e-1, 1e-2, 1e-3}) {
    for (int t = 0; t < 50; ++t) {
      const double angle = rng.uniform(0, 2 * M_PI);
      const double x[2] = {radius * std::cos(angle), radius * std::sin(angle)};
      Eigen::Vector2d xv(x[0], x[1]);
      const double quad = 0.5 * xv.dot(p * xv) + m.gamma() * m.gamma() * xv.squaredNorm();
      CHECK(std::abs(m.value(x) - quad) <= c_bound * std::pow(radius, 3) + 1e-15);
    }
  }
}

TEST_CASE("candidate is bounded by 1 + gamma^2 n on the closed domain") {
  TaylorLyapunov m = TaylorLyapunov::init(3, 8, 2, 5);
  Rng rng(6);
  const double cap = 1.0 + m.gamma() * m.gamma() * 3;
  for (int t = 0; t < 500; ++t) {
    double x[3];
    for (int j = 0; j < 3; ++j) x[j] = rng.uniform(-1, 1);
    CHECK(m.value(x) <= cap + 1e-12);
  }
}

TEST_CASE("model JSON round-trip preserves every parameter bit") {
  TaylorLyapunov m = TaylorLyapunov::init(2, 8, 2, 42, /*supervised=*/true);
  Rng rng(13);
  for (double& p : m.params()) p += rng.uniform(-1, 1);
  const nlohmann::json j = m.to_json();
  const TaylorLyapunov back = TaylorLyapunov::from_json(j);
  CHECK(back.layout() == m.layout());
  CHECK(back.params() == m.params());

  nlohmann::json bad = j;
  bad["format"] = "something-else";
  CHECK_THROWS_AS(TaylorLyapunov::from_json(bad), ConfigError);
  nlohmann::json truncated = j;
  truncated["params"].erase(0);
  CHECK_THROWS_AS(TaylorLyapunov::from_json(truncated), ConfigError);
}
