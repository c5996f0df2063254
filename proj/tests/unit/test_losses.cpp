#include <doctest.h>

#include <cmath>

#include "roaforge/losses.hpp"
#include "roaforge/rng.hpp"

using namespace roaforge;

namespace {

TaylorLyapunov quadratic_model(const Eigen::MatrixXd& p, double gamma, bool supervised = false) {
  ParamLayout layout;
  layout.n = static_cast<int>(p.rows());
  layout.width = 2;
  layout.depth = 1;
  layout.n_out = static_cast<int>(index_set(layout.n).size());
  layout.supervised = supervised;
  TaylorLyapunov m(layout);
  m.set_p_matrix(p);
  m.set_gamma(gamma);
  return m;
}

DynamicalSystem negative_identity_2d() {
  Box box;
  box.lower = Eigen::VectorXd::Constant(2, -1.0);
  box.upper = Eigen::VectorXd::Constant(2, 1.0);
  DriftFn f = [](const double* x, double* dx) {
    dx[0] = -x[0];
    dx[1] = -x[1];
  };
  return DynamicalSystem("neg_identity", 2, f, -Eigen::MatrixXd::Identity(2, 2), box);
}

}  // namespace

TEST_CASE("orbital derivative: frozen quadratic values") {
  const DynamicalSystem sys = negative_identity_2d();
  TaylorLyapunov m = quadratic_model(2.0 * Eigen::MatrixXd::Identity(2, 2), 0.1);
  const double x[2] = {0.5, 0.0};
  CHECK(orbital_derivative(m, sys, x) == doctest::Approx(-0.505).epsilon(1e-12));

  m.set_beta(1.0);
  CHECK(forced_derivative(m, sys, x, 4.0) == doctest::Approx(-0.45828125).epsilon(1e-12));

  const double zero[2] = {0.0, 0.0};
  CHECK(forced_derivative(m, sys, zero, 4.0) == 0.0);
}

TEST_CASE("boundary objective: single point and permutation invariance") {
  const DynamicalSystem sys = negative_identity_2d();
  TaylorLyapunov m = quadratic_model(2.0 * Eigen::MatrixXd::Identity(2, 2), 0.1);

  Eigen::MatrixXd one(1, 2);
  one << 1.0, 0.0;  // point 0.5, 0 after scaling by eta = 0.5
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, 0.5);
  CHECK(boundary_objective(m, sys, one, eta) == doctest::Approx(0.255025).epsilon(1e-12));

  Rng rng(12);
  Eigen::MatrixXd pts = sample_boundary(2, 64, rng);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(64);
  const double direct = boundary_objective(m, sys, pts, ones);
  Eigen::MatrixXd reversed = pts.colwise().reverse();
  CHECK(boundary_objective(m, sys, reversed, ones) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("interior constraint: sign analysis keeps a Lyapunov pair at zero") {
  const DynamicalSystem sys = negative_identity_2d();
  // V = 1.01 |x|^2 via P = 2.02 I, gamma = 0: the forced derivative is
  // negative on the whole domain, so the constraint is 0 for any sampling.
  TaylorLyapunov m = quadratic_model(2.02 * Eigen::MatrixXd::Identity(2, 2), 0.0);
  m.set_beta(1.0);
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd interior = sample_interior(2, 512, rng);
    CHECK(interior_constraint(m, sys, interior, 4.0) == 0.0);
  }
}

TEST_CASE("interior constraint: rectifier squares a single violation") {
  const DynamicalSystem sys = negative_identity_2d();
  TaylorLyapunov m = quadratic_model(2.0 * Eigen::MatrixXd::Identity(2, 2), 0.1);
  m.set_beta(4.0);  // large forcing turns the balance positive at (0.5, 0)
  Eigen::MatrixXd one(1, 2);
  one << 0.5, 0.0;
  CHECK(interior_constraint(m, sys, one, 4.0) == doctest::Approx(0.05880625).epsilon(1e-12));

  // All entries below the threshold produce zero.
  m.set_beta(1.0);
  CHECK(interior_constraint(m, sys, one, 4.0) == 0.0);
}

TEST_CASE("interior constraint is zero when no sample is inside the basin") {
  const DynamicalSystem sys = negative_identity_2d();
  TaylorLyapunov m = quadratic_model(1e8 * Eigen::MatrixXd::Identity(2, 2), 1.1);
  Rng rng(14);
  Eigen::MatrixXd interior = sample_interior(2, 256, rng);
  CHECK(interior_constraint(m, sys, interior, 4.0) == 0.0);
}

TEST_CASE("outflow constraint: empty set, saturated point, and a real deficit") {
  const DynamicalSystem sys = negative_identity_2d();  // inflow everywhere
  Rng rng(15);
  Eigen::MatrixXd boundary = sample_boundary(2, 64, rng);
  Eigen::MatrixXd normals(64, 2);
  for (int i = 0; i < 64; ++i) {
    normals.row(i) = boundary_normal(boundary.row(i).transpose()).transpose();
  }
  TaylorLyapunov m = quadratic_model(Eigen::MatrixXd::Identity(2, 2), 0.01);
  CHECK(outflow_constraint(m, sys, boundary, normals) == 0.0);

  // A stable spiral with outflow on parts of the boundary.
  Box box;
  box.lower = Eigen::VectorXd::Constant(2, -1.0);
  box.upper = Eigen::VectorXd::Constant(2, 1.0);
  DriftFn spiral = [](const double* x, double* dx) {
    dx[0] = x[1];
    dx[1] = -x[0] - 0.1 * x[1];
  };
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, -1, -0.1;
  const DynamicalSystem spiral_sys("spiral", 2, spiral, a, box);

  Eigen::MatrixXd pt(1, 2);
  pt << 1.0, 0.5;  // on the x1 = 1 face, f.n = x2 = 0.5 >= 0: kept
  Eigen::MatrixXd nrm(1, 2);
  nrm << 1.0, 0.0;

  TaylorLyapunov deficit = quadratic_model(1.28 * Eigen::MatrixXd::Identity(2, 2), 0.0);
  // V(1, 0.5) = 0.64 * 1.25 = 0.8 -> [1 - 0.8]^2 = 0.04.
  CHECK(outflow_constraint(deficit, spiral_sys, pt, nrm) == doctest::Approx(0.04).epsilon(1e-12));

  TaylorLyapunov saturated = quadratic_model(1e6 * Eigen::MatrixXd::Identity(2, 2), 0.0894427191);
  // V(1, 0.5) = 1 + 0.008 * 1.25 = 1.01 -> rectifier kills it.
  CHECK(outflow_constraint(saturated, spiral_sys, pt, nrm) == 0.0);
}

TEST_CASE("data objective: exact fit, frozen mismatch, divergent target") {
  TaylorLyapunov m = quadratic_model(Eigen::MatrixXd::Zero(2, 2), 1e-30, /*supervised=*/true);
  m.set_epsilon(1.0);

  Dataset data;
  data.points.resize(1, 2);
  data.points << 0.0, 0.0;  // V = 0 here
  data.v_m = {0.5};
  data.divergent = {0};
  CHECK(data_objective(m, data) ==
        doctest::Approx(std::tanh(0.5) * std::tanh(0.5)).epsilon(1e-12));
  CHECK(data_objective(m, data) == doctest::Approx(0.213557).epsilon(1e-5));

  // Exact fit: targets recomputed from the model's own values.
  TaylorLyapunov fit = quadratic_model(0.8 * Eigen::MatrixXd::Identity(2, 2), 0.01, true);
  fit.set_epsilon(0.7);
  Rng rng(16);
  Dataset fitted;
  fitted.points = sample_interior(2, 32, rng);
  for (int i = 0; i < 32; ++i) {
    const double v = fit.value(Eigen::RowVector2d(fitted.points.row(i)).data());
    fitted.v_m.push_back(std::atanh(v) / 0.7);
    fitted.divergent.push_back(0);
  }
  CHECK(data_objective(fit, fitted) <= 1e-24);

  // Divergent entries use the saturated target 1.
  TaylorLyapunov high = quadratic_model(1e6 * Eigen::MatrixXd::Identity(2, 2), 0.1, true);
  high.set_epsilon(1.0);
  Dataset divergent;
  divergent.points.resize(1, 2);
  divergent.points << 1.0, 0.0;  // V = 1.01
  divergent.v_m = {std::numeric_limits<double>::infinity()};
  divergent.divergent = {1};
  CHECK(data_objective(high, divergent) == doctest::Approx(1e-4).epsilon(1e-9));

  Dataset empty;
  bool warned = false;
  CHECK(data_objective(m, empty, &warned) == 0.0);
  CHECK(warned);
}

TEST_CASE("weighted total: arithmetic and dual-gradient identity") {
  LossBreakdown pieces;
  pieces.O_s = 0.2;
  pieces.C1_s = 0.3;
  pieces.C2_s = 0.1;
  DualVector duals;
  duals.objective = 0.0;
  duals.interior = 1.0;
  duals.outflow = 1.0;
  CHECK(lagrangian(pieces, duals, false, 0.0) == doctest::Approx(0.4).epsilon(1e-15));

  DualVector zero{0.0, 0.0, 0.0, 0.0, 0.0};
  CHECK(lagrangian(pieces, zero, false, 0.0) == 0.0);

  DualVector sup;
  sup.objective = 0.0;
  sup.interior = 1.0;
  sup.outflow = 1.0;
  sup.data = 0.5134;
  sup.eps_reg = 0.01;
  pieces.O_data = 0.2;
  CHECK(lagrangian(pieces, sup, true, 0.1) ==
        doctest::Approx(0.4 + 0.10268 + 0.0001).epsilon(1e-12));

  // The partial derivative w.r.t. each multiplier is the raw loss value.
  const double h = 1.0;
  DualVector bumped = duals;
  bumped.interior += h;
  CHECK(lagrangian(pieces, bumped, false, 0.0) - lagrangian(pieces, duals, false, 0.0) ==
        doctest::Approx(pieces.C1_s).epsilon(1e-15));
}

TEST_CASE("loss pieces are nonnegative on random models") {
  const DynamicalSystem sys = negative_identity_2d();
  Rng rng(18);
  SampleSets samples = make_sample_sets(2, 16, 64, 16, rng);
  for (int t = 0; t < 10; ++t) {
    TaylorLyapunov m = TaylorLyapunov::init(2, 4, 2, rng.next_u64());
    for (double& p : m.params()) p += rng.uniform(-0.3, 0.3);
    const LossBreakdown bd = eval_losses(m, sys, samples, DualVector{}, 4.0, nullptr);
    CHECK(bd.O_s >= 0.0);
    CHECK(bd.C1_s >= 0.0);
    CHECK(bd.C2_s >= 0.0);
    CHECK(bd.n_Rs <= 64);
  }
}

TEST_CASE("gradient pass and value pass agree on the loss pieces") {
  const DynamicalSystem sys = negative_identity_2d();
  Rng rng(19);
  SampleSets samples = make_sample_sets(2, 16, 64, 16, rng);
  TaylorLyapunov m = TaylorLyapunov::init(2, 4, 2, 31);
  for (double& p : m.params()) p += rng.uniform(-0.3, 0.3);
  DualVector duals;
  duals.objective = 0.5;
  std::vector<double> grad;
  const LossBreakdown with_grad = lagrangian_with_grad(m, sys, samples, duals, 4.0, nullptr, grad);
  const LossBreakdown values = eval_losses(m, sys, samples, duals, 4.0, nullptr);
  CHECK(with_grad.O_s == doctest::Approx(values.O_s).epsilon(1e-12));
  CHECK(with_grad.C1_s == doctest::Approx(values.C1_s).epsilon(1e-12));
  CHECK(with_grad.C2_s == doctest::Approx(values.C2_s).epsilon(1e-12));
  CHECK(with_grad.n_Rs == values.n_Rs);
  CHECK(with_grad.n_Bs == values.n_Bs);
}

TEST_CASE("gradient pass is identical for any thread count") {
  const DynamicalSystem sys = negative_identity_2d();
  Rng rng(20);
  SampleSets samples = make_sample_sets(2, 32, 700, 32, rng);
  TaylorLyapunov m = TaylorLyapunov::init(2, 6, 2, 77);
  for (double& p : m.params()) p += rng.uniform(-0.2, 0.2);
  DualVector duals;
  duals.objective = 1.0;
  std::vector<double> g1, g4;
  lagrangian_with_grad(m, sys, samples, duals, 4.0, nullptr, g1, nullptr, 1);
  lagrangian_with_grad(m, sys, samples, duals, 4.0, nullptr, g4, nullptr, 4);
  CHECK(g1 == g4);
}
