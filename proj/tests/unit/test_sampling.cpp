#include <doctest.h>

#include <cmath>

#include "roaforge/common.hpp"
#include "roaforge/sampling.hpp"

using namespace roaforge;

namespace {

TaylorLyapunov quadratic_model(double p_diag, double gamma, int n = 2) {
  ParamLayout layout;
  layout.n = n;
  layout.width = 2;
  layout.depth = 1;
  layout.n_out = static_cast<int>(index_set(n).size());
  TaylorLyapunov m(layout);
  m.set_p_matrix(p_diag * Eigen::MatrixXd::Identity(n, n));
  m.set_gamma(gamma);
  return m;
}

}  // namespace

TEST_CASE("interior sampling: bounds, mean, and rejection of empty draws") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_interior(2, 0, rng), ConfigError);

  const int count = 100000;
  Eigen::MatrixXd pts = sample_interior(2, count, rng);
  for (int i = 0; i < 200; ++i) {
    CHECK(pts.row(i).lpNorm<Eigen::Infinity>() < 1.0);
  }
  CHECK(pts.cwiseAbs().maxCoeff() < 1.0);
  // CLT bound: 3 sigma / sqrt(N) with Var = 1/3.
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(pts.col(j).mean()) < 0.02);
  }
}

TEST_CASE("boundary sampling: one active face per point, uniform face frequencies") {
  Rng rng(2);
  CHECK_THROWS_AS(sample_boundary(2, 0, rng), ConfigError);

  Eigen::MatrixXd one_d = sample_boundary(1, 200, rng);
  for (int i = 0; i < one_d.rows(); ++i) {
    CHECK(std::abs(one_d(i, 0)) == 1.0);
  }

  const int n = 3;
  const int count = 10000;
  Eigen::MatrixXd pts = sample_boundary(n, count, rng);
  std::vector<int> face_counts(2 * n, 0);
  for (int i = 0; i < count; ++i) {
    int active = -1;
    for (int j = 0; j < n; ++j) {
      if (std::abs(pts(i, j)) == 1.0) {
        CHECK(active == -1);  // exactly one coordinate on a face
        active = j;
      } else {
        CHECK(std::abs(pts(i, j)) < 1.0);
      }
    }
    REQUIRE(active >= 0);
    face_counts[2 * active + (pts(i, active) > 0 ? 0 : 1)]++;
  }
  const double expected = count / (2.0 * n);
  const double sigma = std::sqrt(count * (1.0 / (2 * n)) * (1.0 - 1.0 / (2 * n)));
  for (int f = 0; f < 2 * n; ++f) {
    CHECK(std::abs(face_counts[f] - expected) <= 5.0 * sigma);
  }
}

TEST_CASE("region selection tracks the sublevel set of the candidate") {
  Rng rng(3);
  Eigen::MatrixXd interior = sample_interior(2, 2000, rng);

  // Tiny ridge only: every point is inside.
  TaylorLyapunov ridge = quadratic_model(0.0, 0.1);
  CHECK(select_region(interior, ridge).size() == 2000);

  // Steep quadratic with gamma = 0: membership is exactly |x| < 0.5.
  TaylorLyapunov steep = quadratic_model(8.0, 0.0);
  const auto idx = select_region(interior, steep);
  std::vector<bool> member(2000, false);
  for (int i : idx) member[i] = true;
  for (int i = 0; i < 2000; ++i) {
    CHECK(member[i] == (interior.row(i).squaredNorm() < 0.25));
  }
  CHECK(idx.size() <= 2000);

  // Candidate at or above 1 at every sampled point: empty region.
  TaylorLyapunov wall = quadratic_model(1e8, 1.1);
  CHECK(select_region(interior, wall).empty());
}

TEST_CASE("outflow selection keeps the points where the flow exits") {
  Rng rng(4);
  const int count = 500;
  Eigen::MatrixXd boundary = sample_boundary(2, count, rng);
  Eigen::MatrixXd normals(count, 2);
  for (int i = 0; i < count; ++i) {
    normals.row(i) = boundary_normal(boundary.row(i).transpose()).transpose();
  }

  DriftFn inflow = [](const double* x, double* dx) {
    dx[0] = -x[0];
    dx[1] = -x[1];
  };
  CHECK(select_outflow(boundary, normals, inflow).empty());

  DriftFn outflow = [](const double* x, double* dx) {
    dx[0] = x[0];
    dx[1] = x[1];
  };
  CHECK(select_outflow(boundary, normals, outflow).size() == count);

  DriftFn rotation = [](const double* x, double* dx) {
    dx[0] = x[1];
    dx[1] = -x[0];
  };
  const auto kept = select_outflow(boundary, normals, rotation);
  std::vector<bool> member(count, false);
  for (int i : kept) member[i] = true;
  for (int i = 0; i < count; ++i) {
    const double pt[2] = {boundary(i, 0), boundary(i, 1)};
    double f[2];
    rotation(pt, f);
    Eigen::RowVector2d fv(f[0], f[1]);
    CHECK(member[i] == (fv.dot(normals.row(i)) >= 0.0));
  }
}

TEST_CASE("interior resampling leaves boundary sets and ray scales untouched") {
  Rng rng(5);
  SampleSets s = make_sample_sets(2, 32, 128, 32, rng);
  s.ray_scales(3) = 0.8;
  const Eigen::MatrixXd interior_before = s.interior;
  const Eigen::MatrixXd boundary_obj_before = s.boundary_obj;
  const Eigen::MatrixXd boundary_c2_before = s.boundary_c2;
  const Eigen::VectorXd eta_before = s.ray_scales;

  resample_interior(s, rng);

  CHECK(s.boundary_obj == boundary_obj_before);
  CHECK(s.boundary_c2 == boundary_c2_before);
  CHECK(s.ray_scales == eta_before);
  CHECK(s.interior.rows() == interior_before.rows());
  CHECK(s.interior != interior_before);
}

TEST_CASE("default sample counts: frozen values at n = 2 and the 2^n cap") {
  CHECK(default_boundary_obj_count(2) == 256);
  CHECK(default_interior_count(2) == 4096);
  CHECK(default_boundary_c2_count(2) == 512);
  CHECK(default_interior_count(10) == 65536);
  CHECK(default_boundary_obj_count(1) == 128);
}
