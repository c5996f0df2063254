#include "roaforge/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "roaforge/common.hpp"

namespace roaforge {

namespace {

int scaled_count(int base_at_2, int n) {
  const double c = base_at_2 / 4.0;
  const double raw = std::ceil(c * std::pow(2.0, n));
  return static_cast<int>(std::min(raw, 65536.0));
}

}  // namespace

int default_boundary_obj_count(int n) { return scaled_count(256, n); }
int default_interior_count(int n) { return scaled_count(4096, n); }
int default_boundary_c2_count(int n) { return scaled_count(512, n); }

Eigen::MatrixXd sample_interior(int n, int count, Rng& rng) {
  if (count < 1) throw ConfigError("sample_interior: count must be >= 1");
  Eigen::MatrixXd pts(count, n);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < n; ++j) pts(i, j) = rng.uniform(-1.0, 1.0);
  }
  return pts;
}

Eigen::MatrixXd sample_boundary(int n, int count, Rng& rng) {
  if (count < 1) throw ConfigError("sample_boundary: count must be >= 1");
  Eigen::MatrixXd pts(count, n);
  for (int i = 0; i < count; ++i) {
    const int face = rng.next_int(2 * n);
    const int axis = face / 2;
    const double sign = (face % 2 == 0) ? 1.0 : -1.0;
    for (int j = 0; j < n; ++j) {
      pts(i, j) = (j == axis) ? sign : rng.uniform(-1.0, 1.0);
    }
  }
  return pts;
}

SampleSets make_sample_sets(int n, int n_boundary_obj, int n_interior, int n_boundary_c2,
                            Rng& rng) {
  SampleSets s;
  s.interior = sample_interior(n, n_interior, rng);
  s.boundary_obj = sample_boundary(n, n_boundary_obj, rng);
  s.ray_scales = Eigen::VectorXd::Ones(n_boundary_obj);
  s.boundary_c2 = sample_boundary(n, n_boundary_c2, rng);
  s.normals_c2.resize(n_boundary_c2, n);
  for (int i = 0; i < n_boundary_c2; ++i) {
    s.normals_c2.row(i) = boundary_normal(s.boundary_c2.row(i).transpose()).transpose();
  }
  return s;
}

void resample_interior(SampleSets& samples, Rng& rng) {
  const int count = static_cast<int>(samples.interior.rows());
  const int n = static_cast<int>(samples.interior.cols());
  samples.interior = sample_interior(n, count, rng);
}

std::vector<int> select_region(const Eigen::MatrixXd& interior, const TaylorLyapunov& model) {
  std::vector<int> idx;
  Eigen::RowVectorXd row;
  for (int i = 0; i < interior.rows(); ++i) {
    row = interior.row(i);
    if (model.value(row.data()) < 1.0) idx.push_back(i);
  }
  return idx;
}

std::vector<int> select_outflow(const Eigen::MatrixXd& boundary, const Eigen::MatrixXd& normals,
                                const DriftFn& drift) {
  std::vector<int> idx;
  const int n = static_cast<int>(boundary.cols());
  Eigen::RowVectorXd row(n);
  Eigen::VectorXd f(n);
  for (int i = 0; i < boundary.rows(); ++i) {
    row = boundary.row(i);
    drift(row.data(), f.data());
    if (f.dot(normals.row(i).transpose()) >= 0.0) idx.push_back(i);
  }
  return idx;
}

std::vector<int> select_outflow(const Eigen::MatrixXd& boundary, const Eigen::MatrixXd& normals,
                                const DynamicalSystem& system) {
  return select_outflow(boundary, normals,
                        DriftFn([&system](const double* x, double* dx) { system.drift(x, dx); }));
}

}  // namespace roaforge
