#pragma once

#include <Eigen/Dense>
#include <vector>

#include "roaforge/dynamics.hpp"
#include "roaforge/model.hpp"
#include "roaforge/rng.hpp"

namespace roaforge {

// The three sample populations used during training. Rows are points.
// boundary_obj carries one ray scale per point (pairing is stable for the
// whole run); boundary_c2 caches the outward normals.
struct SampleSets {
  Eigen::MatrixXd interior;      // N2 x n, uniform on (-1,1)^n
  Eigen::MatrixXd boundary_obj;  // N1 x n, on the boundary
  Eigen::VectorXd ray_scales;    // N1, in (0,1], starts at 1
  Eigen::MatrixXd boundary_c2;   // N3 x n, on the boundary
  Eigen::MatrixXd normals_c2;    // N3 x n
};

// Defaults: 256 / 4096 / 512 at n = 2, scaled by 2^n and capped at 65536.
int default_boundary_obj_count(int n);
int default_interior_count(int n);
int default_boundary_c2_count(int n);

Eigen::MatrixXd sample_interior(int n, int count, Rng& rng);
Eigen::MatrixXd sample_boundary(int n, int count, Rng& rng);

SampleSets make_sample_sets(int n, int n_boundary_obj, int n_interior, int n_boundary_c2,
                            Rng& rng);

// Replaces the interior points with fresh uniform draws of the same size.
// Boundary sets and ray scales are never resampled.
void resample_interior(SampleSets& samples, Rng& rng);

// Indices of interior points inside the current basin estimate, V(x) < 1.
std::vector<int> select_region(const Eigen::MatrixXd& interior, const TaylorLyapunov& model);

// Indices of boundary points where the flow leaves the domain, f(x).n(x) >= 0.
std::vector<int> select_outflow(const Eigen::MatrixXd& boundary, const Eigen::MatrixXd& normals,
                                const DriftFn& drift);
std::vector<int> select_outflow(const Eigen::MatrixXd& boundary, const Eigen::MatrixXd& normals,
                                const DynamicalSystem& system);

}  // namespace roaforge
