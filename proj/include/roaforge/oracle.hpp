#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "roaforge/dynamics.hpp"
#include "roaforge/losses.hpp"
#include "roaforge/model.hpp"
#include "roaforge/rng.hpp"

namespace roaforge {

// Outcome of integrating one trajectory on the unit domain. v_m is the
// accumulated integral of |x(t)| and is finite exactly when the trajectory
// converged; otherwise it is +infinity and `divergent` is set.
struct TrajectoryResult {
  enum class Exit { Converged, LeftDomain, Timeout };
  Exit exit = Exit::Timeout;
  double v_m = std::numeric_limits<double>::infinity();
  bool divergent = true;
  double final_norm = 0.0;
  double exit_time = 0.0;
};

// Classical fixed-step RK4 on the augmented system (x' = f(x), c' = |x|).
// Stops early when the state leaves (-1,1)^n or when |x| < 1e-6 (converged;
// the remaining integral is estimated from the slowest linear decay rate).
// At the horizon T, |x(T)| < 1e-3 still counts as converged.
TrajectoryResult integrate_rk4(const DynamicalSystem& system, const Eigen::VectorXd& x0, double dt,
                               double t_end);

// Raw-drift variant (no stability validation); decay_rate feeds the
// converged-tail estimate.
TrajectoryResult integrate_rk4(const DriftFn& drift, int n, double decay_rate,
                               const Eigen::VectorXd& x0, double dt, double t_end);

// State after integrating for `t` (no early stopping); test helper.
Eigen::VectorXd rk4_state_at(const DynamicalSystem& system, const Eigen::VectorXd& x0, double dt,
                             double t);

// Uniform initial points paired with their trajectory costs.
Dataset generate_dataset(const DynamicalSystem& system, int count, double dt, double t_end,
                         Rng& rng, int threads = 1);

void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path, int n);

// Largest level c on the grid {0.01, 0.02, ..., 1} such that the orbital
// derivative is negative at every checked sample with V(x) < c. The rescaled
// evaluator V/c makes the certified basin the sublevel set below 1 again.
// Throws CertificationError when no level >= 0.01 passes.
struct CertifiedRescale {
  double c = 1.0;
  int violations_at_full_level = 0;

  double value(const TaylorLyapunov& model, const double* x) const {
    return model.value(x) / c;
  }
};
CertifiedRescale rescale_certified(const TaylorLyapunov& model, const DynamicalSystem& system,
                                   int n_check, Rng& rng);

// Coverage of the simulator-verified region of attraction by the (rescaled)
// sublevel set {V/c < 1}. Ground truth: trajectories that stay in the domain
// and converge with v_m < M. `violations` recounts, on the fresh evaluation
// samples, points inside the rescaled basin with nonnegative orbital
// derivative. Throws NumericError when the ground-truth set is empty.
struct CoverageReport {
  double coverage_pct = 0.0;
  double c = 1.0;
  int n_eval = 0;
  double M = 0.0;
  int violations = 0;
  std::uint64_t seed = 0;
};
CoverageReport coverage(const TaylorLyapunov& model, double c, const DynamicalSystem& system,
                        int n_eval, double M, double dt, double t_end, std::uint64_t seed,
                        int threads = 1);

// Row-major grid over the closed unit square with the candidate value and
// orbital derivative per node; planar systems only.
struct GridRow {
  double x1, x2, value, dv0;
};
std::vector<GridRow> grid_eval(const TaylorLyapunov& model, const DynamicalSystem& system,
                               int resolution);

}  // namespace roaforge
