#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "roaforge/autodiff.hpp"
#include "roaforge/dynamics.hpp"
#include "roaforge/model.hpp"
#include "roaforge/sampling.hpp"

namespace roaforge {

// Lagrange multipliers. `objective` is clamped to [0,1]; the constraint
// multipliers grow without bound; `data` is recomputed from the others in
// supervised mode and `eps_reg` is a fixed configuration weight.
struct DualVector {
  double objective = 0.0;
  double interior = 1.0;
  double outflow = 1.0;
  double data = std::exp(-2.0 / 3.0);
  double eps_reg = 0.01;
};

// Per-evaluation telemetry. Field names follow the training-log schema.
struct LossBreakdown {
  double O_s = 0.0;
  double C1_s = 0.0;
  double C2_s = 0.0;
  double O_data = 0.0;
  double total = 0.0;
  int n_Rs = 0;
  int n_Bs = 0;
};

// Trajectory-cost dataset for supervised training; v_m is +infinity for
// initial points that do not converge.
struct Dataset {
  Eigen::MatrixXd points;  // rows are samples
  std::vector<double> v_m;
  std::vector<std::uint8_t> divergent;

  std::size_t size() const { return divergent.size(); }
};

// Orbital derivative of the candidate along the flow, grad V . f.
double orbital_derivative(const TaylorLyapunov& model, const DynamicalSystem& system,
                          const double* x);

// Orbital derivative plus the level forcing beta^2 (1 - V(x)) |x|^p, p > 2.
double forced_derivative(const TaylorLyapunov& model, const DynamicalSystem& system,
                         const double* x, double p);

// Mean squared orbital derivative over the tracked boundary points
// scaled by their ray factors.
double boundary_objective(const TaylorLyapunov& model, const DynamicalSystem& system,
                          const Eigen::MatrixXd& boundary_obj, const Eigen::VectorXd& ray_scales);

// Mean of [forced derivative]_+^2 over the interior points inside the basin
// estimate; 0 when no point is inside.
double interior_constraint(const TaylorLyapunov& model, const DynamicalSystem& system,
                           const Eigen::MatrixXd& interior, double p);

// Mean of [1 - V]_+^2 over boundary points with outgoing flow; 0 when none.
double outflow_constraint(const TaylorLyapunov& model, const DynamicalSystem& system,
                          const Eigen::MatrixXd& boundary_c2, const Eigen::MatrixXd& normals);

// Mean squared mismatch between the candidate and tanh(epsilon v_m);
// divergent entries use the saturated target 1. Returns 0 on an empty
// dataset and sets *warned_empty when provided.
double data_objective(const TaylorLyapunov& model, const Dataset& data,
                      bool* warned_empty = nullptr);

// Weighted sum of the loss pieces; in supervised mode adds the data term and
// the epsilon regularizer.
double lagrangian(const LossBreakdown& pieces, const DualVector& duals, bool supervised,
                  double epsilon);

// One combined pass over the samples (and dataset, when given): returns the
// loss values and accumulates the parameter gradient of the weighted sum
// into `grad`. d_data_d_eps, when non-null, receives the derivative of the
// unweighted data objective w.r.t. epsilon. Uses fixed-size reduction blocks
// so results are identical for any thread count.
LossBreakdown lagrangian_with_grad(const TaylorLyapunov& model, const DynamicalSystem& system,
                                   const SampleSets& samples, const DualVector& duals, double p,
                                   const Dataset* dataset, std::vector<double>& grad,
                                   double* d_data_d_eps = nullptr, int threads = 1);

// Loss values only (no gradient).
LossBreakdown eval_losses(const TaylorLyapunov& model, const DynamicalSystem& system,
                          const SampleSets& samples, const DualVector& duals, double p,
                          const Dataset* dataset);

// Distance of the configuration to the nearest nonsmooth branch switch
// (min clamp, region membership, rectifier) over all sample points.
double kink_distance(const TaylorLyapunov& model, const DynamicalSystem& system,
                     const SampleSets& samples, double p);

// Packages the full (augmented) weighted objective as a differentiable loss
// for gradient verification.
LossEvaluator make_lagrangian_evaluator(const DynamicalSystem& system, const SampleSets& samples,
                                        const DualVector& duals, double p,
                                        const Dataset* dataset = nullptr);

}  // namespace roaforge
