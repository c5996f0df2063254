#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "roaforge/jet.hpp"
#include "roaforge/model.hpp"
#include "roaforge/rng.hpp"

namespace roaforge {

// Evaluates the candidate as a jet (value plus gradient w.r.t. the input
// coordinates) and backpropagates adjoints of the whole jet into the flat
// parameter vector. Seeding one forward direction per input coordinate and
// then differentiating the jet expression in reverse gives exact parameter
// gradients of losses that contain input-gradient terms.
//
// Instances cache one sample's intermediates between forward() and
// backward(); use one instance per thread.
class ModelEval {
 public:
  explicit ModelEval(const TaylorLyapunov& model);

  struct Result {
    Jet v_tilde;             // candidate value and its input gradient
    double v_hat = 0.0;      // unclamped candidate value
    bool unclamped = false;  // min(1, v_hat) took the v_hat branch
  };

  const Result& forward(const double* x);

  // Accumulates into grad (layout-sized) the parameter gradient of
  //   adj.v * v_tilde(x) + sum_j adj.d[j] * (d v_tilde / d x_j)(x).
  // Requires a preceding forward() at the same point.
  void backward(const Jet& adj, double* grad);

  const TaylorLyapunov& model() const { return *model_; }

 private:
  const TaylorLyapunov* model_;
  int n_, width_, depth_, n_out_;
  const double* x_ = nullptr;
  Result result_;
  std::vector<Jet> pre_;   // depth x width pre-activations
  std::vector<Jet> act_;   // depth x width activations
  std::vector<Jet> out_;   // residual outputs
  std::vector<Jet> adj_cur_, adj_prev_;  // scratch activation adjoints
};

// Exact input gradient of the candidate at x.
Eigen::VectorXd grad_wrt_input(const TaylorLyapunov& model, const double* x);

// A scalar loss of the model parameters with a consistent analytic gradient.
// kink_distance reports how close the configuration sits to a nonsmooth
// branch switch (min clamp, rectifier, or region membership); and
// branch_signature hashes the active branch pattern.
struct LossEvaluator {
  std::function<double(const TaylorLyapunov&)> value;
  std::function<std::vector<double>(const TaylorLyapunov&)> gradient;
  std::function<double(const TaylorLyapunov&)> kink_distance;       // optional
  std::function<std::uint64_t(const TaylorLyapunov&)> branch_signature;  // optional
};

// Central-difference verification of the analytic gradient on `trials`
// random parameter coordinates. Coordinates whose perturbation crosses a
// branch switch, or configurations within 1e-4 of a kink, are excluded.
// Returns the worst relative discrepancy (0 when both gradients vanish).
double finite_diff_check(const LossEvaluator& loss, const TaylorLyapunov& model, int trials,
                         Rng& rng, double step = 1e-6);

}  // namespace roaforge
