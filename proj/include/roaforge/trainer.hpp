#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roaforge/dynamics.hpp"
#include "roaforge/losses.hpp"
#include "roaforge/model.hpp"
#include "roaforge/projection.hpp"
#include "roaforge/rng.hpp"
#include "roaforge/sampling.hpp"

namespace roaforge {

enum class TrainMode { Unsupervised, Supervised };
enum class OptimizerKind { Plain, Momentum };

struct TrainerConfig {
  int n_epoch = 4000;
  int n_lambda = 50;  // dual update / resampling period
  double alpha_psi = 1e-3;
  double alpha_lambda = 0.05;
  double alpha_eta = 0.01;
  double alpha_eps = 1e-3;
  double xi = 0.5;
  double p = 4.0;  // forcing exponent, > 2
  double lambda_eps = 0.01;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::Unsupervised;
  double stopping_tol = 1e-6;
  OptimizerKind optimizer = OptimizerKind::Plain;
  double momentum = 0.9;
  bool decaying_alpha_eta = false;
  int width = 32;
  int depth = 2;
  Activation activation = Activation::Tanh;
  int n_boundary_obj = 0;  // 0 selects the dimension-scaled defaults
  int n_interior = 0;
  int n_boundary_c2 = 0;
  int threads = 1;
  std::string checkpoint_path;  // empty disables checkpoints

  void validate() const;  // throws ConfigError
  int boundary_obj_count(int n) const;
  int interior_count(int n) const;
  int boundary_c2_count(int n) const;
  double eta_rate(int epoch) const;
};

struct TrainState {
  TaylorLyapunov model;
  DualVector duals;
  SampleSets samples;
  int epoch = 0;
  Rng rng;
  std::vector<LossBreakdown> history;      // one entry per epoch (pre-step losses)
  std::vector<DualVector> dual_history;    // duals in effect at each epoch
  std::vector<double> velocity;            // momentum buffer
  bool supervised = false;
};

TrainState init_train_state(const DynamicalSystem& system, const TrainerConfig& cfg,
                            bool supervised);

// One first-order step on the weighted objective for all primal parameters
// (P, network, gamma, beta; epsilon by its own rate on the data term in
// supervised mode). Returns the losses at the pre-step parameters. Throws
// NumericError naming the offending loss term on non-finite gradients.
LossBreakdown primal_update(TrainState& st, const DynamicalSystem& system,
                            const TrainerConfig& cfg, const Dataset* dataset);

// Ray-scale ascent toward the basin boundary: grow by 1 - V(eta x) inside
// the basin, shrink by xi*eta outside; clamped into (0, 1].
void eta_step(TrainState& st, const TrainerConfig& cfg);

// Replaces P by its projection onto the feasible cone for the current gamma.
void project_model(TrainState& st, const DynamicalSystem& system, const TrainerConfig& cfg);

// Combined primal update followed by the projection; after this the
// quadratic part always passes in_cone.
LossBreakdown primal_step(TrainState& st, const DynamicalSystem& system, const TrainerConfig& cfg,
                          const Dataset* dataset);

// Dual ascent at the current (post-step) parameters: each multiplier grows by
// alpha_lambda times its loss value; the objective weight is clamped to
// [0, 1]; in supervised mode the data weight is recomputed from the duals.
void dual_step(TrainState& st, const DynamicalSystem& system, const TrainerConfig& cfg,
               const Dataset* dataset);

// True when the constraint losses sit below stopping_tol and the boundary
// objective has been flat (relative change < 1e-4) over the last five dual
// periods. Needs at least two dual periods of history.
bool stopping_criterion(const std::vector<LossBreakdown>& history, const TrainerConfig& cfg);

void write_checkpoint(const TrainState& st, const std::string& path);
TrainState read_checkpoint(const std::string& path);

struct TrainOutcome {
  TrainState state;
  bool fell_back_unsupervised = false;
};

using EpochObserver = std::function<void(const TrainState&)>;

// Full training loop: per epoch a primal update, the ray-scale update, the
// projection, then every n_lambda epochs a dual step, an interior resample
// and a checkpoint; stops at n_epoch or at the stopping criterion. The
// system must already live on the unit domain. In supervised mode an empty
// dataset falls back to unsupervised training with a warning flag.
TrainOutcome train(const DynamicalSystem& system, const TrainerConfig& cfg,
                   const Dataset* dataset = nullptr, const EpochObserver& observer = nullptr);

// Continues a checkpointed run to cfg.n_epoch.
TrainOutcome train_resume(const DynamicalSystem& system, const TrainerConfig& cfg,
                          const std::string& checkpoint_path, const Dataset* dataset = nullptr,
                          const EpochObserver& observer = nullptr);

}  // namespace roaforge
