#include "roaforge/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "roaforge/common.hpp"

namespace roaforge {

namespace {

constexpr double kScalarFloor = 1e-8;  // keeps gamma and beta away from 0
constexpr double kEpsFloor = 1e-6;
constexpr double kEpsCap = 10.0;

void apply_scalar_floor(double& value) {
  if (std::abs(value) < kScalarFloor) value = value < 0.0 ? -kScalarFloor : kScalarFloor;
}

bool is_unit_domain(const DynamicalSystem& system) {
  const Box& box = system.original_box();
  for (int i = 0; i < system.dim(); ++i) {
    if (std::abs(box.lower(i) + 1.0) > 1e-12 || std::abs(box.upper(i) - 1.0) > 1e-12) return false;
  }
  return true;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

}  // namespace

void TrainerConfig::validate() const {
  if (n_epoch < 1) throw ConfigError("trainer: n_epoch must be >= 1");
  if (n_lambda < 1) throw ConfigError("trainer: n_lambda must be >= 1");
  if (!(alpha_psi > 0) || !(alpha_lambda > 0) || !(alpha_eta > 0) || !(alpha_eps > 0)) {
    throw ConfigError("trainer: learning rates must be positive");
  }
  if (!(xi > 0) || !(xi * alpha_eta > 0) || !(xi * alpha_eta < 1)) {
    throw ConfigError("trainer: xi * alpha_eta must lie in (0, 1)");
  }
  if (!(p > 2)) throw ConfigError("trainer: forcing exponent p must be > 2");
  if (lambda_eps < 0) throw ConfigError("trainer: lambda_eps must be nonnegative");
  if (stopping_tol < 0) throw ConfigError("trainer: stopping_tol must be nonnegative");
  if (width < 1 || depth < 1) throw ConfigError("trainer: width and depth must be >= 1");
  if (momentum < 0 || momentum >= 1) throw ConfigError("trainer: momentum must lie in [0, 1)");
  if (threads < 1) throw ConfigError("trainer: threads must be >= 1");
}

int TrainerConfig::boundary_obj_count(int n) const {
  return n_boundary_obj > 0 ? n_boundary_obj : default_boundary_obj_count(n);
}
int TrainerConfig::interior_count(int n) const {
  return n_interior > 0 ? n_interior : default_interior_count(n);
}
int TrainerConfig::boundary_c2_count(int n) const {
  return n_boundary_c2 > 0 ? n_boundary_c2 : default_boundary_c2_count(n);
}

double TrainerConfig::eta_rate(int epoch) const {
  if (!decaying_alpha_eta) return alpha_eta;
  return alpha_eta / std::sqrt(1.0 + epoch / 1000.0);
}

TrainState init_train_state(const DynamicalSystem& system, const TrainerConfig& cfg,
                            bool supervised) {
  const int n = system.dim();
  Rng rng(cfg.seed);
  const std::uint64_t model_seed = rng.next_u64();
  TrainState st{
      TaylorLyapunov::init(n, cfg.width, cfg.depth, model_seed, supervised, cfg.activation),
      DualVector{},
      make_sample_sets(n, cfg.boundary_obj_count(n), cfg.interior_count(n),
                       cfg.boundary_c2_count(n), rng),
      0,
      rng,
      {},
      {},
      {},
      supervised};
  st.duals.eps_reg = cfg.lambda_eps;
  st.velocity.assign(st.model.layout().total(), 0.0);
  return st;
}

LossBreakdown primal_update(TrainState& st, const DynamicalSystem& system,
                            const TrainerConfig& cfg, const Dataset* dataset) {
  std::vector<double> grad;
  double d_data_d_eps = 0.0;
  const Dataset* data = st.supervised ? dataset : nullptr;
  LossBreakdown bd = lagrangian_with_grad(st.model, system, st.samples, st.duals, cfg.p, data,
                                          grad, &d_data_d_eps, cfg.threads);

  bool grad_finite = true;
  for (double g : grad) grad_finite = grad_finite && std::isfinite(g);
  if (!grad_finite || !std::isfinite(bd.total) || !std::isfinite(d_data_d_eps)) {
    std::string term = "parameter gradient";
    if (!std::isfinite(bd.O_s)) term = "boundary objective O_s";
    if (!std::isfinite(bd.C1_s)) term = "interior constraint C1_s";
    if (!std::isfinite(bd.C2_s)) term = "outflow constraint C2_s";
    if (!std::isfinite(bd.O_data) || !std::isfinite(d_data_d_eps)) term = "data objective O_data";
    throw NumericError("primal update at epoch " + std::to_string(st.epoch) +
                       ": non-finite " + term);
  }

  auto& params = st.model.params();
  const ParamLayout& layout = st.model.layout();
  const int psi_count = layout.beta_index() + 1;  // epsilon is stepped separately
  if (cfg.optimizer == OptimizerKind::Momentum) {
    for (int i = 0; i < psi_count; ++i) {
      st.velocity[i] = cfg.momentum * st.velocity[i] + grad[i];
      params[i] -= cfg.alpha_psi * st.velocity[i];
    }
  } else {
    for (int i = 0; i < psi_count; ++i) params[i] -= cfg.alpha_psi * grad[i];
  }
  apply_scalar_floor(params[layout.gamma_index()]);
  apply_scalar_floor(params[layout.beta_index()]);

  if (st.supervised) {
    double eps = st.model.epsilon() - cfg.alpha_eps * d_data_d_eps;
    eps = std::min(kEpsCap, std::max(kEpsFloor, eps));
    st.model.set_epsilon(eps);
  }
  return bd;
}

void eta_step(TrainState& st, const TrainerConfig& cfg) {
  const int n = st.model.layout().n;
  const double rate = cfg.eta_rate(st.epoch);
  double pt[kMaxDim];
  for (int i = 0; i < st.samples.boundary_obj.rows(); ++i) {
    const double eta = st.samples.ray_scales(i);
    for (int j = 0; j < n; ++j) pt[j] = eta * st.samples.boundary_obj(i, j);
    const double v = st.model.value(pt);
    const double g = v < 1.0 ? 1.0 - v : -cfg.xi * eta;
    st.samples.ray_scales(i) = std::min(1.0, eta + rate * g);
  }
}

void project_model(TrainState& st, const DynamicalSystem& system, const TrainerConfig&) {
  ConeSpec spec{system.linearization(), st.model.gamma(), 0.0};
  st.model.set_p_matrix(project_to_cone(st.model.p_matrix(), spec));
}

LossBreakdown primal_step(TrainState& st, const DynamicalSystem& system, const TrainerConfig& cfg,
                          const Dataset* dataset) {
  LossBreakdown bd = primal_update(st, system, cfg, dataset);
  project_model(st, system, cfg);
  return bd;
}

void dual_step(TrainState& st, const DynamicalSystem& system, const TrainerConfig& cfg,
               const Dataset* dataset) {
  const Dataset* data = st.supervised ? dataset : nullptr;
  const LossBreakdown bd = eval_losses(st.model, system, st.samples, st.duals, cfg.p, data);
  st.duals.objective = std::min(1.0, st.duals.objective + cfg.alpha_lambda * bd.O_s);
  st.duals.interior += cfg.alpha_lambda * bd.C1_s;
  st.duals.outflow += cfg.alpha_lambda * bd.C2_s;
  if (st.supervised) {
    st.duals.data =
        std::exp(-(st.duals.objective + st.duals.interior + st.duals.outflow) / 3.0);
  }
}

bool stopping_criterion(const std::vector<LossBreakdown>& history, const TrainerConfig& cfg) {
  const int len = static_cast<int>(history.size());
  if (len < 2 * cfg.n_lambda) return false;
  const LossBreakdown& last = history.back();
  if (!(last.C1_s + last.C2_s < cfg.stopping_tol)) return false;
  const int span = std::min(5 * cfg.n_lambda, len - 1);
  const double ref = history[len - 1 - span].O_s;
  return std::abs(last.O_s - ref) <= 1e-4 * std::max(std::abs(ref), 1e-12);
}

void write_checkpoint(const TrainState& st, const std::string& path) {
  nlohmann::json j;
  j["model"] = st.model.to_json();
  j["duals"] = {{"lambda0", st.duals.objective},
                {"lambda1", st.duals.interior},
                {"lambda2", st.duals.outflow},
                {"lambda_data", st.duals.data},
                {"lambda_eps", st.duals.eps_reg}};
  j["epoch"] = st.epoch;
  j["supervised"] = st.supervised;
  j["rng"] = st.rng.save_state();
  j["velocity"] = st.velocity;
  j["samples"] = {{"interior", matrix_to_json(st.samples.interior)},
                  {"boundary_obj", matrix_to_json(st.samples.boundary_obj)},
                  {"boundary_c2", matrix_to_json(st.samples.boundary_c2)},
                  {"normals_c2", matrix_to_json(st.samples.normals_c2)}};
  nlohmann::json eta = nlohmann::json::array();
  for (int i = 0; i < st.samples.ray_scales.size(); ++i) eta.push_back(st.samples.ray_scales(i));
  j["eta"] = std::move(eta);
  nlohmann::json hist = nlohmann::json::array();
  for (const LossBreakdown& b : st.history) {
    hist.push_back({b.O_s, b.C1_s, b.C2_s, b.O_data, b.total, b.n_Rs, b.n_Bs});
  }
  j["history"] = std::move(hist);
  nlohmann::json dhist = nlohmann::json::array();
  for (const DualVector& d : st.dual_history) {
    dhist.push_back({d.objective, d.interior, d.outflow, d.data, d.eps_reg});
  }
  j["dual_history"] = std::move(dhist);

  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open checkpoint file for writing: " + path);
  out << j.dump() << "\n";
}

TrainState read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint file: " + path);
  nlohmann::json j;
  in >> j;

  TaylorLyapunov model = TaylorLyapunov::from_json(j.at("model"));
  TrainState st{std::move(model), DualVector{}, SampleSets{}, j.at("epoch").get<int>(),
                Rng(0),           {},           {},           {},
                j.at("supervised").get<bool>()};
  st.duals.objective = j.at("duals").at("lambda0").get<double>();
  st.duals.interior = j.at("duals").at("lambda1").get<double>();
  st.duals.outflow = j.at("duals").at("lambda2").get<double>();
  st.duals.data = j.at("duals").at("lambda_data").get<double>();
  st.duals.eps_reg = j.at("duals").at("lambda_eps").get<double>();
  st.rng.restore_state(j.at("rng").get<std::string>());
  st.velocity = j.at("velocity").get<std::vector<double>>();
  st.samples.interior = matrix_from_json(j.at("samples").at("interior"));
  st.samples.boundary_obj = matrix_from_json(j.at("samples").at("boundary_obj"));
  st.samples.boundary_c2 = matrix_from_json(j.at("samples").at("boundary_c2"));
  st.samples.normals_c2 = matrix_from_json(j.at("samples").at("normals_c2"));
  const auto& eta = j.at("eta");
  st.samples.ray_scales.resize(static_cast<int>(eta.size()));
  for (int i = 0; i < st.samples.ray_scales.size(); ++i) {
    st.samples.ray_scales(i) = eta.at(i).get<double>();
  }
  for (const auto& b : j.at("history")) {
    LossBreakdown bd;
    bd.O_s = b.at(0).get<double>();
    bd.C1_s = b.at(1).get<double>();
    bd.C2_s = b.at(2).get<double>();
    bd.O_data = b.at(3).get<double>();
    bd.total = b.at(4).get<double>();
    bd.n_Rs = b.at(5).get<int>();
    bd.n_Bs = b.at(6).get<int>();
    st.history.push_back(bd);
  }
  for (const auto& d : j.at("dual_history")) {
    DualVector dv;
    dv.objective = d.at(0).get<double>();
    dv.interior = d.at(1).get<double>();
    dv.outflow = d.at(2).get<double>();
    dv.data = d.at(3).get<double>();
    dv.eps_reg = d.at(4).get<double>();
    st.dual_history.push_back(dv);
  }
  return st;
}

namespace {

TrainOutcome run_loop(TrainState st, const DynamicalSystem& system, const TrainerConfig& cfg,
                      const Dataset* dataset, const EpochObserver& observer, bool fell_back) {
  for (int epoch = st.epoch + 1; epoch <= cfg.n_epoch; ++epoch) {
    st.epoch = epoch;
    st.dual_history.push_back(st.duals);
    st.history.push_back(primal_update(st, system, cfg, dataset));
    eta_step(st, cfg);
    project_model(st, system, cfg);
    if (epoch % cfg.n_lambda == 0) {
      dual_step(st, system, cfg, dataset);
      resample_interior(st.samples, st.rng);
      if (!cfg.checkpoint_path.empty()) write_checkpoint(st, cfg.checkpoint_path);
    }
    if (observer) observer(st);
    if (stopping_criterion(st.history, cfg)) break;
  }
  return TrainOutcome{std::move(st), fell_back};
}

}  // namespace

TrainOutcome train(const DynamicalSystem& system, const TrainerConfig& cfg, const Dataset* dataset,
                   const EpochObserver& observer) {
  cfg.validate();
  if (!is_unit_domain(system)) {
    throw ConfigError("train: the system must be rescaled to the unit domain first");
  }
  bool supervised = cfg.mode == TrainMode::Supervised;
  bool fell_back = false;
  if (supervised && (dataset == nullptr || dataset->size() == 0)) {
    std::cerr << "warning: supervised mode requested with an empty dataset; "
                 "falling back to unsupervised training\n";
    supervised = false;
    fell_back = true;
  }
  return run_loop(init_train_state(system, cfg, supervised), system, cfg,
                  supervised ? dataset : nullptr, observer, fell_back);
}

TrainOutcome train_resume(const DynamicalSystem& system, const TrainerConfig& cfg,
                          const std::string& checkpoint_path, const Dataset* dataset,
                          const EpochObserver& observer) {
  cfg.validate();
  if (!is_unit_domain(system)) {
    throw ConfigError("train: the system must be rescaled to the unit domain first");
  }
  TrainState st = read_checkpoint(checkpoint_path);
  const bool supervised = st.supervised;
  return run_loop(std::move(st), system, cfg, supervised ? dataset : nullptr, observer, false);
}

}  // namespace roaforge
