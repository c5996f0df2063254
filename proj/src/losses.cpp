#include "roaforge/losses.hpp"

#include <algorithm>

#include "roaforge/common.hpp"
#include "roaforge/parallel.hpp"

namespace roaforge {

namespace {

constexpr std::size_t kBlock = 256;

double pow_norm(const double* x, int n, double p) {
  double sq = 0.0;
  for (int j = 0; j < n; ++j) sq += x[j] * x[j];
  return std::pow(sq, 0.5 * p);
}

double forced_term(const ModelEval::Result& res, const double* x, int n, double beta, double p) {
  return beta * beta * (1.0 - res.v_tilde.v) * pow_norm(x, n, p);
}

double dv0_of(const ModelEval::Result& res, const double* f, int n) {
  double dv = 0.0;
  for (int j = 0; j < n; ++j) dv += res.v_tilde.d[j] * f[j];
  return dv;
}

std::uint64_t fnv_step(std::uint64_t h, std::uint64_t bit) {
  h ^= bit + 0x9e3779b97f4a7c15ULL;
  h *= 0x100000001b3ULL;
  return h;
}

}  // namespace

double orbital_derivative(const TaylorLyapunov& model, const DynamicalSystem& system,
                          const double* x) {
  const int n = model.layout().n;
  ModelEval eval(model);
  const auto& res = eval.forward(x);
  double f[kMaxDim];
  system.drift(x, f);
  return dv0_of(res, f, n);
}

double forced_derivative(const TaylorLyapunov& model, const DynamicalSystem& system,
                         const double* x, double p) {
  const int n = model.layout().n;
  ModelEval eval(model);
  const auto& res = eval.forward(x);
  double f[kMaxDim];
  system.drift(x, f);
  return dv0_of(res, f, n) + forced_term(res, x, n, model.beta(), p);
}

double boundary_objective(const TaylorLyapunov& model, const DynamicalSystem& system,
                          const Eigen::MatrixXd& boundary_obj, const Eigen::VectorXd& ray_scales) {
  const int n = model.layout().n;
  const int count = static_cast<int>(boundary_obj.rows());
  ModelEval eval(model);
  double sum = 0.0;
  double pt[kMaxDim], f[kMaxDim];
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < n; ++j) pt[j] = ray_scales(i) * boundary_obj(i, j);
    const auto& res = eval.forward(pt);
    system.drift(pt, f);
    const double dv = dv0_of(res, f, n);
    sum += dv * dv;
  }
  return sum / count;
}

double interior_constraint(const TaylorLyapunov& model, const DynamicalSystem& system,
                           const Eigen::MatrixXd& interior, double p) {
  const int n = model.layout().n;
  ModelEval eval(model);
  double sum = 0.0;
  int members = 0;
  double pt[kMaxDim], f[kMaxDim];
  for (int i = 0; i < interior.rows(); ++i) {
    for (int j = 0; j < n; ++j) pt[j] = interior(i, j);
    const auto& res = eval.forward(pt);
    if (res.v_tilde.v >= 1.0) continue;
    ++members;
    system.drift(pt, f);
    const double dv = dv0_of(res, f, n) + forced_term(res, pt, n, model.beta(), p);
    if (dv > 0.0) sum += dv * dv;
  }
  return members == 0 ? 0.0 : sum / members;
}

double outflow_constraint(const TaylorLyapunov& model, const DynamicalSystem& system,
                          const Eigen::MatrixXd& boundary_c2, const Eigen::MatrixXd& normals) {
  const std::vector<int> idx = select_outflow(boundary_c2, normals, system);
  if (idx.empty()) return 0.0;
  const int n = model.layout().n;
  double sum = 0.0;
  double pt[kMaxDim];
  for (int i : idx) {
    for (int j = 0; j < n; ++j) pt[j] = boundary_c2(i, j);
    const double u = 1.0 - model.value(pt);
    if (u > 0.0) sum += u * u;
  }
  return sum / static_cast<double>(idx.size());
}

double data_objective(const TaylorLyapunov& model, const Dataset& data, bool* warned_empty) {
  if (data.size() == 0) {
    if (warned_empty) *warned_empty = true;
    return 0.0;
  }
  if (warned_empty) *warned_empty = false;
  const double eps = model.epsilon();
  const int n = model.layout().n;
  double sum = 0.0;
  double pt[kMaxDim];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int j = 0; j < n; ++j) pt[j] = data.points(static_cast<int>(i), j);
    const double target = data.divergent[i] ? 1.0 : std::tanh(eps * data.v_m[i]);
    const double e = model.value(pt) - target;
    sum += e * e;
  }
  return sum / static_cast<double>(data.size());
}

double lagrangian(const LossBreakdown& pieces, const DualVector& duals, bool supervised,
                  double epsilon) {
  double total = duals.objective * pieces.O_s + duals.interior * pieces.C1_s +
                 duals.outflow * pieces.C2_s;
  if (supervised) total += duals.data * pieces.O_data + duals.eps_reg * epsilon * epsilon;
  return total;
}

LossBreakdown lagrangian_with_grad(const TaylorLyapunov& model, const DynamicalSystem& system,
                                   const SampleSets& samples, const DualVector& duals, double p,
                                   const Dataset* dataset, std::vector<double>& grad,
                                   double* d_data_d_eps, int threads) {
  const ParamLayout& layout = model.layout();
  const int n = layout.n;
  const int total_params = layout.total();
  grad.assign(total_params, 0.0);
  const bool supervised = layout.supervised && dataset != nullptr;

  LossBreakdown out;

  // Membership of the interior points (value pass, cheap).
  const std::vector<int> region = select_region(samples.interior, model);
  out.n_Rs = static_cast<int>(region.size());
  const std::vector<int> outflow = select_outflow(samples.boundary_c2, samples.normals_c2, system);
  out.n_Bs = static_cast<int>(outflow.size());

  struct BlockAcc {
    std::vector<double> grad;
    double loss = 0.0;
    double eps_grad = 0.0;
  };

  // Each task category runs over fixed-size blocks with private gradient
  // accumulators, reduced in block order afterwards.
  auto reduce = [&](std::vector<BlockAcc>& accs, double* loss_out, double* eps_out) {
    for (const BlockAcc& acc : accs) {
      if (loss_out) *loss_out += acc.loss;
      if (eps_out) *eps_out += acc.eps_grad;
      if (!acc.grad.empty()) {
        for (int k = 0; k < total_params; ++k) grad[k] += acc.grad[k];
      }
    }
  };

  // Interior constraint over the region members.
  if (!region.empty()) {
    const double inv = 1.0 / static_cast<double>(region.size());
    const double beta = model.beta();
    std::vector<BlockAcc> accs(block_count(region.size(), kBlock));
    parallel_blocks(region.size(), kBlock, threads,
                    [&](std::size_t b, std::size_t begin, std::size_t end) {
                      BlockAcc& acc = accs[b];
                      acc.grad.assign(total_params, 0.0);
                      ModelEval eval(model);
                      double pt[kMaxDim], f[kMaxDim];
                      for (std::size_t i = begin; i < end; ++i) {
                        const int row = region[i];
                        for (int j = 0; j < n; ++j) pt[j] = samples.interior(row, j);
                        const auto& res = eval.forward(pt);
                        system.drift(pt, f);
                        const double r = pow_norm(pt, n, p);
                        const double dv = dv0_of(res, f, n) + beta * beta * (1.0 - res.v_tilde.v) * r;
                        if (dv <= 0.0) continue;
                        acc.loss += dv * dv * inv;
                        const double c = duals.interior * 2.0 * dv * inv;
                        Jet adj;
                        adj.v = -c * beta * beta * r;
                        for (int j = 0; j < n; ++j) adj.d[j] = c * f[j];
                        eval.backward(adj, acc.grad.data());
                        acc.grad[layout.beta_index()] +=
                            c * 2.0 * beta * (1.0 - res.v_tilde.v) * r;
                      }
                    });
    reduce(accs, &out.C1_s, nullptr);
  }

  // Boundary objective over the ray-scaled tracked points.
  {
    const int count = static_cast<int>(samples.boundary_obj.rows());
    const double inv = 1.0 / static_cast<double>(count);
    std::vector<BlockAcc> accs(block_count(count, kBlock));
    parallel_blocks(count, kBlock, threads,
                    [&](std::size_t b, std::size_t begin, std::size_t end) {
                      BlockAcc& acc = accs[b];
                      acc.grad.assign(total_params, 0.0);
                      ModelEval eval(model);
                      double pt[kMaxDim], f[kMaxDim];
                      for (std::size_t i = begin; i < end; ++i) {
                        const int row = static_cast<int>(i);
                        const double eta = samples.ray_scales(row);
                        for (int j = 0; j < n; ++j) pt[j] = eta * samples.boundary_obj(row, j);
                        const auto& res = eval.forward(pt);
                        system.drift(pt, f);
                        const double dv = dv0_of(res, f, n);
                        acc.loss += dv * dv * inv;
                        if (duals.objective > 0.0) {
                          const double c = duals.objective * 2.0 * dv * inv;
                          Jet adj;
                          for (int j = 0; j < n; ++j) adj.d[j] = c * f[j];
                          eval.backward(adj, acc.grad.data());
                        }
                      }
                    });
    reduce(accs, &out.O_s, nullptr);
  }

  // Outflow boundary constraint.
  if (!outflow.empty()) {
    const double inv = 1.0 / static_cast<double>(outflow.size());
    std::vector<BlockAcc> accs(block_count(outflow.size(), kBlock));
    parallel_blocks(outflow.size(), kBlock, threads,
                    [&](std::size_t b, std::size_t begin, std::size_t end) {
                      BlockAcc& acc = accs[b];
                      acc.grad.assign(total_params, 0.0);
                      ModelEval eval(model);
                      double pt[kMaxDim];
                      for (std::size_t i = begin; i < end; ++i) {
                        const int row = outflow[i];
                        for (int j = 0; j < n; ++j) pt[j] = samples.boundary_c2(row, j);
                        const auto& res = eval.forward(pt);
                        const double u = 1.0 - res.v_tilde.v;
                        if (u <= 0.0) continue;
                        acc.loss += u * u * inv;
                        Jet adj;
                        adj.v = -duals.outflow * 2.0 * u * inv;
                        eval.backward(adj, acc.grad.data());
                      }
                    });
    reduce(accs, &out.C2_s, nullptr);
  }

  // Data objective (supervised only).
  double eps_grad = 0.0;
  if (supervised && dataset->size() > 0) {
    const double eps = model.epsilon();
    const double inv = 1.0 / static_cast<double>(dataset->size());
    std::vector<BlockAcc> accs(block_count(dataset->size(), kBlock));
    parallel_blocks(dataset->size(), kBlock, threads,
                    [&](std::size_t b, std::size_t begin, std::size_t end) {
                      BlockAcc& acc = accs[b];
                      acc.grad.assign(total_params, 0.0);
                      ModelEval eval(model);
                      double pt[kMaxDim];
                      for (std::size_t i = begin; i < end; ++i) {
                        const int row = static_cast<int>(i);
                        for (int j = 0; j < n; ++j) pt[j] = dataset->points(row, j);
                        const auto& res = eval.forward(pt);
                        double target = 1.0;
                        double dtarget_deps = 0.0;
                        if (!dataset->divergent[i]) {
                          target = std::tanh(eps * dataset->v_m[i]);
                          dtarget_deps = dataset->v_m[i] * (1.0 - target * target);
                        }
                        const double e = res.v_tilde.v - target;
                        acc.loss += e * e * inv;
                        acc.eps_grad += -2.0 * e * dtarget_deps * inv;
                        Jet adj;
                        adj.v = duals.data * 2.0 * e * inv;
                        eval.backward(adj, acc.grad.data());
                      }
                    });
    reduce(accs, &out.O_data, &eps_grad);
  }
  if (supervised) {
    // Full-gradient entry for epsilon (the trainer steps epsilon separately,
    // through d_data_d_eps, but the assembled gradient stays consistent with
    // the weighted objective as a function of all parameters).
    grad[layout.epsilon_index()] =
        duals.data * eps_grad + 2.0 * duals.eps_reg * model.epsilon();
  }
  if (d_data_d_eps) *d_data_d_eps = eps_grad;

  out.total = lagrangian(out, duals, supervised, supervised ? model.epsilon() : 0.0);
  return out;
}

LossBreakdown eval_losses(const TaylorLyapunov& model, const DynamicalSystem& system,
                          const SampleSets& samples, const DualVector& duals, double p,
                          const Dataset* dataset) {
  LossBreakdown out;
  out.O_s = boundary_objective(model, system, samples.boundary_obj, samples.ray_scales);
  out.C1_s = interior_constraint(model, system, samples.interior, p);
  out.C2_s = outflow_constraint(model, system, samples.boundary_c2, samples.normals_c2);
  out.n_Rs = static_cast<int>(select_region(samples.interior, model).size());
  out.n_Bs = static_cast<int>(select_outflow(samples.boundary_c2, samples.normals_c2, system).size());
  const bool supervised = model.layout().supervised && dataset != nullptr;
  if (supervised) out.O_data = data_objective(model, *dataset);
  out.total = lagrangian(out, duals, supervised, supervised ? model.epsilon() : 0.0);
  return out;
}

double kink_distance(const TaylorLyapunov& model, const DynamicalSystem& system,
                     const SampleSets& samples, double p) {
  const int n = model.layout().n;
  ModelEval eval(model);
  double dist = std::numeric_limits<double>::infinity();
  double pt[kMaxDim], f[kMaxDim];
  const double beta = model.beta();

  for (int i = 0; i < samples.interior.rows(); ++i) {
    for (int j = 0; j < n; ++j) pt[j] = samples.interior(i, j);
    const auto& res = eval.forward(pt);
    dist = std::min(dist, std::abs(res.v_hat - 1.0));
    dist = std::min(dist, std::abs(res.v_tilde.v - 1.0));
    if (res.v_tilde.v < 1.0) {
      system.drift(pt, f);
      const double dv = dv0_of(res, f, n) + forced_term(res, pt, n, beta, p);
      dist = std::min(dist, std::abs(dv));
    }
  }
  for (int i = 0; i < samples.boundary_obj.rows(); ++i) {
    for (int j = 0; j < n; ++j) pt[j] = samples.ray_scales(i) * samples.boundary_obj(i, j);
    const auto& res = eval.forward(pt);
    dist = std::min(dist, std::abs(res.v_hat - 1.0));
  }
  const std::vector<int> outflow = select_outflow(samples.boundary_c2, samples.normals_c2, system);
  for (int i : outflow) {
    for (int j = 0; j < n; ++j) pt[j] = samples.boundary_c2(i, j);
    const auto& res = eval.forward(pt);
    dist = std::min(dist, std::abs(res.v_hat - 1.0));
    dist = std::min(dist, std::abs(res.v_tilde.v - 1.0));
  }
  return dist;
}

LossEvaluator make_lagrangian_evaluator(const DynamicalSystem& system, const SampleSets& samples,
                                        const DualVector& duals, double p,
                                        const Dataset* dataset) {
  LossEvaluator ev;
  ev.value = [&system, &samples, duals, p, dataset](const TaylorLyapunov& m) {
    return eval_losses(m, system, samples, duals, p, dataset).total;
  };
  ev.gradient = [&system, &samples, duals, p, dataset](const TaylorLyapunov& m) {
    std::vector<double> g;
    lagrangian_with_grad(m, system, samples, duals, p, dataset, g);
    return g;
  };
  ev.kink_distance = [&system, &samples, p](const TaylorLyapunov& m) {
    return kink_distance(m, system, samples, p);
  };
  ev.branch_signature = [&system, &samples, p](const TaylorLyapunov& m) {
    const int n = m.layout().n;
    ModelEval eval(m);
    double pt[kMaxDim], f[kMaxDim];
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const double beta = m.beta();
    for (int i = 0; i < samples.interior.rows(); ++i) {
      for (int j = 0; j < n; ++j) pt[j] = samples.interior(i, j);
      const auto& res = eval.forward(pt);
      const bool member = res.v_tilde.v < 1.0;
      h = fnv_step(h, member ? 3 : 0);
      h = fnv_step(h, res.unclamped ? 1 : 0);
      if (member) {
        system.drift(pt, f);
        const double dv = dv0_of(res, f, n) + forced_term(res, pt, n, beta, p);
        h = fnv_step(h, dv > 0.0 ? 7 : 2);
      }
    }
    for (int i = 0; i < samples.boundary_obj.rows(); ++i) {
      for (int j = 0; j < n; ++j) pt[j] = samples.ray_scales(i) * samples.boundary_obj(i, j);
      const auto& res = eval.forward(pt);
      h = fnv_step(h, res.unclamped ? 1 : 0);
    }
    const std::vector<int> outflow =
        select_outflow(samples.boundary_c2, samples.normals_c2, system);
    for (int i : outflow) {
      for (int j = 0; j < n; ++j) pt[j] = samples.boundary_c2(i, j);
      const auto& res = eval.forward(pt);
      h = fnv_step(h, res.unclamped ? 1 : 0);
      h = fnv_step(h, res.v_tilde.v < 1.0 ? 5 : 0);
    }
    return h;
  };
  return ev;
}

}  // namespace roaforge
