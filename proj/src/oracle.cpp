#include "roaforge/oracle.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "roaforge/autodiff.hpp"
#include "roaforge/common.hpp"
#include "roaforge/parallel.hpp"
#include "roaforge/sampling.hpp"

namespace roaforge {

namespace {

constexpr double kConvergedRadius = 1e-6;
constexpr double kTimeoutRadius = 1e-3;

// Slowest decay rate of the linearization, |max_i Re(lambda_i)|.
double slowest_decay(const DynamicalSystem& system) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(system.linearization());
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < system.dim(); ++i) worst = std::max(worst, es.eigenvalues()(i).real());
  return std::abs(worst);
}

struct Rk4Stepper {
  const DriftFn& drift;
  int n;
  Eigen::VectorXd k1, k2, k3, k4, tmp;

  Rk4Stepper(const DriftFn& f, int dim)
      : drift(f), n(dim), k1(n + 1), k2(n + 1), k3(n + 1), k4(n + 1), tmp(n + 1) {}

  // Augmented right-hand side: (f(x), |x|).
  void rhs(const Eigen::VectorXd& y, Eigen::VectorXd& out) {
    drift(y.data(), out.data());
    out(n) = y.head(n).norm();
  }

  void step(Eigen::VectorXd& y, double dt) {
    rhs(y, k1);
    tmp = y + 0.5 * dt * k1;
    rhs(tmp, k2);
    tmp = y + 0.5 * dt * k2;
    rhs(tmp, k3);
    tmp = y + dt * k3;
    rhs(tmp, k4);
    y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

}  // namespace

TrajectoryResult integrate_rk4(const DriftFn& drift, int n, double decay_rate,
                               const Eigen::VectorXd& x0, double dt, double t_end) {
  if (!(dt > 0.0) || !(t_end >= dt)) throw ConfigError("integrate_rk4: need dt > 0 and T >= dt");
  TrajectoryResult res;
  res.final_norm = x0.norm();

  if (x0.lpNorm<Eigen::Infinity>() > 1.0) {
    res.exit = TrajectoryResult::Exit::LeftDomain;
    return res;
  }

  Eigen::VectorXd y(n + 1);
  y.head(n) = x0;
  y(n) = 0.0;

  Rk4Stepper stepper(drift, n);
  const long steps = std::lround(t_end / dt);
  double t = 0.0;
  for (long s = 0; s < steps; ++s) {
    stepper.step(y, dt);
    t += dt;
    const double norm = y.head(n).norm();
    res.final_norm = norm;
    res.exit_time = t;
    if (!y.allFinite()) {
      res.exit = TrajectoryResult::Exit::Timeout;
      return res;
    }
    if (y.head(n).lpNorm<Eigen::Infinity>() >= 1.0) {
      res.exit = TrajectoryResult::Exit::LeftDomain;
      return res;
    }
    if (norm < kConvergedRadius) break;
  }

  const double norm = y.head(n).norm();
  res.final_norm = norm;
  if (norm < kTimeoutRadius) {
    // Converged (or nearly so at the horizon): add the tail of the cost
    // integral estimated from the slowest linear decay rate.
    res.exit = TrajectoryResult::Exit::Converged;
    res.divergent = false;
    res.v_m = y(n) + norm / decay_rate;
  } else {
    res.exit = TrajectoryResult::Exit::Timeout;
  }
  return res;
}

TrajectoryResult integrate_rk4(const DynamicalSystem& system, const Eigen::VectorXd& x0, double dt,
                               double t_end) {
  DriftFn drift = [&system](const double* x, double* dx) { system.drift(x, dx); };
  return integrate_rk4(drift, system.dim(), slowest_decay(system), x0, dt, t_end);
}

Eigen::VectorXd rk4_state_at(const DynamicalSystem& system, const Eigen::VectorXd& x0, double dt,
                             double t) {
  const int n = system.dim();
  Eigen::VectorXd y(n + 1);
  y.head(n) = x0;
  y(n) = 0.0;
  DriftFn drift = [&system](const double* x, double* dx) { system.drift(x, dx); };
  Rk4Stepper stepper(drift, n);
  const long steps = std::lround(t / dt);
  for (long s = 0; s < steps; ++s) stepper.step(y, dt);
  return y.head(n);
}

Dataset generate_dataset(const DynamicalSystem& system, int count, double dt, double t_end,
                         Rng& rng, int threads) {
  if (count < 1) throw ConfigError("generate_dataset: count must be >= 1");
  const int n = system.dim();
  Dataset data;
  data.points = sample_interior(n, count, rng);
  data.v_m.assign(count, 0.0);
  data.divergent.assign(count, 0);
  const double decay = slowest_decay(system);
  const DriftFn drift = [&system](const double* x, double* dx) { system.drift(x, dx); };
  parallel_blocks(count, 64, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::VectorXd x0 = data.points.row(static_cast<int>(i)).transpose();
      const TrajectoryResult r = integrate_rk4(drift, n, decay, x0, dt, t_end);
      data.v_m[i] = r.v_m;
      data.divergent[i] = r.divergent ? 1 : 0;
    }
  });
  return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open dataset file for writing: " + path);
  const int n = static_cast<int>(data.points.cols());
  for (int j = 0; j < n; ++j) out << "x" << (j + 1) << ",";
  out << "V_m,divergent\n";
  out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int j = 0; j < n; ++j) out << data.points(static_cast<int>(i), j) << ",";
    out << data.v_m[i] << "," << static_cast<int>(data.divergent[i]) << "\n";
  }
}

Dataset read_dataset_csv(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset file is empty: " + path);
  std::vector<std::vector<double>> rows;
  std::vector<double> v_m;
  std::vector<std::uint8_t> divergent;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != n + 2) {
      throw ConfigError("dataset row has wrong column count in " + path);
    }
    rows.push_back(std::vector<double>(vals.begin(), vals.begin() + n));
    v_m.push_back(vals[n]);
    divergent.push_back(vals[n + 1] != 0.0 ? 1 : 0);
  }
  Dataset data;
  data.points.resize(static_cast<int>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < n; ++j) data.points(static_cast<int>(i), j) = rows[i][j];
  }
  data.v_m = std::move(v_m);
  data.divergent = std::move(divergent);
  return data;
}

CertifiedRescale rescale_certified(const TaylorLyapunov& model, const DynamicalSystem& system,
                                   int n_check, Rng& rng) {
  if (n_check < 10000) throw ConfigError("rescale_certified: need at least 10^4 check points");
  const int n = model.layout().n;
  ModelEval eval(model);
  double pt[kMaxDim], f[kMaxDim];

  double worst_level = 1.0;  // c must stay at or below the lowest violating level
  int violations_full = 0;
  for (int i = 0; i < n_check; ++i) {
    for (int j = 0; j < n; ++j) pt[j] = rng.uniform(-1.0, 1.0);
    const auto& res = eval.forward(pt);
    if (res.v_tilde.v >= 1.0) continue;
    system.drift(pt, f);
    double dv = 0.0;
    for (int j = 0; j < n; ++j) dv += res.v_tilde.d[j] * f[j];
    if (dv >= 0.0) {
      ++violations_full;
      worst_level = std::min(worst_level, res.v_tilde.v);
    }
  }

  CertifiedRescale out;
  out.violations_at_full_level = violations_full;
  // Snap down to the 100-point level grid.
  out.c = std::floor(worst_level * 100.0) / 100.0;
  if (out.c < 0.01) {
    throw CertificationError(
        "candidate is not a certified Lyapunov function on samples: no rescaling level >= 0.01 "
        "removes all orbital-derivative violations");
  }
  return out;
}

CoverageReport coverage(const TaylorLyapunov& model, double c, const DynamicalSystem& system,
                        int n_eval, double M, double dt, double t_end, std::uint64_t seed,
                        int threads) {
  if (n_eval < 1) throw ConfigError("coverage: n_eval must be >= 1");
  const int n = system.dim();
  Rng rng(seed);
  Eigen::MatrixXd pts = sample_interior(n, n_eval, rng);

  std::vector<std::uint8_t> truth(n_eval, 0), predicted(n_eval, 0), violating(n_eval, 0);
  const double decay = slowest_decay(system);
  const DriftFn drift = [&system](const double* x, double* dx) { system.drift(x, dx); };
  parallel_blocks(n_eval, 64, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    ModelEval eval(model);
    double pt[kMaxDim], f[kMaxDim];
    for (std::size_t i = begin; i < end; ++i) {
      const int row = static_cast<int>(i);
      for (int j = 0; j < n; ++j) pt[j] = pts(row, j);
      const auto& res = eval.forward(pt);
      const bool inside = res.v_tilde.v / c < 1.0;
      predicted[i] = inside ? 1 : 0;
      if (inside) {
        system.drift(pt, f);
        double dv = 0.0;
        for (int j = 0; j < n; ++j) dv += res.v_tilde.d[j] * f[j];
        if (dv >= 0.0) violating[i] = 1;
      }
      const TrajectoryResult r = integrate_rk4(drift, n, decay, pts.row(row).transpose(), dt, t_end);
      truth[i] = (!r.divergent && r.v_m < M) ? 1 : 0;
    }
  });

  long n_truth = 0, n_both = 0, n_violations = 0;
  for (int i = 0; i < n_eval; ++i) {
    n_truth += truth[i];
    n_both += (truth[i] && predicted[i]) ? 1 : 0;
    n_violations += violating[i];
  }
  if (n_truth == 0) {
    throw NumericError("coverage: the sampled ground-truth region of attraction is empty");
  }
  CoverageReport rep;
  rep.coverage_pct = 100.0 * static_cast<double>(n_both) / static_cast<double>(n_truth);
  rep.c = c;
  rep.n_eval = n_eval;
  rep.M = M;
  rep.violations = static_cast<int>(n_violations);
  rep.seed = seed;
  return rep;
}

std::vector<GridRow> grid_eval(const TaylorLyapunov& model, const DynamicalSystem& system,
                               int resolution) {
  if (model.layout().n != 2 || system.dim() != 2) {
    throw ConfigError("grid export is restricted to planar systems; slice other dimensions via "
                      "a custom 2-D system in the config");
  }
  if (resolution < 2) throw ConfigError("grid_eval: resolution must be >= 2");
  ModelEval eval(model);
  std::vector<GridRow> rows;
  rows.reserve(static_cast<std::size_t>(resolution) * resolution);
  double pt[2], f[2];
  for (int i2 = 0; i2 < resolution; ++i2) {
    const double x2 = -1.0 + 2.0 * i2 / (resolution - 1.0);
    for (int i1 = 0; i1 < resolution; ++i1) {
      const double x1 = -1.0 + 2.0 * i1 / (resolution - 1.0);
      pt[0] = x1;
      pt[1] = x2;
      const auto& res = eval.forward(pt);
      system.drift(pt, f);
      rows.push_back({x1, x2, res.v_tilde.v, res.v_tilde.d[0] * f[0] + res.v_tilde.d[1] * f[1]});
    }
  }
  return rows;
}

}  // namespace roaforge
