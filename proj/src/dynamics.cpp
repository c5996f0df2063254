#include "roaforge/dynamics.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "roaforge/common.hpp"
#include "roaforge/expr.hpp"
#include "roaforge/jet.hpp"

namespace roaforge {

namespace {

Box symmetric_box(int n, double half_width) {
  Box b;
  b.lower = Eigen::VectorXd::Constant(n, -half_width);
  b.upper = Eigen::VectorXd::Constant(n, half_width);
  return b;
}

void check_stability(const Eigen::MatrixXd& a, const std::string& name) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigenvalue computation failed for system '" + name + "'");
  }
  for (int i = 0; i < a.rows(); ++i) {
    const std::complex<double> ev = es.eigenvalues()(i);
    if (ev.real() >= 0.0) {
      std::ostringstream os;
      os << "system '" << name << "' violates the stability assumption: eigenvalue " << ev.real();
      if (ev.imag() != 0.0) os << (ev.imag() > 0 ? "+" : "") << ev.imag() << "i";
      os << " of the linearization has nonnegative real part";
      throw NumericError(os.str());
    }
  }
}

}  // namespace

DynamicalSystem::DynamicalSystem(std::string name, int n, DriftFn drift, Eigen::MatrixXd a, Box box)
    : name_(std::move(name)), n_(n), drift_(std::move(drift)), a_(std::move(a)), box_(std::move(box)) {
  if (n_ < 1) throw ConfigError("state dimension must be positive");
  if (n_ > kMaxDim) {
    throw ConfigError("state dimension " + std::to_string(n_) + " exceeds the supported maximum " +
                      std::to_string(kMaxDim));
  }
  if (a_.rows() != n_ || a_.cols() != n_) throw ConfigError("linearization matrix has wrong shape");
  if (box_.lower.size() != n_ || box_.upper.size() != n_) {
    throw ConfigError("domain box has wrong dimension");
  }
  for (int i = 0; i < n_; ++i) {
    if (!(box_.lower(i) < box_.upper(i)) || !std::isfinite(box_.lower(i)) ||
        !std::isfinite(box_.upper(i))) {
      throw ConfigError("domain box must be finite with lower < upper");
    }
  }

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_);
  Eigen::VectorXd f0(n_);
  drift_(zero.data(), f0.data());
  if (f0.lpNorm<Eigen::Infinity>() > 1e-9) {
    throw NumericError("system '" + name_ + "': the origin is not an equilibrium, |f(0)| = " +
                       std::to_string(f0.lpNorm<Eigen::Infinity>()));
  }

  check_stability(a_, name_);

  Eigen::MatrixXd a_fd = linearize(drift_, n_);
  const double scale = std::max(1.0, a_.cwiseAbs().maxCoeff());
  if ((a_ - a_fd).cwiseAbs().maxCoeff() > 1e-4 * scale) {
    throw NumericError("system '" + name_ +
                       "': provided linearization disagrees with the finite-difference Jacobian");
  }
}

std::vector<std::string> builtin_system_names() {
  return {"quad2d", "nonquad2d", "generator", "vanderpol", "tend"};
}

DynamicalSystem make_system(const std::string& name, const std::map<std::string, double>& params) {
  for (const auto& [key, value] : params) {
    (void)value;
    if (!(name == "vanderpol" && key == "mu")) {
      throw ConfigError("system '" + name + "' does not accept parameter '" + key + "'");
    }
  }

  if (name == "quad2d") {
    DriftFn f = [](const double* x, double* dx) {
      dx[0] = -3.0 * x[0] + 0.1 * std::sin(x[1]) * x[1];
      dx[1] = -15.0 * x[1];
    };
    Eigen::MatrixXd a(2, 2);
    a << -3.0, 0.0, 0.0, -15.0;
    return DynamicalSystem(name, 2, std::move(f), a, symmetric_box(2, 5.0));
  }
  if (name == "nonquad2d") {
    DriftFn f = [](const double* x, double* dx) {
      dx[0] = -x[0] + x[0] * x[1];
      dx[1] = -x[1];
    };
    Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(2, 2);
    return DynamicalSystem(name, 2, std::move(f), a, symmetric_box(2, 5.0));
  }
  if (name == "generator") {
    DriftFn f = [](const double* x, double* dx) {
      dx[0] = x[1];
      dx[1] = -std::sin(x[0]) - 5.0 * x[1];
    };
    Eigen::MatrixXd a(2, 2);
    a << 0.0, 1.0, -1.0, -5.0;
    return DynamicalSystem(name, 2, std::move(f), a, symmetric_box(2, 6.0));
  }
  if (name == "vanderpol") {
    double mu = 1.0;
    if (auto it = params.find("mu"); it != params.end()) mu = it->second;
    DriftFn f = [mu](const double* x, double* dx) {
      dx[0] = -x[1];
      dx[1] = x[0] - mu * (1.0 - x[0] * x[0]) * x[1];
    };
    Eigen::MatrixXd a(2, 2);
    a << 0.0, -1.0, 1.0, -mu;
    return DynamicalSystem(name, 2, std::move(f), a, symmetric_box(2, 2.5));
  }
  if (name == "tend") {
    DriftFn f = [](const double* x, double* dx) {
      dx[0] = -x[0] + 0.5 * x[1] - 0.1 * x[8] * x[8];
      dx[1] = -0.5 * x[0] - x[1];
      dx[2] = -x[2] + 0.5 * x[3] - 0.1 * x[0] * x[0];
      dx[3] = -0.5 * x[2] - x[3];
      dx[4] = -x[4] + 0.5 * x[5] + 0.1 * x[6] * x[6];
      dx[5] = -0.5 * x[4] - x[5];
      dx[6] = -x[6] + 0.5 * x[7];
      dx[7] = -0.5 * x[6] - x[7];
      dx[8] = -x[8] + 0.5 * x[9];
      dx[9] = -0.5 * x[8] - x[9] + 0.1 * x[1] * x[1];
    };
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(10, 10);
    for (int k = 0; k < 5; ++k) {
      a(2 * k, 2 * k) = -1.0;
      a(2 * k, 2 * k + 1) = 0.5;
      a(2 * k + 1, 2 * k) = -0.5;
      a(2 * k + 1, 2 * k + 1) = -1.0;
    }
    return DynamicalSystem(name, 10, std::move(f), a, symmetric_box(10, 2.0));
  }
  throw ConfigError("unknown system '" + name + "'; available: quad2d, nonquad2d, generator, " +
                    "vanderpol, tend, or a custom expression system");
}

DynamicalSystem make_custom_system(const std::string& name,
                                   const std::vector<std::string>& expressions, Box box) {
  const int n = static_cast<int>(expressions.size());
  if (n < 1) throw ConfigError("custom system needs at least one expression");
  auto parsed = std::make_shared<std::vector<ExprPtr>>();
  for (const auto& e : expressions) parsed->push_back(parse_expression(e, n));
  DriftFn f = [parsed, n](const double* x, double* dx) {
    for (int i = 0; i < n; ++i) dx[i] = (*parsed)[i]->eval(x);
  };
  Eigen::MatrixXd a = linearize(f, n);
  return DynamicalSystem(name, n, std::move(f), a, std::move(box));
}

DynamicalSystem scale_to_unit(const DynamicalSystem& system) {
  const int n = system.dim();
  const Box& box = system.original_box();
  for (int i = 0; i < n; ++i) {
    if (!(box.lower(i) < 0.0 && box.upper(i) > 0.0)) {
      throw ConfigError("system '" + system.name() +
                        "': the origin must be strictly inside the domain box");
    }
  }
  Eigen::VectorXd s = (box.upper - box.lower) / 2.0;
  auto scale = std::make_shared<Eigen::VectorXd>(s);
  // Keep the wrapped system alive through the closure.
  auto base = std::make_shared<DynamicalSystem>(system);
  DriftFn f = [base, scale, n](const double* y, double* dy) {
    double xs[kMaxDim];
    for (int i = 0; i < n; ++i) xs[i] = (*scale)(i) * y[i];
    base->drift(xs, dy);
    for (int i = 0; i < n; ++i) dy[i] /= (*scale)(i);
  };
  Eigen::MatrixXd a_scaled =
      s.cwiseInverse().asDiagonal() * system.linearization() * s.asDiagonal();
  return DynamicalSystem(system.name(), n, std::move(f), a_scaled, symmetric_box(n, 1.0));
}

Eigen::VectorXd boundary_normal(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  int face = -1;
  double best = 0.0;
  for (int k = 0; k < n; ++k) {
    if (std::abs(x(k)) > best) {
      best = std::abs(x(k));
      face = k;
    }
  }
  if (face < 0 || std::abs(best - 1.0) > 1e-9) {
    throw NumericError("boundary_normal: point is not on the boundary of (-1,1)^n");
  }
  Eigen::VectorXd normal = Eigen::VectorXd::Zero(n);
  normal(face) = x(face) > 0 ? 1.0 : -1.0;
  return normal;
}

Eigen::MatrixXd linearize(const DriftFn& drift, int n) {
  const double h = 1e-5;
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd xp = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd xm = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd fp(n), fm(n);
  for (int j = 0; j < n; ++j) {
    xp(j) = h;
    xm(j) = -h;
    drift(xp.data(), fp.data());
    drift(xm.data(), fm.data());
    a.col(j) = (fp - fm) / (2.0 * h);
    xp(j) = 0.0;
    xm(j) = 0.0;
  }
  return a;
}

}  // namespace roaforge
