#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace roaforge {

using DriftFn = std::function<void(const double* x, double* dx)>;

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

// Autonomous vector field x' = f(x) with an equilibrium at the origin and a
// stable linearization there. Construction validates f(0) ~ 0, that every
// eigenvalue of A has negative real part, and that A matches a
// finite-difference Jacobian of f at the origin. Instances are immutable and
// safe to share across threads.
class DynamicalSystem {
 public:
  DynamicalSystem(std::string name, int n, DriftFn drift, Eigen::MatrixXd a, Box original_box);

  int dim() const { return n_; }
  const std::string& name() const { return name_; }
  const Eigen::MatrixXd& linearization() const { return a_; }
  const Box& original_box() const { return box_; }

  void drift(const double* x, double* dx) const { drift_(x, dx); }

  Eigen::VectorXd drift(const Eigen::VectorXd& x) const {
    Eigen::VectorXd dx(n_);
    drift_(x.data(), dx.data());
    return dx;
  }

 private:
  std::string name_;
  int n_;
  DriftFn drift_;
  Eigen::MatrixXd a_;
  Box box_;
};

// Names of the built-in benchmark systems.
std::vector<std::string> builtin_system_names();

// Built-in system factory. Recognized names: quad2d, nonquad2d, generator,
// vanderpol (param "mu", default 1), tend. Throws ConfigError on unknown
// names or parameters, NumericError when the stability assumption fails.
DynamicalSystem make_system(const std::string& name,
                            const std::map<std::string, double>& params = {});

// A user-defined system from one expression per state derivative; the
// Jacobian is obtained by finite differences.
DynamicalSystem make_custom_system(const std::string& name,
                                   const std::vector<std::string>& expressions, Box box);

// Affine rescaling of the system's box domain onto (-1,1)^n: the returned
// drift is g(y) = S^-1 f(S y) with S = diag((upper-lower)/2), and the
// linearization becomes S^-1 A S. The origin must be strictly inside the box.
DynamicalSystem scale_to_unit(const DynamicalSystem& system);

// Outward unit normal of the hypercube (-1,1)^n at a boundary point:
// +-e_k on the face of maximal |x_k|, ties broken by lowest index.
// Throws NumericError for interior points (tolerance 1e-9).
Eigen::VectorXd boundary_normal(const Eigen::VectorXd& x);

// Central finite-difference Jacobian at the origin, step 1e-5.
Eigen::MatrixXd linearize(const DriftFn& drift, int n);

}  // namespace roaforge
