#include "roaforge/projection.hpp"

#include <cmath>
#include <sstream>

#include "roaforge/common.hpp"

namespace roaforge {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& p) { return 0.5 * (p + p.transpose()); }

// Squared hinge penalty against targets slightly inside the cone, so a
// finite penalty weight can clear the strict membership check.
struct Penalty {
  const ConeSpec& spec;
  double psd_target;   // want lambda_min(P) >= psd_target
  double lmi_target;   // want lambda_max(L(P)) <= lmi_target

  double value_and_grad(const Eigen::MatrixXd& p, Eigen::MatrixXd* grad) const {
    const int n = static_cast<int>(p.rows());
    double phi = 0.0;
    if (grad) grad->setZero(n, n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_p(p);
    for (int i = 0; i < n; ++i) {
      const double gap = psd_target - es_p.eigenvalues()(i);
      if (gap > 0.0) {
        phi += gap * gap;
        if (grad) {
          const Eigen::VectorXd v = es_p.eigenvectors().col(i);
          *grad -= 2.0 * gap * (v * v.transpose());
        }
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_l(spec.lyapunov_image(p));
    for (int j = 0; j < n; ++j) {
      const double excess = es_l.eigenvalues()(j) - lmi_target;
      if (excess > 0.0) {
        phi += excess * excess;
        if (grad) {
          const Eigen::VectorXd u = es_l.eigenvectors().col(j);
          const Eigen::MatrixXd outer = u * u.transpose();
          *grad += 2.0 * excess * (spec.a * outer + outer * spec.a.transpose());
        }
      }
    }
    return phi;
  }
};

// Residual violation of the true membership conditions (0 when feasible).
double infeasibility(const Eigen::MatrixXd& p, const ConeSpec& spec) {
  const double margin = spec.effective_margin();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_p(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_l(spec.lyapunov_image(p));
  double acc = 0.0;
  for (int i = 0; i < p.rows(); ++i) {
    acc += std::pow(std::max(0.0, -es_p.eigenvalues()(i)), 2);
    acc += std::pow(std::max(0.0, es_l.eigenvalues()(i) + margin), 2);
  }
  return std::sqrt(acc);
}

}  // namespace

double ConeSpec::effective_margin() const {
  if (margin > 0.0) return margin;
  return 1e-6 * a.norm();
}

Eigen::MatrixXd ConeSpec::lyapunov_image(const Eigen::MatrixXd& p) const {
  const Eigen::MatrixXd shifted =
      p + gamma * gamma * Eigen::MatrixXd::Identity(p.rows(), p.cols());
  return a.transpose() * shifted + shifted * a;
}

bool in_cone(const Eigen::MatrixXd& p, const ConeSpec& spec) {
  if (!p.allFinite()) throw NumericError("in_cone: non-finite matrix");
  const Eigen::MatrixXd ps = symmetrized(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_p(ps);
  if (es_p.info() != Eigen::Success) throw NumericError("in_cone: eigenvalue solver failed");
  if (es_p.eigenvalues().minCoeff() < 0.0) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_l(spec.lyapunov_image(ps));
  if (es_l.info() != Eigen::Success) throw NumericError("in_cone: eigenvalue solver failed");
  return es_l.eigenvalues().maxCoeff() <= -spec.effective_margin();
}

Eigen::MatrixXd project_to_cone(const Eigen::MatrixXd& p, const ConeSpec& spec) {
  if (!p.allFinite()) throw NumericError("project_to_cone: non-finite matrix");
  const Eigen::MatrixXd target = symmetrized(p);
  if (in_cone(target, spec)) return target;

  const int n = static_cast<int>(p.rows());
  const double margin = spec.effective_margin();
  Penalty penalty{spec, margin, -1.5 * margin};

  // Start from the PSD clip with a small lift.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(target);
  Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(margin);
  Eigen::MatrixXd cur = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  cur = symmetrized(cur);

  const double scale = std::max(1.0, target.norm());
  Eigen::MatrixXd best = cur;
  double best_infeas = infeasibility(cur, spec);

  double rho = 1.0;
  for (int stage = 0; stage < 64; ++stage, rho *= 2.0) {
    Eigen::MatrixXd grad(n, n), pgrad(n, n);
    for (int iter = 0; iter < 400; ++iter) {
      const double phi = penalty.value_and_grad(cur, &pgrad);
      const double f = 0.5 * (cur - target).squaredNorm() + rho * phi;
      grad = (cur - target) + rho * pgrad;
      const double gnorm = grad.norm();
      if (gnorm <= 1e-12 * scale) break;

      double step = 1.0 / (1.0 + rho);
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt, step *= 0.5) {
        Eigen::MatrixXd trial = symmetrized(cur - step * grad);
        const double f_trial =
            0.5 * (trial - target).squaredNorm() + rho * penalty.value_and_grad(trial, nullptr);
        if (f_trial <= f - 0.25 * step * gnorm * gnorm) {
          cur = trial;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    const double infeas = infeasibility(cur, spec);
    if (infeas <= best_infeas) {
      best_infeas = infeas;
      best = cur;
    } else {
      cur = best;  // keep the feasibility measure monotone across stages
    }
    if (in_cone(best, spec)) return best;
  }

  std::ostringstream os;
  os << "project_to_cone: no feasible point within the penalty cap; best residual violation "
     << best_infeas;
  throw NumericError(os.str());
}

}  // namespace roaforge
