#pragma once

#include <Eigen/Dense>

namespace roaforge {

// Feasible set for the quadratic part: P PSD with
// A'(P + gamma^2 I) + (P + gamma^2 I) A negative definite. Strictness is
// realized through an explicit margin on the largest eigenvalue of the
// Lyapunov operator image.
struct ConeSpec {
  Eigen::MatrixXd a;
  double gamma = 0.0;
  double margin = 0.0;  // defaulted to 1e-6 * |A| when <= 0

  double effective_margin() const;
  // L(P) = A'(P + gamma^2 I) + (P + gamma^2 I) A.
  Eigen::MatrixXd lyapunov_image(const Eigen::MatrixXd& p) const;
};

// True iff lambda_min(P) >= 0 and lambda_max(L(P)) <= -margin.
bool in_cone(const Eigen::MatrixXd& p, const ConeSpec& spec);

// Nearest (Frobenius) feasible matrix, computed by penalized eigenvalue
// descent with geometric penalty growth, starting from the PSD clip of P.
// Idempotent on feasible inputs; the result always passes in_cone.
// Throws NumericError when the penalty cap is reached, reporting the best
// remaining infeasibility.
Eigen::MatrixXd project_to_cone(const Eigen::MatrixXd& p, const ConeSpec& spec);

}  // namespace roaforge
