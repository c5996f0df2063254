#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "roaforge/jet.hpp"

namespace roaforge {

// Multi-index (i_1,...,i_n) of total degree 3, together with the triple of
// coordinate indices whose product realizes the monomial.
struct Monomial {
  std::vector<int> exponents;
  std::array<int, 3> factors;  // ascending coordinate indices, e.g. x0*x0*x2
};

// All degree-3 multi-indices in dimension n, lexicographically sorted.
// Size is C(n+2, 3).
std::vector<Monomial> index_set(int n);

enum class Activation { Tanh, Sigmoid };

// Flat parameter layout: P lower triangle, hidden weights, output weights,
// hidden biases, output biases, gamma, beta, then epsilon in supervised mode.
struct ParamLayout {
  int n = 0;
  int width = 0;
  int depth = 0;  // number of hidden (activated) layers
  int n_out = 0;  // number of residual outputs, |index_set(n)|
  bool supervised = false;
  Activation activation = Activation::Tanh;

  int p_count() const { return n * (n + 1) / 2; }
  int w0_count() const { return width * n; }
  int wh_count() const { return (depth - 1) * width * width; }
  int wout_count() const { return n_out * width; }
  int bias_count() const { return depth * width; }
  int bout_count() const { return n_out; }

  int p_offset() const { return 0; }
  int w0_offset() const { return p_count(); }
  int wh_offset(int layer) const { return w0_offset() + w0_count() + (layer - 1) * width * width; }
  int wout_offset() const { return w0_offset() + w0_count() + wh_count(); }
  int bias_offset(int layer) const { return wout_offset() + wout_count() + layer * width; }
  int bout_offset() const { return wout_offset() + wout_count() + bias_count(); }
  int gamma_index() const { return bout_offset() + bout_count(); }
  int beta_index() const { return gamma_index() + 1; }
  int epsilon_index() const { return beta_index() + 1; }
  int total() const { return beta_index() + 1 + (supervised ? 1 : 0); }

  // Index of the lower-triangle entry (i, j), i >= j, row-major.
  int p_index(int i, int j) const { return i * (i + 1) / 2 + j; }

  bool operator==(const ParamLayout&) const = default;
};

// The learnable candidate: a quadratic form through P, a residual network
// whose outputs weight the degree-3 monomials, and the scalars gamma/beta
// (epsilon in supervised mode). Parameters live in one flat vector.
class TaylorLyapunov {
 public:
  explicit TaylorLyapunov(ParamLayout layout);

  // P = I, Xavier-uniform weights, zero biases, gamma = 0.01, beta = 1.0,
  // epsilon = 0.1 when supervised.
  static TaylorLyapunov init(int n, int width, int depth, std::uint64_t seed,
                             bool supervised = false, Activation activation = Activation::Tanh);

  const ParamLayout& layout() const { return layout_; }
  const std::vector<Monomial>& monomials() const { return monomials_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  double p_entry(int i, int j) const {
    return params_[i >= j ? layout_.p_index(i, j) : layout_.p_index(j, i)];
  }
  double w0(int r, int c) const { return params_[layout_.w0_offset() + r * layout_.n + c]; }
  double wh(int layer, int r, int c) const {
    return params_[layout_.wh_offset(layer) + r * layout_.width + c];
  }
  double wout(int r, int c) const { return params_[layout_.wout_offset() + r * layout_.width + c]; }
  double bias(int layer, int r) const { return params_[layout_.bias_offset(layer) + r]; }
  double bout(int r) const { return params_[layout_.bout_offset() + r]; }
  double gamma() const { return params_[layout_.gamma_index()]; }
  double beta() const { return params_[layout_.beta_index()]; }
  double epsilon() const;
  void set_gamma(double g) { params_[layout_.gamma_index()] = g; }
  void set_beta(double b) { params_[layout_.beta_index()] = b; }
  void set_epsilon(double e);

  Eigen::MatrixXd p_matrix() const;
  void set_p_matrix(const Eigen::MatrixXd& p);

  // Residual network forward pass; returns the n_out outputs.
  std::vector<double> residual_forward(const double* x) const;

  // Quadratic-plus-monomial candidate value.
  double value_unclamped(const double* x) const;

  // Training candidate: min(1, value_unclamped) + gamma^2 |x|^2.
  double value(const double* x) const;

  double value_unclamped(const Eigen::VectorXd& x) const { return value_unclamped(x.data()); }
  double value(const Eigen::VectorXd& x) const { return value(x.data()); }

  nlohmann::json to_json() const;
  static TaylorLyapunov from_json(const nlohmann::json& j);

 private:
  ParamLayout layout_;
  std::vector<Monomial> monomials_;
  std::vector<double> params_;
};

}  // namespace roaforge
