#include "roaforge/autodiff.hpp"

#include <cmath>
#include <cstring>

#include "roaforge/common.hpp"

namespace roaforge {

ModelEval::ModelEval(const TaylorLyapunov& model)
    : model_(&model),
      n_(model.layout().n),
      width_(model.layout().width),
      depth_(model.layout().depth),
      n_out_(model.layout().n_out),
      pre_(static_cast<std::size_t>(depth_) * width_),
      act_(static_cast<std::size_t>(depth_) * width_),
      out_(n_out_),
      adj_cur_(width_),
      adj_prev_(width_) {}

const ModelEval::Result& ModelEval::forward(const double* x) {
  x_ = x;
  const TaylorLyapunov& m = *model_;
  const Activation activation = m.layout().activation;

  // First hidden layer: the pre-activation jet of row r has value
  // b0_r + sum_c w0_rc x_c and input derivative d[j] = w0_rj.
  for (int r = 0; r < width_; ++r) {
    Jet z;
    z.v = m.bias(0, r);
    for (int c = 0; c < n_; ++c) {
      const double w = m.w0(r, c);
      z.v += w * x[c];
      z.d[c] = w;
    }
    pre_[r] = z;
    act_[r] = activation == Activation::Tanh ? jet_tanh(z, n_) : jet_sigmoid(z, n_);
  }
  for (int l = 1; l < depth_; ++l) {
    const Jet* h = &act_[static_cast<std::size_t>(l - 1) * width_];
    for (int r = 0; r < width_; ++r) {
      Jet z = Jet::constant(m.bias(l, r));
      for (int c = 0; c < width_; ++c) {
        const double w = m.wh(l, r, c);
        z.v += w * h[c].v;
        for (int j = 0; j < n_; ++j) z.d[j] += w * h[c].d[j];
      }
      pre_[static_cast<std::size_t>(l) * width_ + r] = z;
      act_[static_cast<std::size_t>(l) * width_ + r] =
          activation == Activation::Tanh ? jet_tanh(z, n_) : jet_sigmoid(z, n_);
    }
  }
  const Jet* h_last = &act_[static_cast<std::size_t>(depth_ - 1) * width_];
  for (int r = 0; r < n_out_; ++r) {
    Jet z = Jet::constant(m.bout(r));
    for (int c = 0; c < width_; ++c) {
      const double w = m.wout(r, c);
      z.v += w * h_last[c].v;
      for (int j = 0; j < n_; ++j) z.d[j] += w * h_last[c].d[j];
    }
    out_[r] = z;
  }

  // Quadratic part: value x'Px/2, input gradient Px.
  Jet v_hat;
  for (int i = 0; i < n_; ++i) {
    double px = 0.0;
    for (int j = 0; j < n_; ++j) px += m.p_entry(i, j) * x[j];
    v_hat.d[i] = px;
    v_hat.v += 0.5 * px * x[i];
  }

  // Cubic monomials weighted by the residual outputs.
  const auto& monomials = m.monomials();
  for (int i = 0; i < n_out_; ++i) {
    const auto& f = monomials[i].factors;
    Jet mono;
    mono.v = x[f[0]] * x[f[1]] * x[f[2]];
    mono.d[f[0]] += x[f[1]] * x[f[2]];
    mono.d[f[1]] += x[f[0]] * x[f[2]];
    mono.d[f[2]] += x[f[0]] * x[f[1]];
    const Jet& o = out_[i];
    v_hat.v += o.v * mono.v;
    for (int j = 0; j < n_; ++j) v_hat.d[j] += o.v * mono.d[j] + mono.v * o.d[j];
  }

  result_.v_hat = v_hat.v;
  result_.unclamped = v_hat.v <= 1.0;
  Jet vt = result_.unclamped ? v_hat : Jet::constant(1.0);
  const double g = m.gamma();
  for (int j = 0; j < n_; ++j) {
    vt.v += g * g * x[j] * x[j];
    vt.d[j] += 2.0 * g * g * x[j];
  }
  result_.v_tilde = vt;
  return result_;
}

void ModelEval::backward(const Jet& adj, double* grad) {
  const TaylorLyapunov& m = *model_;
  const ParamLayout& layout = m.layout();
  const Activation activation = layout.activation;
  const double* x = x_;

  // gamma: v_tilde carries gamma^2 * (|x|^2, 2x).
  {
    const double g = m.gamma();
    double acc = 0.0;
    for (int j = 0; j < n_; ++j) {
      acc += adj.v * 2.0 * g * x[j] * x[j] + adj.d[j] * 4.0 * g * x[j];
    }
    grad[layout.gamma_index()] += acc;
  }

  // Through min(1, v_hat): the constant branch stops all flow.
  if (!result_.unclamped) return;
  const Jet& a = adj;

  // Quadratic part -> lower-triangle parameters of P.
  for (int i = 0; i < n_; ++i) {
    grad[layout.p_index(i, i)] += a.v * 0.5 * x[i] * x[i] + a.d[i] * x[i];
    for (int j = 0; j < i; ++j) {
      grad[layout.p_index(i, j)] += a.v * x[i] * x[j] + a.d[i] * x[j] + a.d[j] * x[i];
    }
  }

  // Monomial terms -> adjoints of the residual outputs.
  const auto& monomials = m.monomials();
  const Jet* h_last = &act_[static_cast<std::size_t>(depth_ - 1) * width_];
  for (Jet& hadj : adj_prev_) hadj = Jet();
  for (int i = 0; i < n_out_; ++i) {
    const auto& f = monomials[i].factors;
    Jet mono;
    mono.v = x[f[0]] * x[f[1]] * x[f[2]];
    mono.d[f[0]] += x[f[1]] * x[f[2]];
    mono.d[f[1]] += x[f[0]] * x[f[2]];
    mono.d[f[2]] += x[f[0]] * x[f[1]];
    Jet oadj;
    oadj.v = a.v * mono.v;
    for (int j = 0; j < n_; ++j) {
      oadj.v += a.d[j] * mono.d[j];
      oadj.d[j] = a.d[j] * mono.v;
    }
    // Output layer parameters and propagation to the last activations.
    grad[layout.bout_offset() + i] += oadj.v;
    double* wrow = grad + layout.wout_offset() + static_cast<std::size_t>(i) * width_;
    for (int c = 0; c < width_; ++c) {
      double acc = oadj.v * h_last[c].v;
      for (int j = 0; j < n_; ++j) acc += oadj.d[j] * h_last[c].d[j];
      wrow[c] += acc;
      const double w = m.wout(i, c);
      adj_prev_[c].v += w * oadj.v;
      for (int j = 0; j < n_; ++j) adj_prev_[c].d[j] += w * oadj.d[j];
    }
  }

  // Hidden layers in reverse. adj_prev_ holds the adjoint of act_[l].
  for (int l = depth_ - 1; l >= 1; --l) {
    const Jet* z = &pre_[static_cast<std::size_t>(l) * width_];
    const Jet* h = &act_[static_cast<std::size_t>(l) * width_];
    const Jet* h_below = &act_[static_cast<std::size_t>(l - 1) * width_];
    for (Jet& c : adj_cur_) c = Jet();
    for (int r = 0; r < width_; ++r) {
      // Through the activation: h = psi(z) elementwise on the jet.
      const double hv = h[r].v;
      const double s = activation == Activation::Tanh ? 1.0 - hv * hv : hv * (1.0 - hv);
      const double sprime = activation == Activation::Tanh ? -2.0 * hv * s : s * (1.0 - 2.0 * hv);
      Jet zadj;
      zadj.v = adj_prev_[r].v * s;
      for (int j = 0; j < n_; ++j) {
        zadj.v += adj_prev_[r].d[j] * sprime * z[r].d[j];
        zadj.d[j] = adj_prev_[r].d[j] * s;
      }
      grad[layout.bias_offset(l) + r] += zadj.v;
      double* wrow = grad + layout.wh_offset(l) + static_cast<std::size_t>(r) * width_;
      for (int c = 0; c < width_; ++c) {
        double acc = zadj.v * h_below[c].v;
        for (int j = 0; j < n_; ++j) acc += zadj.d[j] * h_below[c].d[j];
        wrow[c] += acc;
        const double w = m.wh(l, r, c);
        adj_cur_[c].v += w * zadj.v;
        for (int j = 0; j < n_; ++j) adj_cur_[c].d[j] += w * zadj.d[j];
      }
    }
    adj_prev_.swap(adj_cur_);
  }

  // First layer: z = W0 x + b0 with seeded inputs (x_c.d[j] = delta_cj).
  const Jet* z0 = &pre_[0];
  const Jet* h0 = &act_[0];
  for (int r = 0; r < width_; ++r) {
    const double hv = h0[r].v;
    const double s = activation == Activation::Tanh ? 1.0 - hv * hv : hv * (1.0 - hv);
    const double sprime = activation == Activation::Tanh ? -2.0 * hv * s : s * (1.0 - 2.0 * hv);
    Jet zadj;
    zadj.v = adj_prev_[r].v * s;
    for (int j = 0; j < n_; ++j) {
      zadj.v += adj_prev_[r].d[j] * sprime * z0[r].d[j];
      zadj.d[j] = adj_prev_[r].d[j] * s;
    }
    grad[layout.bias_offset(0) + r] += zadj.v;
    double* wrow = grad + layout.w0_offset() + static_cast<std::size_t>(r) * n_;
    for (int c = 0; c < n_; ++c) {
      wrow[c] += zadj.v * x[c] + zadj.d[c];
    }
  }
}

Eigen::VectorXd grad_wrt_input(const TaylorLyapunov& model, const double* x) {
  ModelEval eval(model);
  const auto& res = eval.forward(x);
  for (int j = 0; j < model.layout().n; ++j) {
    if (!std::isfinite(res.v_tilde.d[j]) || !std::isfinite(res.v_tilde.v)) {
      throw NumericError("non-finite candidate evaluation");
    }
  }
  Eigen::VectorXd g(model.layout().n);
  for (int j = 0; j < model.layout().n; ++j) g(j) = res.v_tilde.d[j];
  return g;
}

double finite_diff_check(const LossEvaluator& loss, const TaylorLyapunov& model, int trials,
                         Rng& rng, double step) {
  if (trials < 1) throw ConfigError("finite_diff_check: trials must be >= 1");
  const std::vector<double> analytic = loss.gradient(model);
  const double base_value = loss.value(model);
  const double floor = 1e-3 * (1.0 + std::abs(base_value));

  if (loss.kink_distance && loss.kink_distance(model) < 1e-4) return 0.0;

  TaylorLyapunov probe = model;
  double worst = 0.0;
  const int total = model.layout().total();
  for (int t = 0; t < trials; ++t) {
    const int idx = rng.next_int(total);
    const double saved = probe.params()[idx];
    probe.params()[idx] = saved + step;
    const double up = loss.value(probe);
    const std::uint64_t sig_up = loss.branch_signature ? loss.branch_signature(probe) : 0;
    probe.params()[idx] = saved - step;
    const double down = loss.value(probe);
    const std::uint64_t sig_down = loss.branch_signature ? loss.branch_signature(probe) : 0;
    probe.params()[idx] = saved;
    if (sig_up != sig_down) continue;  // perturbation crossed a branch switch
    const double fd = (up - down) / (2.0 * step);
    const double ad = analytic[idx];
    if (std::abs(fd) < 1e-12 && std::abs(ad) < 1e-12) continue;  // both vanish
    const double err = std::abs(fd - ad) / std::max({std::abs(fd), std::abs(ad), floor});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace roaforge
