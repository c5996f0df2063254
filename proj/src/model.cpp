#include "roaforge/model.hpp"

#include <cmath>

#include "roaforge/common.hpp"
#include "roaforge/rng.hpp"

namespace roaforge {

namespace {

void enumerate_indices(int n, int pos, int remaining, std::vector<int>& current,
                       std::vector<Monomial>& out) {
  if (pos == n - 1) {
    current[pos] = remaining;
    Monomial m;
    m.exponents = current;
    int f = 0;
    for (int k = 0; k < n; ++k) {
      for (int r = 0; r < current[k]; ++r) m.factors[f++] = k;
    }
    out.push_back(std::move(m));
    current[pos] = 0;
    return;
  }
  for (int i = 0; i <= remaining; ++i) {
    current[pos] = i;
    enumerate_indices(n, pos + 1, remaining - i, current, out);
  }
  current[pos] = 0;
}

double activate(double z, Activation a) {
  return a == Activation::Tanh ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
}

}  // namespace

std::vector<Monomial> index_set(int n) {
  if (n < 1) throw ConfigError("index_set: dimension must be positive");
  std::vector<Monomial> out;
  std::vector<int> current(n, 0);
  enumerate_indices(n, 0, 3, current, out);
  return out;
}

TaylorLyapunov::TaylorLyapunov(ParamLayout layout)
    : layout_(layout), monomials_(index_set(layout.n)), params_(layout.total(), 0.0) {
  if (layout_.width < 1 || layout_.depth < 1) {
    throw ConfigError("network width and depth must be at least 1");
  }
  if (layout_.n_out != static_cast<int>(monomials_.size())) {
    throw ConfigError("layout output count does not match the monomial index set");
  }
}

TaylorLyapunov TaylorLyapunov::init(int n, int width, int depth, std::uint64_t seed,
                                    bool supervised, Activation activation) {
  ParamLayout layout;
  layout.n = n;
  layout.width = width;
  layout.depth = depth;
  layout.n_out = static_cast<int>(index_set(n).size());
  layout.supervised = supervised;
  layout.activation = activation;

  TaylorLyapunov model(layout);
  for (int i = 0; i < n; ++i) model.params_[layout.p_index(i, i)] = 1.0;

  Rng rng(seed);
  auto xavier_fill = [&rng, &model](int offset, int count, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (int i = 0; i < count; ++i) {
      model.params_[offset + i] = rng.uniform(-bound, bound);
    }
  };
  xavier_fill(layout.w0_offset(), layout.w0_count(), n, width);
  for (int l = 1; l < depth; ++l) {
    xavier_fill(layout.wh_offset(l), width * width, width, width);
  }
  xavier_fill(layout.wout_offset(), layout.wout_count(), width, layout.n_out);

  model.set_gamma(0.01);
  model.set_beta(1.0);
  if (supervised) model.set_epsilon(0.1);
  return model;
}

double TaylorLyapunov::epsilon() const {
  if (!layout_.supervised) throw ConfigError("epsilon is only defined in supervised mode");
  return params_[layout_.epsilon_index()];
}

void TaylorLyapunov::set_epsilon(double e) {
  if (!layout_.supervised) throw ConfigError("epsilon is only defined in supervised mode");
  params_[layout_.epsilon_index()] = e;
}

Eigen::MatrixXd TaylorLyapunov::p_matrix() const {
  Eigen::MatrixXd p(layout_.n, layout_.n);
  for (int i = 0; i < layout_.n; ++i) {
    for (int j = 0; j <= i; ++j) {
      p(i, j) = params_[layout_.p_index(i, j)];
      p(j, i) = p(i, j);
    }
  }
  return p;
}

void TaylorLyapunov::set_p_matrix(const Eigen::MatrixXd& p) {
  for (int i = 0; i < layout_.n; ++i) {
    for (int j = 0; j <= i; ++j) params_[layout_.p_index(i, j)] = p(i, j);
  }
}

std::vector<double> TaylorLyapunov::residual_forward(const double* x) const {
  const int n = layout_.n;
  const int width = layout_.width;
  std::vector<double> h(width), next(width);
  for (int r = 0; r < width; ++r) {
    double z = bias(0, r);
    for (int c = 0; c < n; ++c) z += w0(r, c) * x[c];
    h[r] = activate(z, layout_.activation);
  }
  for (int l = 1; l < layout_.depth; ++l) {
    for (int r = 0; r < width; ++r) {
      double z = bias(l, r);
      for (int c = 0; c < width; ++c) z += wh(l, r, c) * h[c];
      next[r] = activate(z, layout_.activation);
    }
    h.swap(next);
  }
  std::vector<double> out(layout_.n_out);
  for (int r = 0; r < layout_.n_out; ++r) {
    double z = bout(r);
    for (int c = 0; c < width; ++c) z += wout(r, c) * h[c];
    out[r] = z;
  }
  return out;
}

double TaylorLyapunov::value_unclamped(const double* x) const {
  const int n = layout_.n;
  double quad = 0.0;
  for (int i = 0; i < n; ++i) {
    quad += 0.5 * params_[layout_.p_index(i, i)] * x[i] * x[i];
    for (int j = 0; j < i; ++j) quad += params_[layout_.p_index(i, j)] * x[i] * x[j];
  }
  const std::vector<double> out = residual_forward(x);
  double cubic = 0.0;
  for (std::size_t i = 0; i < monomials_.size(); ++i) {
    const auto& f = monomials_[i].factors;
    cubic += out[i] * x[f[0]] * x[f[1]] * x[f[2]];
  }
  return quad + cubic;
}

double TaylorLyapunov::value(const double* x) const {
  double sq = 0.0;
  for (int i = 0; i < layout_.n; ++i) sq += x[i] * x[i];
  const double g = gamma();
  return std::min(1.0, value_unclamped(x)) + g * g * sq;
}

nlohmann::json TaylorLyapunov::to_json() const {
  nlohmann::json j;
  j["format"] = "taylor-lyapunov-v1";
  j["n"] = layout_.n;
  j["width"] = layout_.width;
  j["depth"] = layout_.depth;
  j["n_out"] = layout_.n_out;
  j["supervised"] = layout_.supervised;
  j["activation"] = layout_.activation == Activation::Tanh ? "tanh" : "sigmoid";
  j["params"] = params_;
  return j;
}

TaylorLyapunov TaylorLyapunov::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "taylor-lyapunov-v1") {
    throw ConfigError("model file: unrecognized format");
  }
  ParamLayout layout;
  layout.n = j.at("n").get<int>();
  layout.width = j.at("width").get<int>();
  layout.depth = j.at("depth").get<int>();
  layout.n_out = j.at("n_out").get<int>();
  layout.supervised = j.at("supervised").get<bool>();
  const std::string act = j.at("activation").get<std::string>();
  if (act == "tanh") {
    layout.activation = Activation::Tanh;
  } else if (act == "sigmoid") {
    layout.activation = Activation::Sigmoid;
  } else {
    throw ConfigError("model file: unknown activation '" + act + "'");
  }
  if (layout.n < 1 || layout.n > kMaxDim) throw ConfigError("model file: dimension out of range");
  TaylorLyapunov model(layout);
  std::vector<double> params = j.at("params").get<std::vector<double>>();
  if (static_cast<int>(params.size()) != layout.total()) {
    throw ConfigError("model file: parameter count does not match the layout");
  }
  model.params_ = std::move(params);
  return model;
}

}  // namespace roaforge
