#pragma once

#include <array>
#include <cmath>

namespace roaforge {

// Largest state dimension the forward-mode seeds support.
inline constexpr int kMaxDim = 16;

// First-order dual number: a value plus one derivative slot per seeded
// input coordinate. The active dimension n is passed to the helpers; the
// remaining slots stay zero.
struct Jet {
  double v = 0.0;
  std::array<double, kMaxDim> d{};

  static Jet constant(double c) {
    Jet j;
    j.v = c;
    return j;
  }

  static Jet seeded(double value, int index) {
    Jet j;
    j.v = value;
    j.d[index] = 1.0;
    return j;
  }
};

inline Jet jet_add(const Jet& a, const Jet& b, int n) {
  Jet c;
  c.v = a.v + b.v;
  for (int j = 0; j < n; ++j) c.d[j] = a.d[j] + b.d[j];
  return c;
}

inline Jet jet_sub(const Jet& a, const Jet& b, int n) {
  Jet c;
  c.v = a.v - b.v;
  for (int j = 0; j < n; ++j) c.d[j] = a.d[j] - b.d[j];
  return c;
}

inline Jet jet_scale(const Jet& a, double s, int n) {
  Jet c;
  c.v = a.v * s;
  for (int j = 0; j < n; ++j) c.d[j] = a.d[j] * s;
  return c;
}

inline Jet jet_mul(const Jet& a, const Jet& b, int n) {
  Jet c;
  c.v = a.v * b.v;
  for (int j = 0; j < n; ++j) c.d[j] = a.v * b.d[j] + b.v * a.d[j];
  return c;
}

inline Jet jet_tanh(const Jet& a, int n) {
  Jet c;
  c.v = std::tanh(a.v);
  const double s = 1.0 - c.v * c.v;
  for (int j = 0; j < n; ++j) c.d[j] = s * a.d[j];
  return c;
}

inline Jet jet_sigmoid(const Jet& a, int n) {
  Jet c;
  c.v = 1.0 / (1.0 + std::exp(-a.v));
  const double s = c.v * (1.0 - c.v);
  for (int j = 0; j < n; ++j) c.d[j] = s * a.d[j];
  return c;
}

// min(cap, a); takes the a-branch when a.v <= cap (one-sided convention,
// so the result stays a left derivative at the tie).
inline Jet jet_min_const(const Jet& a, double cap, int n) {
  if (a.v <= cap) return a;
  Jet c;
  c.v = cap;
  for (int j = 0; j < n; ++j) c.d[j] = 0.0;
  return c;
}

inline Jet jet_max_const(const Jet& a, double floor_v, int n) {
  if (a.v >= floor_v) return a;
  Jet c;
  c.v = floor_v;
  for (int j = 0; j < n; ++j) c.d[j] = 0.0;
  return c;
}

// Squared Euclidean norm of the seeded input point.
inline Jet jet_sq_norm(const double* x, int n) {
  Jet c;
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += x[j] * x[j];
  c.v = s;
  for (int j = 0; j < n; ++j) c.d[j] = 2.0 * x[j];
  return c;
}

}  // namespace roaforge
