#pragma once

#include <array>
#include <cassert>
#include <cmath>

namespace odebayes {

inline constexpr int kDualWidth = 16;

/// Fixed-width forward-mode dual number. Wide enough for state dim plus
/// ODE-parameter count of any built-in model; assert in the solver guards
/// the limit for user systems.
struct Dual {
  double v = 0.0;
  std::array<double, kDualWidth> d{};

  Dual() = default;
  Dual(double value) : v(value) {}

  static Dual seeded(double value, int slot) {
    Dual x(value);
    assert(slot >= 0 && slot < kDualWidth);
    x.d[slot] = 1.0;
    return x;
  }
};

inline Dual operator+(const Dual& a, const Dual& b) {
  Dual r(a.v + b.v);
  for (int i = 0; i < kDualWidth; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
inline Dual operator-(const Dual& a, const Dual& b) {
  Dual r(a.v - b.v);
  for (int i = 0; i < kDualWidth; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
inline Dual operator-(const Dual& a) {
  Dual r(-a.v);
  for (int i = 0; i < kDualWidth; ++i) r.d[i] = -a.d[i];
  return r;
}
inline Dual operator*(const Dual& a, const Dual& b) {
  Dual r(a.v * b.v);
  for (int i = 0; i < kDualWidth; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
inline Dual operator/(const Dual& a, const Dual& b) {
  Dual r(a.v / b.v);
  const double inv = 1.0 / b.v;
  const double inv2 = inv * inv;
  for (int i = 0; i < kDualWidth; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv2;
  return r;
}

inline Dual operator+(const Dual& a, double b) { return a + Dual(b); }
inline Dual operator+(double a, const Dual& b) { return Dual(a) + b; }
inline Dual operator-(const Dual& a, double b) { return a - Dual(b); }
inline Dual operator-(double a, const Dual& b) { return Dual(a) - b; }
inline Dual operator*(const Dual& a, double b) {
  Dual r(a.v * b);
  for (int i = 0; i < kDualWidth; ++i) r.d[i] = a.d[i] * b;
  return r;
}
inline Dual operator*(double a, const Dual& b) { return b * a; }
inline Dual operator/(const Dual& a, double b) { return a * (1.0 / b); }
inline Dual operator/(double a, const Dual& b) { return Dual(a) / b; }

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  Dual r(e);
  for (int i = 0; i < kDualWidth; ++i) r.d[i] = e * a.d[i];
  return r;
}
inline Dual log(const Dual& a) {
  Dual r(std::log(a.v));
  const double inv = 1.0 / a.v;
  for (int i = 0; i < kDualWidth; ++i) r.d[i] = inv * a.d[i];
  return r;
}

}  // namespace odebayes
