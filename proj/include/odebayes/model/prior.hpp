#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace odebayes {

/// Prior over one scalar parameter, evaluated on the constrained scale.
/// Normalising constants are kept so log predictive densities are
/// comparable across models.
struct PriorDist {
  enum class Kind { normal, half_normal, log_normal, uniform, exponential, flat };

  Kind kind = Kind::flat;
  double a = 0.0;  // normal/log_normal mu, half_normal sigma, uniform lower, exponential rate
  double b = 1.0;  // normal/log_normal sigma, uniform upper

  static PriorDist normal(double mu, double sigma) { return {Kind::normal, mu, sigma}; }
  static PriorDist half_normal(double sigma) { return {Kind::half_normal, sigma, 0.0}; }
  static PriorDist log_normal(double mu, double sigma) { return {Kind::log_normal, mu, sigma}; }
  static PriorDist uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static PriorDist exponential(double rate) { return {Kind::exponential, rate, 0.0}; }
  static PriorDist flat() { return {Kind::flat, 0.0, 0.0}; }

  double logpdf(double x) const {
    static const double log_sqrt_2pi = 0.9189385332046727;
    const double neg_inf = -std::numeric_limits<double>::infinity();
    switch (kind) {
      case Kind::normal: {
        const double z = (x - a) / b;
        return -0.5 * z * z - std::log(b) - log_sqrt_2pi;
      }
      case Kind::half_normal: {
        if (x < 0.0) return neg_inf;
        const double z = x / a;
        return std::log(2.0) - 0.5 * z * z - std::log(a) - log_sqrt_2pi;
      }
      case Kind::log_normal: {
        if (x <= 0.0) return neg_inf;
        const double lx = std::log(x);
        const double z = (lx - a) / b;
        return -lx - 0.5 * z * z - std::log(b) - log_sqrt_2pi;
      }
      case Kind::uniform:
        return (x >= a && x <= b) ? -std::log(b - a) : neg_inf;
      case Kind::exponential:
        return (x >= 0.0) ? std::log(a) - a * x : neg_inf;
      case Kind::flat:
        return 0.0;
    }
    return neg_inf;
  }

  /// d logpdf / dx, valid inside the support.
  double dlogpdf(double x) const {
    switch (kind) {
      case Kind::normal:
        return -(x - a) / (b * b);
      case Kind::half_normal:
        return -x / (a * a);
      case Kind::log_normal:
        return (-1.0 - (std::log(x) - a) / (b * b)) / x;
      case Kind::uniform:
        return 0.0;
      case Kind::exponential:
        return -a;
      case Kind::flat:
        return 0.0;
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind) {
      case Kind::normal: return "normal";
      case Kind::half_normal: return "half_normal";
      case Kind::log_normal: return "log_normal";
      case Kind::uniform: return "uniform";
      case Kind::exponential: return "exponential";
      case Kind::flat: return "flat";
    }
    return "?";
  }
};

}  // namespace odebayes
