#include "odebayes/model/parameter_space.hpp"

#include <cmath>

namespace odebayes {

namespace {

// Stable logistic pieces. log_sigmoid(u) = -log(1 + e^{-u}) for u >= 0.
double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double log_sigmoid(double u) {
  return u >= 0.0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u));
}

}  // namespace

double ParameterSpace::constrain_coord(int i, double u) const {
  const auto& p = params_[i];
  const bool lo = std::isfinite(p.lower), hi = std::isfinite(p.upper);
  if (lo && hi) return p.lower + (p.upper - p.lower) * sigmoid(u);
  if (lo) return p.lower + std::exp(u);
  if (hi) return p.upper - std::exp(u);
  return u;
}

double ParameterSpace::unconstrain_coord(int i, double c) const {
  const auto& p = params_[i];
  const bool lo = std::isfinite(p.lower), hi = std::isfinite(p.upper);
  if (lo && hi) {
    if (!(c > p.lower && c < p.upper))
      throw OutOfBoundsError(p.name + " = " + std::to_string(c) + " not inside bounds");
    const double s = (c - p.lower) / (p.upper - p.lower);
    return std::log(s) - std::log1p(-s);
  }
  if (lo) {
    if (!(c > p.lower))
      throw OutOfBoundsError(p.name + " = " + std::to_string(c) + " not above lower bound");
    return std::log(c - p.lower);
  }
  if (hi) {
    if (!(c < p.upper))
      throw OutOfBoundsError(p.name + " = " + std::to_string(c) + " not below upper bound");
    return std::log(p.upper - c);
  }
  return c;
}

double ParameterSpace::dconstrain_du(int i, double u) const {
  const auto& p = params_[i];
  const bool lo = std::isfinite(p.lower), hi = std::isfinite(p.upper);
  if (lo && hi) {
    const double s = sigmoid(u);
    return (p.upper - p.lower) * s * (1.0 - s);
  }
  if (lo) return std::exp(u);
  if (hi) return -std::exp(u);
  return 1.0;
}

double ParameterSpace::logjac_coord(int i, double u) const {
  const auto& p = params_[i];
  const bool lo = std::isfinite(p.lower), hi = std::isfinite(p.upper);
  if (lo && hi) return std::log(p.upper - p.lower) + 2.0 * log_sigmoid(u) - u;
  if (lo || hi) return u;
  return 0.0;
}

double ParameterSpace::dlogjac_du(int i, double u) const {
  const auto& p = params_[i];
  const bool lo = std::isfinite(p.lower), hi = std::isfinite(p.upper);
  if (lo && hi) return 1.0 - 2.0 * sigmoid(u);
  if (lo || hi) return 1.0;
  return 0.0;
}

std::vector<double> ParameterSpace::unconstrain(std::span<const double> theta_c) const {
  if (static_cast<int>(theta_c.size()) != n())
    throw std::invalid_argument("theta length mismatch");
  std::vector<double> u(theta_c.size());
  for (int i = 0; i < n(); ++i) u[i] = unconstrain_coord(i, theta_c[i]);
  return u;
}

std::pair<std::vector<double>, double> ParameterSpace::constrain_with_logjac(
    std::span<const double> theta_u) const {
  if (static_cast<int>(theta_u.size()) != n())
    throw std::invalid_argument("theta length mismatch");
  std::vector<double> c(theta_u.size());
  double lj = 0.0;
  for (int i = 0; i < n(); ++i) {
    c[i] = constrain_coord(i, theta_u[i]);
    lj += logjac_coord(i, theta_u[i]);
  }
  return {std::move(c), lj};
}

double ParameterSpace::log_prior(std::span<const double> theta_c) const {
  double lp = 0.0;
  for (int i = 0; i < n(); ++i) lp += params_[i].prior.logpdf(theta_c[i]);
  return lp;
}

std::vector<double> ParameterSpace::dlog_prior(std::span<const double> theta_c) const {
  std::vector<double> g(theta_c.size(), 0.0);
  for (int i = 0; i < n(); ++i) g[i] = params_[i].prior.dlogpdf(theta_c[i]);
  return g;
}

}  // namespace odebayes
