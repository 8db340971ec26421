#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "odebayes/common/rng.hpp"

namespace odebayes {

/// Gaussian observation model over selected/summed state components. The
/// predicted sd must be positive wherever the likelihood is evaluated;
/// violations yield -inf, never an error.
struct ObservationModel {
  enum class NoiseKind { additive, add_prop };

  NoiseKind noise = NoiseKind::additive;
  int sigma_index = -1;        // theta index of the additive sd
  int sigma_prime_index = -1;  // theta index of the proportional sd (add_prop)
  std::vector<std::vector<int>> channels;  // per channel: state indices summed

  int n_channels() const { return static_cast<int>(channels.size()); }

  double channel_mean(std::span<const double> state, int ch) const {
    double m = 0.0;
    for (int s : channels[ch]) m += state[s];
    return m;
  }

  double sd(double mu, std::span<const double> theta_c) const {
    double s = theta_c[sigma_index];
    if (noise == NoiseKind::add_prop) s += mu * theta_c[sigma_prime_index];
    return s;
  }

  double loglik(double y_obs, double mu, std::span<const double> theta_c) const {
    static const double log_sqrt_2pi = 0.9189385332046727;
    const double s = sd(mu, theta_c);
    if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
    const double z = (y_obs - mu) / s;
    return -0.5 * z * z - std::log(s) - log_sqrt_2pi;
  }

  struct Partials {
    double d_mu = 0.0;
    double d_sigma = 0.0;
    double d_sigma_prime = 0.0;
  };

  /// Derivatives of loglik, defined only where sd > 0. In the add_prop
  /// case mu enters the sd as well, which shows up in d_mu.
  Partials dloglik(double y_obs, double mu, std::span<const double> theta_c) const {
    Partials out;
    const double s = sd(mu, theta_c);
    const double res = y_obs - mu;
    const double d_wrt_sd = -1.0 / s + res * res / (s * s * s);
    out.d_mu = res / (s * s);
    out.d_sigma = d_wrt_sd;
    if (noise == NoiseKind::add_prop) {
      out.d_mu += d_wrt_sd * theta_c[sigma_prime_index];
      out.d_sigma_prime = d_wrt_sd * mu;
    }
    return out;
  }

  double sample(double mu, std::span<const double> theta_c, Rng& rng) const {
    return mu + sd(mu, theta_c) * rng.normal();
  }
};

}  // namespace odebayes
