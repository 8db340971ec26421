#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "odebayes/common/rng.hpp"
#include "odebayes/sample/steps.hpp"
#include "odebayes/target/target.hpp"

namespace odebayes {

/// Nesterov dual averaging of log step size toward a target acceptance
/// statistic (gamma = 0.05, t0 = 10, kappa = 0.75).
class DualAveraging {
 public:
  DualAveraging(double initial_eps, double target_accept)
      : mu_(std::log(10.0 * initial_eps)),
        log_eps_(std::log(initial_eps)),
        target_(target_accept) {}

  void update(double accept_stat) {
    ++m_;
    const double eta = 1.0 / (m_ + t0_);
    h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept_stat);
    log_eps_ = mu_ - std::sqrt(static_cast<double>(m_)) / gamma_ * h_bar_;
    const double w = std::pow(static_cast<double>(m_), -kappa_);
    log_eps_bar_ = w * log_eps_ + (1.0 - w) * log_eps_bar_;
  }

  double current() const { return std::exp(log_eps_); }
  double adapted() const { return m_ > 0 ? std::exp(log_eps_bar_) : std::exp(log_eps_); }

 private:
  static constexpr double gamma_ = 0.05;
  static constexpr double t0_ = 10.0;
  static constexpr double kappa_ = 0.75;
  double mu_;
  double log_eps_;
  double log_eps_bar_ = 0.0;
  double h_bar_ = 0.0;
  double target_;
  long m_ = 0;
};

/// Streaming variance estimator for the diagonal mass matrix windows.
class WelfordVar {
 public:
  void reset(std::size_t dim) {
    n_ = 0;
    mean_.assign(dim, 0.0);
    m2_.assign(dim, 0.0);
  }
  void add(std::span<const double> x) {
    ++n_;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean_[i];
      mean_[i] += d / static_cast<double>(n_);
      m2_[i] += d * (x[i] - mean_[i]);
    }
  }
  long count() const { return n_; }
  /// Regularized variance, shrunk toward 1e-3 for short windows.
  std::vector<double> regularized() const {
    std::vector<double> v(mean_.size(), 1.0);
    if (n_ < 2) return v;
    const double n = static_cast<double>(n_);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double var = m2_[i] / (n - 1.0);
      v[i] = n / (n + 5.0) * var + 1e-3 * (5.0 / (n + 5.0));
    }
    return v;
  }

 private:
  long n_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

/// Warmup phases: a step-size-only opening (15%), expanding mass-matrix
/// windows (25, 50, 100, ...), and a step-size-only tail (10%). Windows
/// that would leave a short remainder absorb it.
struct WarmupSchedule {
  int init_end = 0;
  int term_start = 0;
  std::vector<int> window_ends;

  static WarmupSchedule build(int n_warmup, bool adapt_mass);
  bool in_mass_window(int iter) const { return iter >= init_end && iter < term_start; }
  bool window_closes(int iter) const {
    for (int e : window_ends)
      if (iter == e - 1) return true;
    return false;
  }
};

/// Reasonable first step size: double or halve until the one-step
/// acceptance probability crosses 1/2.
double find_initial_step(const Target& target, const PhasePoint& z0,
                         std::span<const double> mass_diag, Rng& rng);

class InitFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-chain initial points, uniform on [-2,2]^dim, redrawn until the value
/// and gradient are finite (at most 100 tries).
std::vector<double> init_point(const Target& target, Rng& rng);

}  // namespace odebayes
