#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "odebayes/model/prior.hpp"

namespace odebayes {

class OutOfBoundsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParamSpec {
  std::string name;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  PriorDist prior = PriorDist::flat();
};

/// Ordered named parameters with bounds and priors, plus the bijection
/// between the constrained and the unconstrained scale: log for one-sided
/// bounds, logit-affine for two-sided, identity otherwise.
class ParameterSpace {
 public:
  ParameterSpace() = default;
  explicit ParameterSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {}

  int n() const { return static_cast<int>(params_.size()); }
  const ParamSpec& spec(int i) const { return params_[i]; }
  ParamSpec& spec(int i) { return params_[i]; }
  const std::vector<ParamSpec>& specs() const { return params_; }

  int index_of(const std::string& name) const {
    for (int i = 0; i < n(); ++i)
      if (params_[i].name == name) return i;
    return -1;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.name);
    return out;
  }

  // Per-coordinate transform pieces. u is the unconstrained value.
  double constrain_coord(int i, double u) const;
  double unconstrain_coord(int i, double c) const;  // throws OutOfBoundsError
  double dconstrain_du(int i, double u) const;
  double logjac_coord(int i, double u) const;
  double dlogjac_du(int i, double u) const;

  std::vector<double> unconstrain(std::span<const double> theta_c) const;
  /// Inverse of unconstrain plus the summed log |d theta_c / d theta_u|.
  std::pair<std::vector<double>, double> constrain_with_logjac(
      std::span<const double> theta_u) const;

  double log_prior(std::span<const double> theta_c) const;
  /// Gradient of log_prior with respect to theta_c (zero outside support).
  std::vector<double> dlog_prior(std::span<const double> theta_c) const;

 private:
  std::vector<ParamSpec> params_;
};

}  // namespace odebayes
