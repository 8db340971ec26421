#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "odebayes/model/dataset.hpp"
#include "odebayes/model/observation.hpp"
#include "odebayes/model/parameter_space.hpp"
#include "odebayes/ode/system.hpp"

namespace odebayes {

enum class PoolingMode { complete, none, partial };

std::string to_string(PoolingMode mode);

/// Everything build_target and simulate_data need: the ODE system, the full
/// parameter space (ODE parameters plus noise parameters), how theta maps
/// onto the ODE parameter vector xi, and the observation model.
struct Model {
  std::string name;
  std::string group_prefix = "g";
  OdeSystem system;
  ParameterSpace space;
  std::vector<int> xi_of_theta;  // theta indices forming xi, in xi order
  ObservationModel obs;
  PoolingMode default_pooling = PoolingMode::complete;

  /// Per-group initial state; defaults to the system's. The prostate model
  /// overrides this to anchor P0 at the group's first observed value.
  std::function<InitialState(const OdeSystem&, const GroupSeries&)> y0_for_group;

  int n_channels() const { return obs.n_channels(); }

  std::vector<double> xi_from_theta(std::span<const double> theta_c) const {
    std::vector<double> xi(xi_of_theta.size());
    for (std::size_t j = 0; j < xi_of_theta.size(); ++j) xi[j] = theta_c[xi_of_theta[j]];
    return xi;
  }

  InitialState initial_state_for(const GroupSeries& g) const {
    return y0_for_group ? y0_for_group(system, g) : system.y0;
  }
};

}  // namespace odebayes
