#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "odebayes/model/model.hpp"
#include "odebayes/ode/system.hpp"

namespace odebayes {

/// Solves the ODE at the given times and adds observation noise with a
/// seeded generator (stream keyed by group index), so results are
/// deterministic per (seed, solver rounding). Forcing schedules, when
/// given, are per group and are copied into the returned dataset.
Dataset simulate_data(const Model& model, std::span<const double> theta_c,
                      std::span<const double> times, int n_groups, std::uint64_t seed,
                      const std::vector<ForcingSchedule>& forcing = {},
                      const SolverConfig& solver = {});

}  // namespace odebayes
