#pragma once

#include <span>

#include "odebayes/ode/system.hpp"

namespace odebayes {

/// Dormand-Prince 5(4) with PI step-size control. Steps are forced to land
/// on every forcing breakpoint and on every output time, so discontinuities
/// never sit inside a step. ts must be strictly increasing with
/// ts[0] >= system.t0.
Trajectory solve(const OdeSystem& system, std::span<const double> xi,
                 std::span<const double> ts, const SolverConfig& config = {},
                 const ForcingSchedule& forcing = {});

/// Same integration with the forward-sensitivity system dS/dt = (df/dy) S
/// + df/dxi appended, sharing the error control. sensitivities[i] holds
/// dy(ts[i])/dxi as a dim x n_xi matrix.
Trajectory solve_with_sensitivities(const OdeSystem& system, std::span<const double> xi,
                                    std::span<const double> ts,
                                    const SolverConfig& config = {},
                                    const ForcingSchedule& forcing = {});

/// df/dy and df/dxi by one dual-number sweep of the right-hand side.
/// Used when no analytic Jacobians are supplied, and as the cross-check
/// route when they are.
void jacobians_via_dual(const OdeSystem& system, double t, std::span<const double> y,
                        std::span<const double> xi, double forcing, Matrix& df_dy,
                        Matrix& df_dxi);

}  // namespace odebayes
