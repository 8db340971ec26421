#include "odebayes/model/simulate.hpp"

#include <stdexcept>

#include "odebayes/common/rng.hpp"
#include "odebayes/ode/solver.hpp"

namespace odebayes {

std::string to_string(PoolingMode mode) {
  switch (mode) {
    case PoolingMode::complete: return "complete";
    case PoolingMode::none: return "none";
    case PoolingMode::partial: return "partial";
  }
  return "?";
}

Dataset simulate_data(const Model& model, std::span<const double> theta_c,
                      std::span<const double> times, int n_groups, std::uint64_t seed,
                      const std::vector<ForcingSchedule>& forcing,
                      const SolverConfig& solver) {
  if (static_cast<int>(theta_c.size()) != model.space.n())
    throw std::invalid_argument("simulate_data: theta length mismatch");
  if (n_groups < 1) throw std::invalid_argument("simulate_data: need at least one group");
  if (!forcing.empty() && static_cast<int>(forcing.size()) != n_groups)
    throw std::invalid_argument("simulate_data: forcing count != n_groups");

  const auto xi = model.xi_from_theta(theta_c);
  Dataset ds;
  for (int g = 0; g < n_groups; ++g) {
    const ForcingSchedule& f = forcing.empty() ? ForcingSchedule{} : forcing[g];
    const auto traj = solve(model.system, xi, times, solver, f);

    GroupSeries gs;
    gs.id = model.group_prefix + std::to_string(g + 1);
    gs.times.assign(times.begin(), times.end());
    gs.forcing = f;
    gs.observations = Matrix(model.n_channels(), times.size());

    Rng rng(seed, static_cast<std::uint64_t>(g));
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto state = traj.states.row(i);
      for (int ch = 0; ch < model.n_channels(); ++ch) {
        const double mu = model.obs.channel_mean(state, ch);
        gs.observations(ch, i) = model.obs.sample(mu, theta_c, rng);
      }
    }
    ds.groups.push_back(std::move(gs));
  }
  ds.validate();
  return ds;
}

}  // namespace odebayes
