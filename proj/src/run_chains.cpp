#include "odebayes/sample/run.hpp"

#include <cmath>
#include <thread>

#include "odebayes/sample/adapt.hpp"
#include "odebayes/sample/steps.hpp"

namespace odebayes {

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "rwm") return Algorithm::rwm;
  if (s == "mh") return Algorithm::mh;
  if (s == "hmc") return Algorithm::hmc;
  if (s == "nuts") return Algorithm::nuts;
  throw ConfigError("unknown algorithm '" + s + "'");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::rwm: return "rwm";
    case Algorithm::mh: return "mh";
    case Algorithm::hmc: return "hmc";
    case Algorithm::nuts: return "nuts";
  }
  return "?";
}

namespace {

ChainOutput run_walk_chain(const Target& target, const SamplerConfig& config, int chain_id) {
  Rng rng(config.seed, static_cast<std::uint64_t>(chain_id));
  const int d = target.dim();

  ChainOutput out;
  out.chain_id = chain_id;
  out.mass_diag.assign(d, 1.0);

  std::vector<double> sigma_base =
      config.rwm_sigma.empty() ? std::vector<double>(d, 1.0) : config.rwm_sigma;
  if (static_cast<int>(sigma_base.size()) != d)
    throw ConfigError("rwm_sigma length does not match target dimension");

  std::vector<double> theta = init_point(target, rng);
  double logp = target.eval_value(theta);

  // Robbins-Monro on the global log scale toward the random-walk optimum.
  const double accept_goal = d == 1 ? 0.44 : 0.23;
  double log_scale = 0.0;

  std::vector<double> sigma(d);
  auto effective_sigma = [&]() {
    const double s = std::exp(log_scale);
    for (int i = 0; i < d; ++i) sigma[i] = s * sigma_base[i];
  };

  auto one_step = [&](double scale_now) {
    StepResult step =
        config.algorithm == Algorithm::rwm
            ? rwm_step(target, theta, logp, sigma, rng)
            : mh_step(target, theta, logp, GaussianWalkProposal(sigma), rng);
    theta = std::move(step.theta);
    logp = step.logp;
    step.stats.step_size = scale_now;
    return step.stats;
  };

  for (int m = 1; m <= config.n_warmup; ++m) {
    effective_sigma();
    const double scale_now = std::exp(log_scale);
    const DrawStats stats = one_step(scale_now);
    log_scale += std::pow(static_cast<double>(m), -0.6) * (stats.accept_prob - accept_goal);
    out.warmup_unconstrained.push_row(theta);
    out.warmup_stats.push_back(stats);
  }

  effective_sigma();  // frozen
  out.step_size = std::exp(log_scale);
  for (int m = 0; m < config.n_draws; ++m) {
    const DrawStats stats = one_step(out.step_size);
    out.draws_unconstrained.push_row(theta);
    out.draws_constrained.push_row(target.to_constrained(theta));
    out.stats.push_back(stats);
  }
  return out;
}

ChainOutput run_hamiltonian_chain(const Target& target, const SamplerConfig& config,
                                  int chain_id) {
  Rng rng(config.seed, static_cast<std::uint64_t>(chain_id));
  const int d = target.dim();

  ChainOutput out;
  out.chain_id = chain_id;
  out.mass_diag.assign(d, 1.0);

  PhasePoint z;
  z.theta = init_point(target, rng);
  {
    const auto rec = target.eval(z.theta);
    z.logp = rec.value;
    z.grad = rec.gradient;
  }

  double eps0 = find_initial_step(target, z, out.mass_diag, rng);
  DualAveraging da(eps0, config.target_accept);
  const auto schedule = WarmupSchedule::build(config.n_warmup, true);
  WelfordVar welford;
  welford.reset(d);

  auto one_step = [&](double eps) {
    HmcResult res = config.algorithm == Algorithm::hmc
                        ? hmc_step(target, z, eps, config.hmc_leapfrog_steps, out.mass_diag,
                                   config.divergence_delta, rng)
                        : nuts_step(target, z, eps, out.mass_diag, config.max_tree_depth,
                                    config.divergence_delta, rng);
    z.theta = std::move(res.theta);
    z.logp = res.logp;
    z.grad = std::move(res.grad);
    res.stats.step_size = eps;
    return res.stats;
  };

  for (int m = 0; m < config.n_warmup; ++m) {
    const DrawStats stats = one_step(da.current());
    da.update(stats.accept_prob);
    out.warmup_unconstrained.push_row(z.theta);
    out.warmup_stats.push_back(stats);

    if (schedule.in_mass_window(m)) welford.add(z.theta);
    if (schedule.window_closes(m) && welford.count() >= 10) {
      // kinetic metric: M = 1 / estimated posterior variance, so that
      // position updates stride proportionally to the posterior scale
      const auto var = welford.regularized();
      for (int i = 0; i < d; ++i) out.mass_diag[i] = 1.0 / var[i];
      welford.reset(d);
      eps0 = find_initial_step(target, z, out.mass_diag, rng);
      da = DualAveraging(eps0, config.target_accept);
    }
  }

  out.step_size = da.adapted();
  for (int m = 0; m < config.n_draws; ++m) {
    const DrawStats stats = one_step(out.step_size);
    out.draws_unconstrained.push_row(z.theta);
    out.draws_constrained.push_row(target.to_constrained(z.theta));
    out.stats.push_back(stats);
  }
  return out;
}

ChainOutput run_chain(const Target& target, const SamplerConfig& config, int chain_id) {
  switch (config.algorithm) {
    case Algorithm::rwm:
    case Algorithm::mh:
      return run_walk_chain(target, config, chain_id);
    case Algorithm::hmc:
    case Algorithm::nuts:
      return run_hamiltonian_chain(target, config, chain_id);
  }
  throw ConfigError("unreachable algorithm");
}

}  // namespace

std::vector<ChainOutput> run_chains(const Target& target, const SamplerConfig& config) {
  config.validate();
  std::vector<ChainOutput> chains(config.n_chains);

  if (!config.parallel_chains || config.n_chains == 1) {
    for (int c = 0; c < config.n_chains; ++c) chains[c] = run_chain(target, config, c);
    return chains;
  }

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(config.n_chains);
  workers.reserve(config.n_chains);
  for (int c = 0; c < config.n_chains; ++c)
    workers.emplace_back([&, c] {
      try {
        chains[c] = run_chain(target, config, c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return chains;
}

std::vector<std::vector<double>> init_points(const Target& target,
                                             const SamplerConfig& config) {
  config.validate();
  std::vector<std::vector<double>> points;
  for (int c = 0; c < config.n_chains; ++c) {
    Rng rng(config.seed, static_cast<std::uint64_t>(c));
    points.push_back(init_point(target, rng));
  }
  return points;
}

}  // namespace odebayes
