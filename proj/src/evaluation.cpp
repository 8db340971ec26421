#include "odebayes/eval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "odebayes/kernels/kernels.hpp"
#include "odebayes/ode/solver.hpp"

namespace odebayes {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sample_var(std::span<const double> x) {
  const double m = kernels::sum(x) / static_cast<double>(x.size());
  return kernels::sq_dev_sum(x, m) / (static_cast<double>(x.size()) - 1.0);
}

}  // namespace

LogLikMatrix build_loglik_matrix(const OdeTarget& eval_target,
                                 const std::vector<ChainOutput>& chains) {
  LogLikMatrix out;
  out.labels = eval_target.labels();
  for (const auto& chain : chains) {
    for (std::size_t i = 0; i < chain.draws_unconstrained.rows(); ++i) {
      const auto terms = eval_target.pointwise_loglik(chain.draws_unconstrained.row(i));
      if (!terms) {
        ++out.excluded_draws;
        continue;
      }
      out.loglik.push_row(*terms);
    }
  }
  return out;
}

double lpd(const LogLikMatrix& loglik) {
  if (loglik.loglik.empty()) throw std::invalid_argument("lpd: empty log-likelihood matrix");
  const double log_s = std::log(static_cast<double>(loglik.n_draws()));
  double total = 0.0;
  for (long i = 0; i < loglik.n_obs(); ++i) {
    const auto col = loglik.loglik.col(static_cast<std::size_t>(i));
    total += kernels::log_sum_exp(col) - log_s;
  }
  return total;
}

std::pair<double, double> gpd_fit_pwm(std::vector<double> exceedances) {
  const std::size_t n = exceedances.size();
  if (n < 5) return {kNaN, kNaN};
  std::sort(exceedances.begin(), exceedances.end());
  if (!(exceedances.back() > 0.0)) return {kNaN, kNaN};

  // a0 = E[X] and a1 = E[X (1-F(X))]; for the GPD these are
  // sigma/(1-k) and sigma/(2(2-k)), so R = a0/a1 identifies k.
  const double a0 = kernels::sum(exceedances) / static_cast<double>(n);
  double a1 = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    a1 += (static_cast<double>(n - 1 - j) / (static_cast<double>(n) - 1.0)) * exceedances[j];
  a1 /= static_cast<double>(n);

  if (!(a1 > 0.0)) return {kNaN, kNaN};
  const double ratio = a0 / a1;
  if (!(ratio > 2.0)) return {kNaN, kNaN};
  double k = (4.0 - ratio) / (2.0 - ratio);
  const double sigma = a0 * (1.0 - k);
  if (!(sigma > 0.0)) return {kNaN, kNaN};

  // weakly informative shrinkage of the shape toward 1/2
  const double m = static_cast<double>(n);
  k = (m * k + 5.0 * 0.5) / (m + 10.0);
  return {k, sigma};
}

double gpd_quantile(double p, double k, double sigma) {
  if (std::fabs(k) < 1e-12) return -sigma * std::log1p(-p);
  return sigma / k * (std::pow(1.0 - p, -k) - 1.0);
}

LooResult psis_loo(const LogLikMatrix& loglik) {
  if (loglik.loglik.empty())
    throw std::invalid_argument("psis_loo: empty log-likelihood matrix");
  const long s_draws = loglik.n_draws();
  const long n_obs = loglik.n_obs();

  LooResult out;
  out.labels = loglik.labels;
  out.excluded_draws = loglik.excluded_draws;
  out.pointwise.resize(n_obs);
  out.pareto_k.assign(n_obs, kNaN);

  const long tail_len = std::min(
      static_cast<long>(std::ceil(0.2 * static_cast<double>(s_draws))),
      static_cast<long>(std::ceil(3.0 * std::sqrt(static_cast<double>(s_draws)))));

  for (long i = 0; i < n_obs; ++i) {
    const auto col = loglik.loglik.col(static_cast<std::size_t>(i));
    std::vector<double> lw(col.size());
    for (std::size_t s = 0; s < col.size(); ++s) lw[s] = -col[s];
    const double lw_max = kernels::max(lw);
    for (auto& v : lw) v -= lw_max;

    if (tail_len >= 5 && s_draws > 2 * tail_len) {
      std::vector<std::size_t> order(lw.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return lw[a] < lw[b]; });
      const double cutoff_log = lw[order[order.size() - tail_len - 1]];
      const double cutoff = std::exp(cutoff_log);

      std::vector<double> exceed(tail_len);
      for (long j = 0; j < tail_len; ++j)
        exceed[j] = std::exp(lw[order[order.size() - tail_len + j]]) - cutoff;

      const auto [k, sigma] = gpd_fit_pwm(exceed);
      if (std::isfinite(k)) {
        out.pareto_k[i] = k;
        for (long j = 0; j < tail_len; ++j) {
          const double p = (static_cast<double>(j) + 0.5) / static_cast<double>(tail_len);
          lw[order[order.size() - tail_len + j]] =
              std::log(cutoff + gpd_quantile(p, k, sigma));
        }
        // truncate at the raw maximum (0 after the shift)
        for (auto& v : lw) v = std::min(v, 0.0);
      }
    }

    std::vector<double> lw_plus_ll(lw.size());
    for (std::size_t s = 0; s < lw.size(); ++s) lw_plus_ll[s] = lw[s] + col[s];
    out.pointwise[i] = kernels::log_sum_exp(lw_plus_ll) - kernels::log_sum_exp(lw);
    if (out.pareto_k[i] > 1.0)
      ++out.n_very_high_k;
    else if (out.pareto_k[i] > 0.7)
      ++out.n_high_k;
  }

  out.elpd = kernels::sum(out.pointwise);
  out.se = std::sqrt(static_cast<double>(n_obs) * sample_var(out.pointwise));
  return out;
}

LooComparison loo_compare(const LooResult& a, const LooResult& b) {
  if (a.labels.size() != b.labels.size())
    throw LabelMismatchError("loo_compare: observation counts differ");
  for (std::size_t i = 0; i < a.labels.size(); ++i)
    if (!(a.labels[i] == b.labels[i]))
      throw LabelMismatchError("loo_compare: observation labels differ at index " +
                               std::to_string(i));

  const std::size_t n = a.pointwise.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = b.pointwise[i] - a.pointwise[i];

  LooComparison out;
  out.elpd_diff = kernels::sum(diff);
  out.se_diff = n > 1 ? std::sqrt(static_cast<double>(n) * sample_var(diff)) : 0.0;
  out.flagged = std::fabs(out.elpd_diff) > 2.0 * out.se_diff;
  return out;
}

PosteriorPredictive posterior_predictive(const OdeTarget& target,
                                         const std::vector<ChainOutput>& chains,
                                         std::span<const double> ts_gen, Rng& rng) {
  const auto& model = target.model();
  const int n_ch = model.n_channels();
  const int n_groups = target.n_groups();

  PosteriorPredictive out;
  out.times.assign(ts_gen.begin(), ts_gen.end());
  out.n_channels = n_ch;
  for (const auto& g : target.groups()) out.group_ids.push_back(g.id);
  auto shape = [&](auto& tensor) {
    tensor.assign(n_groups, std::vector<std::vector<std::vector<double>>>(
                                n_ch, std::vector<std::vector<double>>(ts_gen.size())));
  };
  shape(out.y_mean);
  shape(out.y_pred);

  for (const auto& chain : chains) {
    for (std::size_t d = 0; d < chain.draws_unconstrained.rows(); ++d) {
      const auto u = chain.draws_unconstrained.row(d);
      bool failed = false;
      std::vector<Trajectory> trajs(n_groups);
      std::vector<std::vector<double>> thetas(n_groups);
      for (int g = 0; g < n_groups && !failed; ++g) {
        thetas[g] = target.group_theta_c(u, g);
        OdeSystem sys = model.system;
        sys.y0 = target.groups()[g].y0;
        try {
          trajs[g] = solve(sys, model.xi_from_theta(thetas[g]), ts_gen,
                           target.solver_config(), target.groups()[g].forcing);
        } catch (const SolverError&) {
          failed = true;
        }
      }
      if (failed) {
        ++out.skipped_draws;
        continue;
      }
      for (int g = 0; g < n_groups; ++g)
        for (std::size_t t = 0; t < ts_gen.size(); ++t) {
          const auto state = trajs[g].states.row(t);
          for (int ch = 0; ch < n_ch; ++ch) {
            const double mu = model.obs.channel_mean(state, ch);
            out.y_mean[g][ch][t].push_back(mu);
            out.y_pred[g][ch][t].push_back(model.obs.sample(mu, thetas[g], rng));
          }
        }
    }
  }
  return out;
}

}  // namespace odebayes
