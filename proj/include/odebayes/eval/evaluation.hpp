#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "odebayes/common/matrix.hpp"
#include "odebayes/common/rng.hpp"
#include "odebayes/sample/chain_output.hpp"
#include "odebayes/target/ode_target.hpp"

namespace odebayes {

class LabelMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// S retained draws x N observations of pointwise log likelihood. Draws
/// with solver failures are excluded and counted, never imputed.
struct LogLikMatrix {
  Matrix loglik;
  std::vector<ObsLabel> labels;
  long excluded_draws = 0;

  long n_draws() const { return static_cast<long>(loglik.rows()); }
  long n_obs() const { return static_cast<long>(loglik.cols()); }
};

/// Pointwise log likelihood of eval_target at every retained draw. The
/// draws come from chains sampled against a target with the same
/// coordinate layout (same model, pooling, and groups).
LogLikMatrix build_loglik_matrix(const OdeTarget& eval_target,
                                 const std::vector<ChainOutput>& chains);

/// Log pointwise predictive density on the matrix's observations:
/// sum_i log( mean_s exp(loglik[s,i]) ), log-sum-exp stabilised.
double lpd(const LogLikMatrix& loglik);

struct LooResult {
  double elpd = 0.0;
  double se = 0.0;
  std::vector<double> pointwise;  // per observation elpd_i
  std::vector<double> pareto_k;   // NaN when the tail fit is degenerate
  std::vector<ObsLabel> labels;
  long n_high_k = 0;       // k > 0.7
  long n_very_high_k = 0;  // k > 1.0
  long excluded_draws = 0;
};

/// Pareto-smoothed importance-sampling LOO. Raw ratios are 1/likelihood;
/// the M = min(ceil(0.2 S), ceil(3 sqrt(S))) largest weights are replaced
/// by quantiles of a generalized Pareto fit and truncated at the raw
/// maximum.
LooResult psis_loo(const LogLikMatrix& loglik);

struct LooComparison {
  double elpd_diff = 0.0;  // b - a
  double se_diff = 0.0;
  bool flagged = false;  // |diff| > 2 se
};

/// Pointwise comparison of two results over identical observation labels.
LooComparison loo_compare(const LooResult& a, const LooResult& b);

/// Generalized Pareto (k, sigma) by probability-weighted moments on the
/// exceedances, with the usual sample-size-dependent shrinkage of k toward
/// 1/2. Exposed for the oracle test.
std::pair<double, double> gpd_fit_pwm(std::vector<double> exceedances);
double gpd_quantile(double p, double k, double sigma);

/// Per-draw noise-free trajectories (y_mean) and noisy replicates (y_pred)
/// on a prediction grid; draws whose solve fails are skipped and counted.
struct PosteriorPredictive {
  std::vector<double> times;
  std::vector<std::string> group_ids;
  int n_channels = 0;
  // [group][channel][time] -> values across retained draws
  std::vector<std::vector<std::vector<std::vector<double>>>> y_mean;
  std::vector<std::vector<std::vector<std::vector<double>>>> y_pred;
  long skipped_draws = 0;
};

PosteriorPredictive posterior_predictive(const OdeTarget& target,
                                         const std::vector<ChainOutput>& chains,
                                         std::span<const double> ts_gen, Rng& rng);

}  // namespace odebayes
