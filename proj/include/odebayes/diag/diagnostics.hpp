#pragma once

#include <string>
#include <vector>

#include "odebayes/sample/chain_output.hpp"

namespace odebayes::diag {

/// Plain potential-scale-reduction factor on the chains as given (no
/// splitting, no rank transform): sqrt(var_plus / W).
double rhat_basic(const std::vector<std::vector<double>>& chains);

/// Rank-normalised split R-hat: chains are split in half, pooled draws are
/// rank-transformed to normal scores, and the larger of the bulk and
/// folded statistics is returned. A constant chain yields +inf.
/// Requires >= 2 chains with >= 4 draws each.
double rhat(const std::vector<std::vector<double>>& chains);

enum class EssKind { bulk, tail };

/// Effective sample size from combined-chain autocorrelations (direct
/// sums, Geyer initial-monotone truncation), on split chains. Bulk uses
/// rank-normal scores; tail is the minimum over the 5% and 95% indicator
/// chains. Clamped at 2 * total draws; NaN for constant chains.
double ess(const std::vector<std::vector<double>>& chains, EssKind kind);

/// Pooled rank-normal scores (average ranks, Blom offset), chain layout
/// preserved. Exposed for the transform-invariance tests.
std::vector<std::vector<double>> rank_normalize(const std::vector<std::vector<double>>& chains);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double se_mean = 0.0;
  double sd = 0.0;
  std::vector<double> quantiles;
  double ess_bulk = 0.0;
  double ess_tail = 0.0;
  double rhat = 0.0;
};

struct DiagnosticSummary {
  std::vector<ParamSummary> params;
  std::vector<double> probs;
  int n_chains = 0;
  long n_draws_per_chain = 0;
  long n_warmup = 0;
  long total_divergences = 0;
  long max_depth_hits = 0;
  std::vector<std::string> warnings;
};

/// Constrained-scale summaries over post-warmup draws, plus warning lines
/// for R-hat > 1.01, low ESS, divergences, and tree-depth saturation.
DiagnosticSummary summarize(const std::vector<ChainOutput>& chains,
                            const std::vector<std::string>& names, int max_tree_depth,
                            const std::vector<double>& probs = {0.05, 0.5, 0.95});

/// Fixed-width table: mean, se_mean, sd, quantiles, n_eff, Rhat.
std::string render_table(const DiagnosticSummary& s);

/// Machine-readable: param,mean,se_mean,sd,q05,q50,q95,ess_bulk,ess_tail,rhat.
std::string summary_csv(const DiagnosticSummary& s);

}  // namespace odebayes::diag
