#include "odebayes/diag/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "odebayes/common/special.hpp"
#include "odebayes/kernels/kernels.hpp"

namespace odebayes::diag {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

bool chain_constant(const std::vector<double>& x) {
  for (double v : x)
    if (v != x.front()) return false;
  return true;
}

std::vector<std::vector<double>> split_halves(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + half);
    out.emplace_back(c.end() - half, c.end());
  }
  return out;
}

double mean_of(const std::vector<double>& x) {
  return kernels::sum(x) / static_cast<double>(x.size());
}

double sample_var(const std::vector<double>& x) {
  const double m = mean_of(x);
  return kernels::sq_dev_sum(x, m) / (static_cast<double>(x.size()) - 1.0);
}

/// Effective sample size of equally long chains via combined-chain
/// autocorrelations with Geyer initial-monotone truncation.
double ess_core(const std::vector<std::vector<double>>& chains) {
  const std::size_t n_chains = chains.size();
  const std::size_t n = chains.front().size();
  if (n < 8) return kNaN;

  std::vector<std::vector<double>> centered(n_chains);
  std::vector<double> means(n_chains);
  for (std::size_t c = 0; c < n_chains; ++c) {
    means[c] = mean_of(chains[c]);
    centered[c].resize(n);
    for (std::size_t i = 0; i < n; ++i) centered[c][i] = chains[c][i] - means[c];
  }

  auto mean_acov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t c = 0; c < n_chains; ++c) {
      std::span<const double> head(centered[c].data(), n - lag);
      std::span<const double> tail(centered[c].data() + lag, n - lag);
      acc += kernels::dot(head, tail) / static_cast<double>(n);
    }
    return acc / static_cast<double>(n_chains);
  };

  const double w = mean_acov(0) * static_cast<double>(n) / (static_cast<double>(n) - 1.0);
  double var_plus = w * (static_cast<double>(n) - 1.0) / static_cast<double>(n);
  if (n_chains > 1) var_plus += sample_var(means);
  if (!(var_plus > 0.0) || !std::isfinite(var_plus)) return kNaN;

  std::vector<double> rho(n + 2, 0.0);
  double rho_even = 1.0;
  rho[0] = rho_even;
  double rho_odd = 1.0 - (w - mean_acov(1)) / var_plus;
  rho[1] = rho_odd;

  std::size_t s = 1;
  while (s < n - 4 && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (w - mean_acov(s + 1)) / var_plus;
    rho_odd = 1.0 - (w - mean_acov(s + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[s + 1] = rho_even;
      rho[s + 2] = rho_odd;
    }
    s += 2;
  }
  const std::size_t max_s = s;
  if (rho_even > 0.0) rho[max_s + 1] = rho_even;

  // enforce nonincreasing paired sums
  for (std::size_t t = 1; t + 3 <= max_s; t += 2) {
    if (rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]) {
      rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0;
      rho[t + 2] = rho[t + 1];
    }
  }

  double tau = -1.0 + rho[max_s + 1];
  for (std::size_t t = 0; t < max_s; ++t) tau += 2.0 * rho[t];
  const double total = static_cast<double>(n_chains) * static_cast<double>(n);
  if (!(tau > 0.0)) return 2.0 * total;  // super-efficient, clamp applies
  return std::min(total / tau, 2.0 * total);
}

void require_shape(const std::vector<std::vector<double>>& chains,
                   std::size_t min_draws) {
  if (chains.size() < 2)
    throw std::invalid_argument("diagnostics require at least 2 chains");
  for (const auto& c : chains)
    if (c.size() < min_draws || c.size() != chains.front().size())
      throw std::invalid_argument("diagnostics require >= " + std::to_string(min_draws) +
                                  " draws and equal chain lengths");
}

}  // namespace

std::vector<std::vector<double>> rank_normalize(
    const std::vector<std::vector<double>>& chains) {
  struct Entry {
    double value;
    std::size_t chain, index;
  };
  std::vector<Entry> pool;
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t i = 0; i < chains[c].size(); ++i) pool.push_back({chains[c][i], c, i});
  std::sort(pool.begin(), pool.end(),
            [](const Entry& a, const Entry& b) { return a.value < b.value; });

  const double total = static_cast<double>(pool.size());
  std::vector<std::vector<double>> out(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) out[c].resize(chains[c].size());

  std::size_t i = 0;
  while (i < pool.size()) {
    std::size_t j = i;
    while (j < pool.size() && pool[j].value == pool[i].value) ++j;
    // average rank for ties, 1-based
    const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    const double z = inv_phi((rank - 0.375) / (total + 0.25));
    for (std::size_t k = i; k < j; ++k) out[pool[k].chain][pool[k].index] = z;
    i = j;
  }
  return out;
}

double rhat_basic(const std::vector<std::vector<double>>& chains) {
  require_shape(chains, 2);
  const double n = static_cast<double>(chains.front().size());
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    vars.push_back(sample_var(c));
  }
  const double w = mean_of(vars);
  const double b_over_n = sample_var(means);
  if (!(w > 0.0)) return kInf;
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(var_plus / w);
}

double rhat(const std::vector<std::vector<double>>& chains) {
  require_shape(chains, 4);
  for (const auto& c : chains)
    if (chain_constant(c)) return kInf;

  const auto split = split_halves(chains);
  const auto z = rank_normalize(split);
  const double bulk = rhat_basic(z);

  std::vector<double> pooled;
  for (const auto& c : z) pooled.insert(pooled.end(), c.begin(), c.end());
  const double med = median(pooled);
  auto folded = z;
  for (auto& c : folded)
    for (auto& v : c) v = std::fabs(v - med);
  const double fold = rhat_basic(rank_normalize(folded));
  return std::max(bulk, fold);
}

double ess(const std::vector<std::vector<double>>& chains, EssKind kind) {
  require_shape(chains, 4);
  for (const auto& c : chains)
    if (chain_constant(c)) return kNaN;

  const auto split = split_halves(chains);
  if (kind == EssKind::bulk) return ess_core(rank_normalize(split));

  std::vector<double> pooled;
  for (const auto& c : split) pooled.insert(pooled.end(), c.begin(), c.end());
  std::sort(pooled.begin(), pooled.end());
  double result = kInf;
  for (double p : {0.05, 0.95}) {
    const double q = quantile_sorted(pooled, p);
    auto indicator = split;
    for (auto& c : indicator)
      for (auto& v : c) v = v <= q ? 1.0 : 0.0;
    bool degenerate = false;
    for (const auto& c : indicator) degenerate = degenerate || chain_constant(c);
    const double e = degenerate ? kNaN : ess_core(indicator);
    if (std::isnan(e)) return kNaN;
    result = std::min(result, e);
  }
  return result;
}

DiagnosticSummary summarize(const std::vector<ChainOutput>& chains,
                            const std::vector<std::string>& names, int max_tree_depth,
                            const std::vector<double>& probs) {
  if (chains.empty()) throw std::invalid_argument("summarize: no chains");
  const std::size_t dim = chains.front().draws_constrained.cols();
  if (names.size() != dim) throw std::invalid_argument("summarize: name count mismatch");

  DiagnosticSummary out;
  out.probs = probs;
  out.n_chains = static_cast<int>(chains.size());
  out.n_draws_per_chain = static_cast<long>(chains.front().draws_constrained.rows());
  out.n_warmup = static_cast<long>(chains.front().warmup_unconstrained.rows());

  for (const auto& c : chains) {
    out.total_divergences += c.n_divergent();
    out.max_depth_hits += c.n_max_depth(max_tree_depth);
  }

  long low_ess = 0;
  long high_rhat = 0;
  for (std::size_t j = 0; j < dim; ++j) {
    ParamSummary p;
    p.name = names[j];

    std::vector<std::vector<double>> per_chain;
    std::vector<double> pooled;
    for (const auto& c : chains) {
      per_chain.push_back(c.draws_constrained.col(j));
      const auto& col = per_chain.back();
      pooled.insert(pooled.end(), col.begin(), col.end());
    }
    const double n_total = static_cast<double>(pooled.size());
    p.mean = kernels::sum(pooled) / n_total;
    p.sd = std::sqrt(kernels::sq_dev_sum(pooled, p.mean) / (n_total - 1.0));
    std::sort(pooled.begin(), pooled.end());
    for (double q : probs) p.quantiles.push_back(quantile_sorted(pooled, q));

    p.rhat = rhat(per_chain);
    p.ess_bulk = ess(per_chain, EssKind::bulk);
    p.ess_tail = ess(per_chain, EssKind::tail);
    p.se_mean = p.sd / std::sqrt(p.ess_bulk);

    if (!(p.rhat <= 1.01)) ++high_rhat;
    if (!(p.ess_bulk >= 100.0 * out.n_chains)) ++low_ess;
    out.params.push_back(std::move(p));
  }

  if (high_rhat > 0)
    out.warnings.push_back("Warning: " + std::to_string(high_rhat) +
                           " parameter(s) with R-hat > 1.01; chains may not have mixed.");
  if (low_ess > 0)
    out.warnings.push_back("Warning: " + std::to_string(low_ess) +
                           " parameter(s) with bulk-ESS below 100 per chain.");
  if (out.total_divergences > 0)
    out.warnings.push_back("Warning: " + std::to_string(out.total_divergences) +
                           " divergent transition(s) after warmup.");
  if (out.max_depth_hits > 0)
    out.warnings.push_back("Warning: " + std::to_string(out.max_depth_hits) +
                           " transition(s) hit the maximum tree depth.");
  return out;
}

std::string render_table(const DiagnosticSummary& s) {
  std::ostringstream os;
  const long iter = s.n_warmup + s.n_draws_per_chain;
  os << "Inference summary.\n";
  os << s.n_chains << " chains, each with iter=" << iter << "; warmup=" << s.n_warmup
     << "; thin=1; \n";
  os << "post-warmup draws per chain=" << s.n_draws_per_chain
     << ", total post-warmup draws=" << s.n_draws_per_chain * s.n_chains << ".\n\n";

  std::size_t name_w = 5;
  for (const auto& p : s.params) name_w = std::max(name_w, p.name.size());

  auto cell = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%8.2f", v);
    return std::string(buf);
  };

  os << std::string(name_w, ' ') << "    mean se_mean      sd";
  for (double q : s.probs) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%7.3g%%", 100.0 * q);
    os << buf;
  }
  os << "   n_eff  Rhat\n";

  for (const auto& p : s.params) {
    os << p.name << std::string(name_w - p.name.size(), ' ');
    os << cell(p.mean) << cell(p.se_mean) << cell(p.sd);
    for (double q : p.quantiles) os << cell(q);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%8.0f%6.2f", p.ess_bulk, p.rhat);
    os << buf << "\n";
  }
  for (const auto& w : s.warnings) os << "\n" << w;
  if (!s.warnings.empty()) os << "\n";
  return os.str();
}

std::string summary_csv(const DiagnosticSummary& s) {
  std::ostringstream os;
  os << "param,mean,se_mean,sd";
  for (double q : s.probs) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), ",q%02.0f", 100.0 * q);
    os << buf;
  }
  os << ",ess_bulk,ess_tail,rhat\n";
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& p : s.params) {
    os << p.name << ',' << num(p.mean) << ',' << num(p.se_mean) << ',' << num(p.sd);
    for (double q : p.quantiles) os << ',' << num(q);
    os << ',' << num(p.ess_bulk) << ',' << num(p.ess_tail) << ',' << num(p.rhat) << "\n";
  }
  return os.str();
}

}  // namespace odebayes::diag
