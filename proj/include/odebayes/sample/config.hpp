#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace odebayes {

enum class Algorithm { rwm, mh, hmc, nuts };

Algorithm algorithm_from_string(const std::string& s);
std::string to_string(Algorithm a);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SamplerConfig {
  Algorithm algorithm = Algorithm::nuts;
  int n_chains = 4;
  int n_warmup = 1000;
  int n_draws = 1000;
  std::uint64_t seed = 0;
  std::vector<double> rwm_sigma;  // proposal sd diagonal; empty = ones
  int hmc_leapfrog_steps = 16;
  int max_tree_depth = 10;
  double target_accept = 0.8;
  double divergence_delta = 1000.0;
  bool parallel_chains = true;

  void validate() const {
    if (n_chains < 1) throw ConfigError("n_chains must be >= 1");
    if (n_warmup < 1) throw ConfigError("n_warmup must be >= 1");
    if (n_draws < 1) throw ConfigError("n_draws must be >= 1");
    if (!(target_accept > 0.0 && target_accept < 1.0))
      throw ConfigError("target_accept must lie in (0,1)");
    if (max_tree_depth < 1 || max_tree_depth > 20)
      throw ConfigError("max_tree_depth must lie in [1,20]");
    if (hmc_leapfrog_steps < 1) throw ConfigError("hmc_leapfrog_steps must be >= 1");
    if (!(divergence_delta > 0.0)) throw ConfigError("divergence_delta must be positive");
    for (double s : rwm_sigma)
      if (!(s > 0.0)) throw ConfigError("rwm_sigma entries must be positive");
  }
};

}  // namespace odebayes
