#pragma once

#include <cstdint>
#include <vector>

#include "odebayes/common/matrix.hpp"

namespace odebayes {

struct DrawStats {
  double accept_prob = 0.0;
  bool divergent = false;
  double energy = 0.0;
  int tree_depth = 0;
  long n_leapfrog = 0;
  double step_size = 0.0;
};

/// Per-chain draws plus per-draw sampler statistics. Warmup draws are kept
/// separately and never enter inference.
struct ChainOutput {
  int chain_id = 0;
  Matrix draws_unconstrained;  // n_draws x dim
  Matrix draws_constrained;    // n_draws x dim, per-coordinate transform
  std::vector<DrawStats> stats;
  Matrix warmup_unconstrained;
  std::vector<DrawStats> warmup_stats;
  std::vector<double> mass_diag;  // kinetic metric M (inverse estimated variance)
  double step_size = 0.0;

  long n_divergent() const {
    long n = 0;
    for (const auto& s : stats) n += s.divergent ? 1 : 0;
    return n;
  }
  long n_max_depth(int max_depth) const {
    long n = 0;
    for (const auto& s : stats) n += s.tree_depth >= max_depth ? 1 : 0;
    return n;
  }
};

}  // namespace odebayes
