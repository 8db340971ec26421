#pragma once

#include <vector>

#include "odebayes/sample/chain_output.hpp"
#include "odebayes/sample/config.hpp"
#include "odebayes/target/target.hpp"

namespace odebayes {

/// Independent chains with disjoint RNG streams keyed by (seed, chain).
/// Warmup adapts the step size (dual averaging) and a windowed diagonal
/// mass matrix for HMC/NUTS, or the proposal scale for RWM/MH; everything
/// adapted is frozen for the sampling phase. Results are deterministic for
/// a given (seed, config) regardless of thread scheduling.
std::vector<ChainOutput> run_chains(const Target& target, const SamplerConfig& config);

/// The per-chain initial points run_chains would use.
std::vector<std::vector<double>> init_points(const Target& target, const SamplerConfig& config);

}  // namespace odebayes
