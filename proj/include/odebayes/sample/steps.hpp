#pragma once

#include <span>
#include <vector>

#include "odebayes/common/rng.hpp"
#include "odebayes/sample/chain_output.hpp"
#include "odebayes/target/target.hpp"

namespace odebayes {

/// Position with cached target value and gradient.
struct PhasePoint {
  std::vector<double> theta;
  std::vector<double> r;
  double logp = 0.0;
  std::vector<double> grad;
  bool failed = false;
};

struct StepResult {
  std::vector<double> theta;
  double logp = 0.0;
  DrawStats stats;
};

/// Metropolis proposal distribution for mh_step. sample() must consume the
/// generator identically to a Gaussian walk when symmetric, so that MH with
/// a symmetric proposal reproduces RWM draw for draw.
class Proposal {
 public:
  virtual ~Proposal() = default;
  virtual std::vector<double> sample(std::span<const double> theta, Rng& rng) const = 0;
  /// log q(to | from); may be -inf for unreachable moves.
  virtual double log_q(std::span<const double> to, std::span<const double> from) const = 0;
  virtual bool symmetric() const { return false; }
};

class GaussianWalkProposal : public Proposal {
 public:
  explicit GaussianWalkProposal(std::vector<double> sigma) : sigma_(std::move(sigma)) {}
  std::vector<double> sample(std::span<const double> theta, Rng& rng) const override;
  double log_q(std::span<const double> to, std::span<const double> from) const override;
  bool symmetric() const override { return true; }

 private:
  std::vector<double> sigma_;
};

/// One random-walk Metropolis transition; sigma is the effective per-
/// dimension proposal sd. current_logp caches logpi(theta).
StepResult rwm_step(const Target& target, std::span<const double> theta, double current_logp,
                    std::span<const double> sigma, Rng& rng);

StepResult mh_step(const Target& target, std::span<const double> theta, double current_logp,
                   const Proposal& proposal, Rng& rng);

/// One leapfrog update of (theta, r) with step eps under a diagonal mass
/// matrix: half-step momentum, full-step position, half-step momentum.
PhasePoint leapfrog(const Target& target, const PhasePoint& z, double eps,
                    std::span<const double> mass_diag);

double kinetic_energy(std::span<const double> r, std::span<const double> mass_diag);

struct HmcResult {
  std::vector<double> theta;
  double logp = 0.0;
  std::vector<double> grad;
  DrawStats stats;
};

/// Static HMC: momentum refresh, L leapfrog steps, Metropolis correction on
/// the Hamiltonian error. Divergence flagged when the energy error exceeds
/// delta.
HmcResult hmc_step(const Target& target, const PhasePoint& current, double eps, int n_steps,
                   std::span<const double> mass_diag, double delta, Rng& rng);

/// No-U-Turn step, slice-sampling formulation with recursive doubling and
/// progressive uniform selection among slice-valid states.
HmcResult nuts_step(const Target& target, const PhasePoint& current, double eps,
                    std::span<const double> mass_diag, int max_depth, double delta, Rng& rng);

}  // namespace odebayes
