#include "odebayes/sample/steps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace odebayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double accept_prob_from_log(double log_ratio) {
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

}  // namespace

std::vector<double> GaussianWalkProposal::sample(std::span<const double> theta,
                                                 Rng& rng) const {
  std::vector<double> out(theta.begin(), theta.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += sigma_[i] * rng.normal();
  return out;
}

double GaussianWalkProposal::log_q(std::span<const double> to,
                                   std::span<const double> from) const {
  double lp = 0.0;
  for (std::size_t i = 0; i < to.size(); ++i) {
    const double z = (to[i] - from[i]) / sigma_[i];
    lp += -0.5 * z * z - std::log(sigma_[i]);
  }
  return lp;
}

StepResult rwm_step(const Target& target, std::span<const double> theta, double current_logp,
                    std::span<const double> sigma, Rng& rng) {
  std::vector<double> proposal(theta.begin(), theta.end());
  for (std::size_t i = 0; i < proposal.size(); ++i) proposal[i] += sigma[i] * rng.normal();
  const double proposed_logp = target.eval_value(proposal);
  const double u = rng.uniform();

  StepResult out;
  const double alpha =
      proposed_logp == kNegInf ? 0.0 : accept_prob_from_log(proposed_logp - current_logp);
  out.stats.accept_prob = alpha;
  if (u < alpha) {
    out.theta = std::move(proposal);
    out.logp = proposed_logp;
  } else {
    out.theta.assign(theta.begin(), theta.end());
    out.logp = current_logp;
  }
  out.stats.energy = -out.logp;
  return out;
}

StepResult mh_step(const Target& target, std::span<const double> theta, double current_logp,
                   const Proposal& proposal, Rng& rng) {
  auto proposed = proposal.sample(theta, rng);
  const double proposed_logp = target.eval_value(proposed);
  const double u = rng.uniform();

  double log_ratio = proposed_logp - current_logp;
  if (!proposal.symmetric()) {
    const double q_fwd = proposal.log_q(proposed, theta);
    const double q_rev = proposal.log_q(theta, proposed);
    if (q_rev == kNegInf)
      log_ratio = kNegInf;  // irreversible move
    else
      log_ratio += q_rev - q_fwd;
  }

  StepResult out;
  const double alpha = proposed_logp == kNegInf ? 0.0 : accept_prob_from_log(log_ratio);
  out.stats.accept_prob = alpha;
  if (u < alpha) {
    out.theta = std::move(proposed);
    out.logp = proposed_logp;
  } else {
    out.theta.assign(theta.begin(), theta.end());
    out.logp = current_logp;
  }
  out.stats.energy = -out.logp;
  return out;
}

double kinetic_energy(std::span<const double> r, std::span<const double> mass_diag) {
  double k = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) k += r[i] * r[i] / mass_diag[i];
  return 0.5 * k;
}

PhasePoint leapfrog(const Target& target, const PhasePoint& z, double eps,
                    std::span<const double> mass_diag) {
  PhasePoint out;
  const std::size_t d = z.theta.size();
  out.r.resize(d);
  out.theta.resize(d);
  for (std::size_t i = 0; i < d; ++i) out.r[i] = z.r[i] + 0.5 * eps * z.grad[i];
  for (std::size_t i = 0; i < d; ++i) out.theta[i] = z.theta[i] + eps * out.r[i] / mass_diag[i];
  const auto rec = target.eval(out.theta);
  out.logp = rec.value;
  out.grad = rec.gradient;
  out.failed = rec.numeric_failure || !std::isfinite(rec.value);
  if (!out.failed)
    for (std::size_t i = 0; i < d; ++i) out.r[i] += 0.5 * eps * out.grad[i];
  return out;
}

namespace {

bool uturn(const PhasePoint& minus, const PhasePoint& plus,
           std::span<const double> mass_diag) {
  double dot_minus = 0.0, dot_plus = 0.0;
  for (std::size_t i = 0; i < minus.theta.size(); ++i) {
    const double dtheta = plus.theta[i] - minus.theta[i];
    dot_minus += dtheta * minus.r[i] / mass_diag[i];
    dot_plus += dtheta * plus.r[i] / mass_diag[i];
  }
  return dot_minus < 0.0 || dot_plus < 0.0;
}

double joint_logp(const PhasePoint& z, std::span<const double> mass_diag) {
  if (z.failed) return kNegInf;
  return z.logp - kinetic_energy(z.r, mass_diag);
}

struct TreeState {
  PhasePoint minus, plus;
  std::vector<double> sample_theta;
  double sample_logp = 0.0;
  std::vector<double> sample_grad;
  double sample_joint = kNegInf;
  double n_valid = 0.0;
  bool keep_going = true;
  bool divergent = false;
  double sum_accept = 0.0;
  long n_states = 0;
  long n_leapfrog = 0;
};

TreeState build_tree(const Target& target, const PhasePoint& z, double logu, int dir,
                     int depth, double eps, std::span<const double> mass_diag, double delta,
                     double joint0, Rng& rng) {
  if (depth == 0) {
    TreeState leaf;
    PhasePoint z1 = leapfrog(target, z, dir * eps, mass_diag);
    const double joint = joint_logp(z1, mass_diag);
    leaf.n_leapfrog = 1;
    leaf.n_states = 1;
    leaf.sum_accept += std::min(1.0, std::exp(joint - joint0));
    leaf.n_valid = logu <= joint ? 1.0 : 0.0;
    leaf.divergent = !(logu < joint + delta);
    leaf.keep_going = !leaf.divergent;
    leaf.sample_theta = z1.theta;
    leaf.sample_logp = z1.logp;
    leaf.sample_grad = z1.grad;
    leaf.sample_joint = joint;
    leaf.minus = std::move(z1);
    leaf.plus = leaf.minus;
    return leaf;
  }

  TreeState left = build_tree(target, z, logu, dir, depth - 1, eps, mass_diag, delta,
                              joint0, rng);
  if (!left.keep_going) return left;

  const PhasePoint& edge = dir > 0 ? left.plus : left.minus;
  TreeState right = build_tree(target, edge, logu, dir, depth - 1, eps, mass_diag, delta,
                               joint0, rng);

  TreeState tree;
  tree.minus = dir > 0 ? left.minus : right.minus;
  tree.plus = dir > 0 ? right.plus : left.plus;
  tree.n_valid = left.n_valid + right.n_valid;
  tree.n_leapfrog = left.n_leapfrog + right.n_leapfrog;
  tree.n_states = left.n_states + right.n_states;
  tree.sum_accept = left.sum_accept + right.sum_accept;
  tree.divergent = left.divergent || right.divergent;

  const bool take_right =
      right.keep_going && tree.n_valid > 0.0 && rng.uniform() < right.n_valid / tree.n_valid;
  const TreeState& pick = take_right ? right : left;
  tree.sample_theta = pick.sample_theta;
  tree.sample_logp = pick.sample_logp;
  tree.sample_grad = pick.sample_grad;
  tree.sample_joint = pick.sample_joint;

  tree.keep_going = right.keep_going && !uturn(tree.minus, tree.plus, mass_diag);
  return tree;
}

}  // namespace

HmcResult hmc_step(const Target& target, const PhasePoint& current, double eps, int n_steps,
                   std::span<const double> mass_diag, double delta, Rng& rng) {
  const std::size_t d = current.theta.size();
  PhasePoint z = current;
  z.r.resize(d);
  for (std::size_t i = 0; i < d; ++i) z.r[i] = std::sqrt(mass_diag[i]) * rng.normal();
  const double h0 = -current.logp + kinetic_energy(z.r, mass_diag);

  PhasePoint end = z;
  for (int step = 0; step < n_steps && !end.failed; ++step)
    end = leapfrog(target, end, eps, mass_diag);

  const double h1 = end.failed ? std::numeric_limits<double>::infinity()
                               : -end.logp + kinetic_energy(end.r, mass_diag);
  const double u = rng.uniform();

  HmcResult out;
  out.stats.n_leapfrog = n_steps;
  out.stats.divergent = h1 - h0 > delta;
  const double alpha = std::isfinite(h1) ? accept_prob_from_log(h0 - h1) : 0.0;
  out.stats.accept_prob = alpha;
  if (!out.stats.divergent && u < alpha) {
    out.theta = std::move(end.theta);
    out.logp = end.logp;
    out.grad = std::move(end.grad);
    out.stats.energy = h1;
  } else {
    out.theta = current.theta;
    out.logp = current.logp;
    out.grad = current.grad;
    out.stats.energy = h0;
  }
  return out;
}

HmcResult nuts_step(const Target& target, const PhasePoint& current, double eps,
                    std::span<const double> mass_diag, int max_depth, double delta, Rng& rng) {
  const std::size_t d = current.theta.size();
  PhasePoint z = current;
  z.r.resize(d);
  for (std::size_t i = 0; i < d; ++i) z.r[i] = std::sqrt(mass_diag[i]) * rng.normal();
  const double joint0 = joint_logp(z, mass_diag);
  // Slice variable: u ~ Uniform(0, exp(joint0)), kept in log space.
  const double logu = joint0 - rng.exponential();

  PhasePoint minus = z, plus = z;
  std::vector<double> sample_theta = current.theta;
  double sample_logp = current.logp;
  std::vector<double> sample_grad = current.grad;
  double sample_joint = joint0;
  double n_valid = 1.0;
  bool keep_going = true;
  bool divergent = false;
  double sum_accept = 0.0;
  long n_states = 0, n_leapfrog = 0;
  int depth = 0;

  while (keep_going && depth < max_depth) {
    const int dir = rng.coin() ? 1 : -1;
    TreeState subtree = build_tree(target, dir > 0 ? plus : minus, logu, dir, depth, eps,
                                   mass_diag, delta, joint0, rng);
    n_leapfrog += subtree.n_leapfrog;
    n_states += subtree.n_states;
    sum_accept += subtree.sum_accept;
    divergent = divergent || subtree.divergent;

    if (subtree.keep_going && subtree.n_valid > 0.0 &&
        rng.uniform() < std::min(1.0, subtree.n_valid / n_valid)) {
      sample_theta = subtree.sample_theta;
      sample_logp = subtree.sample_logp;
      sample_grad = subtree.sample_grad;
      sample_joint = subtree.sample_joint;
    }
    n_valid += subtree.n_valid;
    if (dir > 0)
      plus = std::move(subtree.plus);
    else
      minus = std::move(subtree.minus);

    keep_going = subtree.keep_going && !uturn(minus, plus, mass_diag);
    ++depth;
  }

  HmcResult out;
  out.theta = std::move(sample_theta);
  out.logp = sample_logp;
  out.grad = std::move(sample_grad);
  out.stats.divergent = divergent;
  out.stats.tree_depth = depth;
  out.stats.n_leapfrog = n_leapfrog;
  out.stats.accept_prob = n_states > 0 ? sum_accept / static_cast<double>(n_states) : 0.0;
  out.stats.energy = -sample_joint;
  return out;
}

}  // namespace odebayes
