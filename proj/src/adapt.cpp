#include "odebayes/sample/adapt.hpp"

#include <algorithm>

namespace odebayes {

WarmupSchedule WarmupSchedule::build(int n_warmup, bool adapt_mass) {
  WarmupSchedule s;
  if (!adapt_mass || n_warmup < 40) {
    s.init_end = n_warmup;
    s.term_start = n_warmup;
    return s;
  }
  s.init_end = static_cast<int>(0.15 * n_warmup);
  s.term_start = n_warmup - static_cast<int>(0.10 * n_warmup);
  int start = s.init_end;
  int size = 25;
  while (start < s.term_start) {
    int end = start + size;
    // absorb a remainder too short for the next doubling
    if (end + 2 * size > s.term_start) end = s.term_start;
    s.window_ends.push_back(std::min(end, s.term_start));
    start = end;
    size *= 2;
  }
  return s;
}

double find_initial_step(const Target& target, const PhasePoint& z0,
                         std::span<const double> mass_diag, Rng& rng) {
  const std::size_t d = z0.theta.size();
  PhasePoint z = z0;
  z.r.resize(d);
  for (std::size_t i = 0; i < d; ++i) z.r[i] = std::sqrt(mass_diag[i]) * rng.normal();
  const double joint0 = z.logp - kinetic_energy(z.r, mass_diag);

  double eps = 1.0;
  auto log_ratio = [&](double step) {
    const PhasePoint z1 = leapfrog(target, z, step, mass_diag);
    if (z1.failed) return -std::numeric_limits<double>::infinity();
    return (z1.logp - kinetic_energy(z1.r, mass_diag)) - joint0;
  };

  double ratio = log_ratio(eps);
  const double dir = ratio > std::log(0.5) ? 1.0 : -1.0;
  for (int iter = 0; iter < 100; ++iter) {
    if (dir > 0 && !(ratio > std::log(0.5))) break;
    if (dir < 0 && !(ratio < std::log(0.5))) break;
    eps *= dir > 0 ? 2.0 : 0.5;
    if (eps > 1e7 || eps < 1e-10) break;
    ratio = log_ratio(eps);
  }
  return eps;
}

std::vector<double> init_point(const Target& target, Rng& rng) {
  const int d = target.dim();
  std::vector<double> theta(d);
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (auto& x : theta) x = -2.0 + 4.0 * rng.uniform();
    const auto rec = target.eval(theta);
    if (!std::isfinite(rec.value) || rec.numeric_failure) continue;
    bool grad_ok = true;
    for (double g : rec.gradient) grad_ok = grad_ok && std::isfinite(g);
    if (grad_ok) return theta;
  }
  throw InitFailure("no finite initial point found in 100 draws");
}

}  // namespace odebayes
