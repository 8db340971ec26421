#include "odebayes/target/ode_target.hpp"

#include <algorithm>
#include <cmath>

#include "odebayes/common/special.hpp"
#include "odebayes/ode/solver.hpp"

namespace odebayes {

namespace {

bool same_forcing(const ForcingSchedule& a, const ForcingSchedule& b) {
  return std::ranges::equal(a.breakpoints(), b.breakpoints()) &&
         std::ranges::equal(a.values(), b.values());
}

bool same_y0(const InitialState& a, const InitialState& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    if (a.entries[i].value != b.entries[i].value ||
        a.entries[i].xi_index != b.entries[i].xi_index)
      return false;
  return true;
}

}  // namespace

std::vector<GroupProblem> prepare_groups(const Model& model, const Dataset& dataset) {
  if (!dataset.groups.empty() && dataset.n_channels() != model.n_channels())
    throw DimensionMismatchError("dataset channels (" + std::to_string(dataset.n_channels()) +
                                 ") do not match model channels (" +
                                 std::to_string(model.n_channels()) + ")");
  std::vector<GroupProblem> out;
  for (const auto& g : dataset.groups) {
    GroupProblem p;
    p.id = g.id;
    p.times = g.times;
    p.observations = g.observations;
    p.forcing = g.forcing;
    p.y0 = model.initial_state_for(g);
    out.push_back(std::move(p));
  }
  return out;
}

OdeTarget::OdeTarget(Model model, std::vector<GroupProblem> groups, PoolingStructure pooling,
                     SolverConfig solver)
    : model_(std::make_shared<Model>(std::move(model))),
      groups_(std::move(groups)),
      pooling_(std::move(pooling)),
      solver_(solver) {
  const auto& space = model_->space;
  n_ = space.n();

  for (const auto& g : groups_) {
    if (static_cast<int>(g.observations.rows()) != model_->n_channels())
      throw DimensionMismatchError("group " + g.id + ": channel count mismatch");
    if (g.observations.cols() != g.times.size())
      throw DimensionMismatchError("group " + g.id + ": observation/time count mismatch");
  }

  if (pooling_.mode == PoolingMode::complete) {
    for (int i = 0; i < n_; ++i) shared_.push_back(i);
  } else {
    std::vector<bool> is_pooled(n_, pooling_.group_params.empty());
    for (const auto& name : pooling_.group_params) {
      const int idx = space.index_of(name);
      if (idx < 0) throw DimensionMismatchError("unknown group parameter '" + name + "'");
      is_pooled[idx] = true;
    }
    for (int i = 0; i < n_; ++i) (is_pooled[i] ? pooled_ : shared_).push_back(i);
  }

  if (pooling_.mode == PoolingMode::partial)
    for (int p : pooled_) hyper_.push_back(pooling_.hyper_for(space.spec(p).name));

  const int n_pooled = static_cast<int>(pooled_.size());
  hyper_base_ = static_cast<int>(shared_.size());
  group_base_ = hyper_base_ + (pooling_.mode == PoolingMode::partial ? 2 * n_pooled : 0);
  dim_ = group_base_ + static_cast<int>(groups_.size()) * n_pooled;

  systems_.reserve(groups_.size());
  for (const auto& g : groups_) {
    OdeSystem sys = model_->system;
    sys.y0 = g.y0;
    systems_.push_back(std::move(sys));
    for (std::size_t i = 0; i < g.times.size(); ++i)
      for (int ch = 0; ch < model_->n_channels(); ++ch)
        labels_.push_back({g.id, g.times[i], ch});
  }

  groups_share_problem_ = pooling_.mode == PoolingMode::complete && groups_.size() > 1;
  for (std::size_t g = 1; groups_share_problem_ && g < groups_.size(); ++g)
    groups_share_problem_ = groups_[g].times == groups_[0].times &&
                            same_forcing(groups_[g].forcing, groups_[0].forcing) &&
                            same_y0(groups_[g].y0, groups_[0].y0);
}

void OdeTarget::assemble_group_u(std::span<const double> v, int g,
                                 std::span<double> theta_u_g) const {
  for (std::size_t k = 0; k < shared_.size(); ++k) theta_u_g[shared_[k]] = v[coord_shared(k)];
  for (std::size_t k = 0; k < pooled_.size(); ++k) {
    const int p = pooled_[k];
    switch (pooling_.mode) {
      case PoolingMode::none:
        theta_u_g[p] = v[coord_group(g, k)];
        break;
      case PoolingMode::partial:
        if (pooling_.centered) {
          theta_u_g[p] = v[coord_group(g, k)];
        } else {
          const double sigma = std::exp(v[coord_s(k)]);
          theta_u_g[p] = v[coord_mu(k)] + sigma * v[coord_group(g, k)];
        }
        break;
      case PoolingMode::complete:
        break;
    }
  }
}

double OdeTarget::prior_and_jacobian(std::span<const double> v,
                                     std::vector<double>* grad) const {
  const auto& space = model_->space;
  double total = 0.0;

  auto constrained_prior = [&](int p, int coord) {
    const double u = v[coord];
    const double c = space.constrain_coord(p, u);
    total += space.spec(p).prior.logpdf(c) + space.logjac_coord(p, u);
    if (grad)
      (*grad)[coord] += space.spec(p).prior.dlogpdf(c) * space.dconstrain_du(p, u) +
                        space.dlogjac_du(p, u);
  };

  for (std::size_t k = 0; k < shared_.size(); ++k)
    constrained_prior(shared_[k], coord_shared(k));

  if (pooling_.mode == PoolingMode::none) {
    for (int g = 0; g < n_groups(); ++g)
      for (std::size_t k = 0; k < pooled_.size(); ++k)
        constrained_prior(pooled_[k], coord_group(g, k));
  } else if (pooling_.mode == PoolingMode::partial) {
    static const double log_sqrt_2pi = 0.9189385332046727;
    for (std::size_t k = 0; k < pooled_.size(); ++k) {
      const auto& h = hyper_[k];
      const double mu = v[coord_mu(k)];
      const double s = v[coord_s(k)];
      const double sigma = std::exp(s);
      // mu ~ Normal(loc, scale) on the unconstrained scale.
      const double zm = (mu - h.mu_loc) / h.mu_scale;
      total += -0.5 * zm * zm - std::log(h.mu_scale) - log_sqrt_2pi;
      // sigma ~ HalfNormal(scale), sampled through s = log sigma.
      const double zs = sigma / h.sigma_scale;
      total += std::log(2.0) - 0.5 * zs * zs - std::log(h.sigma_scale) - log_sqrt_2pi + s;
      if (grad) {
        (*grad)[coord_mu(k)] += -zm / h.mu_scale;
        (*grad)[coord_s(k)] += -zs * zs + 1.0;
      }
      for (int g = 0; g < n_groups(); ++g) {
        const double x = v[coord_group(g, k)];
        if (pooling_.centered) {
          const double z = (x - mu) / sigma;
          total += -0.5 * z * z - s - log_sqrt_2pi;
          if (grad) {
            (*grad)[coord_group(g, k)] += -z / sigma;
            (*grad)[coord_mu(k)] += z / sigma;
            (*grad)[coord_s(k)] += z * z - 1.0;
          }
        } else {
          total += -0.5 * x * x - log_sqrt_2pi;
          if (grad) (*grad)[coord_group(g, k)] += -x;
        }
      }
    }
  }
  return total;
}

const Trajectory* OdeTarget::maybe_shared_solve(std::span<const double> v, bool with_sens,
                                                std::optional<Trajectory>& storage) const {
  if (!groups_share_problem_ || groups_.empty()) return nullptr;
  std::vector<double> theta_u_g(n_);
  assemble_group_u(v, 0, theta_u_g);
  std::vector<double> theta_c(n_);
  for (int p = 0; p < n_; ++p) {
    theta_c[p] = model_->space.constrain_coord(p, theta_u_g[p]);
    if (!std::isfinite(theta_c[p])) return nullptr;  // group_loglik handles it
  }
  const auto xi = model_->xi_from_theta(theta_c);
  storage = with_sens
                ? solve_with_sensitivities(systems_[0], xi, groups_[0].times, solver_,
                                           groups_[0].forcing)
                : solve(systems_[0], xi, groups_[0].times, solver_, groups_[0].forcing);
  return &*storage;
}

bool OdeTarget::group_loglik(std::span<const double> v, int g, const Trajectory* shared_traj,
                             bool with_grad, double& loglik, std::vector<double>* pointwise,
                             std::vector<double>* grad) const {
  const auto& space = model_->space;
  const auto& obs = model_->obs;
  const auto& group = groups_[g];
  const int n_xi = static_cast<int>(model_->xi_of_theta.size());

  std::vector<double> theta_u_g(n_), theta_c(n_);
  assemble_group_u(v, g, theta_u_g);
  bool finite_theta = true;
  for (int p = 0; p < n_; ++p) {
    theta_c[p] = space.constrain_coord(p, theta_u_g[p]);
    finite_theta = finite_theta && std::isfinite(theta_c[p]);
  }
  if (!finite_theta) {
    // constrained overflow (e.g. exp of a huge coordinate): density zero
    loglik = -std::numeric_limits<double>::infinity();
    if (pointwise)
      pointwise->insert(pointwise->end(),
                        group.times.size() * model_->n_channels(),
                        -std::numeric_limits<double>::infinity());
    return true;
  }
  const auto xi = model_->xi_from_theta(theta_c);

  const Trajectory* traj = shared_traj;
  std::optional<Trajectory> own;
  if (!traj) {
    try {
      own = with_grad ? solve_with_sensitivities(systems_[g], xi, group.times, solver_,
                                                 group.forcing)
                      : solve(systems_[g], xi, group.times, solver_, group.forcing);
    } catch (const SolverError&) {
      return false;
    }
    traj = &*own;
  }

  double ll_total = 0.0;
  bool dead = false;  // a -inf term: density is zero, gradient moot
  std::vector<double> g_c(with_grad ? n_ : 0, 0.0);

  for (std::size_t i = 0; i < group.times.size(); ++i) {
    const auto state = traj->states.row(i);
    for (int ch = 0; ch < obs.n_channels(); ++ch) {
      const double mu = obs.channel_mean(state, ch);
      const double y = group.observations(ch, i);
      const double ll = obs.loglik(y, mu, theta_c);
      ll_total += ll;
      if (pointwise) pointwise->push_back(ll);
      if (!std::isfinite(ll)) {
        dead = true;
        continue;
      }
      if (with_grad && !dead) {
        const auto parts = obs.dloglik(y, mu, theta_c);
        const Matrix& sens = traj->sensitivities[i];
        for (int j = 0; j < n_xi; ++j) {
          double dmu = 0.0;
          for (int s : obs.channels[ch]) dmu += sens(s, j);
          g_c[model_->xi_of_theta[j]] += parts.d_mu * dmu;
        }
        g_c[obs.sigma_index] += parts.d_sigma;
        if (obs.sigma_prime_index >= 0) g_c[obs.sigma_prime_index] += parts.d_sigma_prime;
      }
    }
  }

  loglik = ll_total;
  if (!with_grad || dead) return true;

  for (std::size_t k = 0; k < shared_.size(); ++k) {
    const int p = shared_[k];
    (*grad)[coord_shared(k)] += g_c[p] * space.dconstrain_du(p, v[coord_shared(k)]);
  }
  for (std::size_t k = 0; k < pooled_.size(); ++k) {
    const int p = pooled_[k];
    const double du = g_c[p] * space.dconstrain_du(p, theta_u_g[p]);
    switch (pooling_.mode) {
      case PoolingMode::none:
        (*grad)[coord_group(g, k)] += du;
        break;
      case PoolingMode::partial:
        if (pooling_.centered) {
          (*grad)[coord_group(g, k)] += du;
        } else {
          const double sigma = std::exp(v[coord_s(k)]);
          const double z = v[coord_group(g, k)];
          (*grad)[coord_mu(k)] += du;
          (*grad)[coord_s(k)] += du * sigma * z;
          (*grad)[coord_group(g, k)] += du * sigma;
        }
        break;
      case PoolingMode::complete:
        break;
    }
  }
  return true;
}

EvalRecord OdeTarget::eval(std::span<const double> theta_u) const {
  EvalRecord rec;
  rec.gradient.assign(dim_, 0.0);
  double logp = prior_and_jacobian(theta_u, &rec.gradient);

  std::optional<Trajectory> storage;
  const Trajectory* shared_traj = nullptr;
  try {
    shared_traj = maybe_shared_solve(theta_u, true, storage);
  } catch (const SolverError&) {
    rec.value = -std::numeric_limits<double>::infinity();
    rec.gradient.assign(dim_, 0.0);
    rec.numeric_failure = true;
    return rec;
  }

  for (int g = 0; g < n_groups(); ++g) {
    double ll = 0.0;
    if (!group_loglik(theta_u, g, shared_traj, true, ll, nullptr, &rec.gradient)) {
      rec.value = -std::numeric_limits<double>::infinity();
      rec.gradient.assign(dim_, 0.0);
      rec.numeric_failure = true;
      return rec;
    }
    logp += ll;
  }

  rec.value = logp;
  if (!std::isfinite(rec.value)) rec.gradient.assign(dim_, 0.0);
  return rec;
}

double OdeTarget::eval_value(std::span<const double> theta_u) const {
  double logp = prior_and_jacobian(theta_u, nullptr);
  std::optional<Trajectory> storage;
  const Trajectory* shared_traj = nullptr;
  try {
    shared_traj = maybe_shared_solve(theta_u, false, storage);
  } catch (const SolverError&) {
    return -std::numeric_limits<double>::infinity();
  }
  for (int g = 0; g < n_groups(); ++g) {
    double ll = 0.0;
    if (!group_loglik(theta_u, g, shared_traj, false, ll, nullptr, nullptr))
      return -std::numeric_limits<double>::infinity();
    logp += ll;
  }
  return logp;
}

std::optional<std::vector<double>> OdeTarget::pointwise_loglik(
    std::span<const double> theta_u) const {
  std::vector<double> terms;
  terms.reserve(labels_.size());
  std::optional<Trajectory> storage;
  const Trajectory* shared_traj = nullptr;
  try {
    shared_traj = maybe_shared_solve(theta_u, false, storage);
  } catch (const SolverError&) {
    return std::nullopt;
  }
  for (int g = 0; g < n_groups(); ++g) {
    double ll = 0.0;
    if (!group_loglik(theta_u, g, shared_traj, false, ll, &terms, nullptr))
      return std::nullopt;
  }
  return terms;
}

OdeTarget::Decomposition OdeTarget::decompose(std::span<const double> theta_u) const {
  Decomposition d;
  const auto& space = model_->space;

  // Same terms as prior_and_jacobian, split into prior and jacobian parts.
  for (std::size_t k = 0; k < shared_.size(); ++k) {
    const int p = shared_[k];
    const double u = theta_u[coord_shared(k)];
    d.log_prior += space.spec(p).prior.logpdf(space.constrain_coord(p, u));
    d.log_jacobian += space.logjac_coord(p, u);
  }
  if (pooling_.mode == PoolingMode::none) {
    for (int g = 0; g < n_groups(); ++g)
      for (std::size_t k = 0; k < pooled_.size(); ++k) {
        const int p = pooled_[k];
        const double u = theta_u[coord_group(g, k)];
        d.log_prior += space.spec(p).prior.logpdf(space.constrain_coord(p, u));
        d.log_jacobian += space.logjac_coord(p, u);
      }
  } else if (pooling_.mode == PoolingMode::partial) {
    static const double log_sqrt_2pi = 0.9189385332046727;
    for (std::size_t k = 0; k < pooled_.size(); ++k) {
      const auto& h = hyper_[k];
      const double mu = theta_u[coord_mu(k)];
      const double s = theta_u[coord_s(k)];
      const double sigma = std::exp(s);
      const double zm = (mu - h.mu_loc) / h.mu_scale;
      d.log_prior += -0.5 * zm * zm - std::log(h.mu_scale) - log_sqrt_2pi;
      const double zs = sigma / h.sigma_scale;
      d.log_prior += std::log(2.0) - 0.5 * zs * zs - std::log(h.sigma_scale) - log_sqrt_2pi;
      d.log_jacobian += s;
      for (int g = 0; g < n_groups(); ++g) {
        const double x = theta_u[coord_group(g, k)];
        if (pooling_.centered) {
          const double z = (x - mu) / sigma;
          d.log_prior += -0.5 * z * z - s - log_sqrt_2pi;
        } else {
          d.log_prior += -0.5 * x * x - log_sqrt_2pi;
        }
      }
    }
  }

  auto terms = pointwise_loglik(theta_u);
  if (!terms) {
    d.numeric_failure = true;
    return d;
  }
  d.pointwise = std::move(*terms);
  return d;
}

std::vector<double> OdeTarget::group_theta_c(std::span<const double> theta_u, int group) const {
  std::vector<double> theta_u_g(n_), theta_c(n_);
  assemble_group_u(theta_u, group, theta_u_g);
  for (int p = 0; p < n_; ++p) theta_c[p] = model_->space.constrain_coord(p, theta_u_g[p]);
  return theta_c;
}

std::vector<std::string> OdeTarget::coord_names() const {
  const auto& space = model_->space;
  std::vector<std::string> names(dim_);
  for (std::size_t k = 0; k < shared_.size(); ++k)
    names[coord_shared(k)] = space.spec(shared_[k]).name;
  if (pooling_.mode == PoolingMode::partial)
    for (std::size_t k = 0; k < pooled_.size(); ++k) {
      names[coord_mu(k)] = space.spec(pooled_[k]).name + ".mu";
      names[coord_s(k)] = space.spec(pooled_[k]).name + ".tau";
    }
  for (int g = 0; g < n_groups(); ++g)
    for (std::size_t k = 0; k < pooled_.size(); ++k) {
      const std::string& base = space.spec(pooled_[k]).name;
      const std::string& gid = groups_[g].id;
      names[coord_group(g, k)] =
          (pooling_.mode == PoolingMode::partial && !pooling_.centered)
              ? base + ".z[" + gid + "]"
              : base + "[" + gid + "]";
    }
  return names;
}

std::vector<double> OdeTarget::to_constrained(std::span<const double> theta_u) const {
  const auto& space = model_->space;
  std::vector<double> out(theta_u.begin(), theta_u.end());
  for (std::size_t k = 0; k < shared_.size(); ++k)
    out[coord_shared(k)] = space.constrain_coord(shared_[k], theta_u[coord_shared(k)]);
  if (pooling_.mode == PoolingMode::partial)
    for (std::size_t k = 0; k < pooled_.size(); ++k)
      out[coord_s(k)] = std::exp(theta_u[coord_s(k)]);
  const bool group_is_param =
      pooling_.mode == PoolingMode::none ||
      (pooling_.mode == PoolingMode::partial && pooling_.centered);
  if (group_is_param)
    for (int g = 0; g < n_groups(); ++g)
      for (std::size_t k = 0; k < pooled_.size(); ++k)
        out[coord_group(g, k)] =
            space.constrain_coord(pooled_[k], theta_u[coord_group(g, k)]);
  return out;
}

std::unique_ptr<OdeTarget> build_target(const Model& model, const Dataset& dataset,
                                        const PoolingStructure& pooling,
                                        const SolverConfig& solver) {
  return std::make_unique<OdeTarget>(model, prepare_groups(model, dataset), pooling, solver);
}

std::unique_ptr<OdeTarget> build_target(const Model& model, std::vector<GroupProblem> groups,
                                        const PoolingStructure& pooling,
                                        const SolverConfig& solver) {
  return std::make_unique<OdeTarget>(model, std::move(groups), pooling, solver);
}

}  // namespace odebayes
