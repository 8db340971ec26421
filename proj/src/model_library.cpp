#include "odebayes/models/library.hpp"

#include <cmath>

namespace odebayes {

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "toy") return ModelKind::toy;
  if (s == "coral") return ModelKind::coral;
  if (s == "prostate") return ModelKind::prostate;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::toy: return "toy";
    case ModelKind::coral: return "coral";
    case ModelKind::prostate: return "prostate";
  }
  return "?";
}

namespace {

ParamSpec positive(const std::string& name, PriorDist prior) {
  return {name, 0.0, std::numeric_limits<double>::infinity(), prior};
}

Model make_toy() {
  Model m;
  m.name = "toy";
  m.group_prefix = "well";
  m.default_pooling = PoolingMode::complete;

  m.space = ParameterSpace({
      positive("p[1]", PriorDist::half_normal(1.0)),    // r1
      positive("p[2]", PriorDist::half_normal(1.0)),    // r2
      positive("p[3]", PriorDist::half_normal(10.0)),   // K
      positive("y0[1]", PriorDist::half_normal(10.0)),
      positive("y0[2]", PriorDist::half_normal(10.0)),
      positive("sigma", PriorDist::half_normal(1.0)),
  });
  m.xi_of_theta = {0, 1, 2, 3, 4};

  // Competition between two subpopulations with a shared carrying capacity.
  m.system = make_ode_system(2, 5, [](double, auto y, auto xi, double, auto dydt) {
    const auto r1 = xi[0], r2 = xi[1], K = xi[2];
    const auto crowd = 1.0 - (y[0] + y[1]) / K;
    dydt[0] = r1 * y[0] * crowd;
    dydt[1] = r2 * y[1] * crowd;
  });
  m.system.jacobians = [](double, std::span<const double> y, std::span<const double> xi,
                          double, Matrix& jy, Matrix& jxi) {
    const double r1 = xi[0], r2 = xi[1], K = xi[2];
    const double s = y[0] + y[1];
    const double crowd = 1.0 - s / K;
    jy(0, 0) = r1 * (crowd - y[0] / K);
    jy(0, 1) = -r1 * y[0] / K;
    jy(1, 0) = -r2 * y[1] / K;
    jy(1, 1) = r2 * (crowd - y[1] / K);
    jxi(0, 0) = y[0] * crowd;
    jxi(0, 1) = 0.0;
    jxi(0, 2) = r1 * y[0] * s / (K * K);
    jxi(0, 3) = 0.0;
    jxi(0, 4) = 0.0;
    jxi(1, 0) = 0.0;
    jxi(1, 1) = y[1] * crowd;
    jxi(1, 2) = r2 * y[1] * s / (K * K);
    jxi(1, 3) = 0.0;
    jxi(1, 4) = 0.0;
  };
  m.system.t0 = 0.0;
  m.system.y0.entries = {{0.0, 3}, {0.0, 4}};  // initial sizes are inferred

  m.obs.noise = ObservationModel::NoiseKind::additive;
  m.obs.sigma_index = 5;
  m.obs.channels = {{0}, {1}};
  return m;
}

Model make_coral(double c0, double b0) {
  Model m;
  m.name = "coral";
  m.group_prefix = "site";
  m.default_pooling = PoolingMode::complete;

  m.space = ParameterSpace({
      positive("alpha", PriorDist::half_normal(1.0)),
      positive("beta", PriorDist::half_normal(1.0)),
      positive("gamma", PriorDist::half_normal(1.0)),
      positive("mu", PriorDist::half_normal(1.0)),
      positive("sigma", PriorDist::half_normal(1.0)),
  });
  m.xi_of_theta = {0, 1, 2, 3};

  // Assimilating cover grows logistically in total cover, exchanges with
  // the bleaching state, and bleaching cover dies at rate mu.
  m.system = make_ode_system(2, 4, [](double, auto y, auto xi, double, auto dydt) {
    const auto alpha = xi[0], beta = xi[1], gamma = xi[2], mu = xi[3];
    const auto C = y[0], B = y[1];
    dydt[0] = alpha * C * (1.0 - (C + B)) - beta * C + gamma * B;
    dydt[1] = beta * C - gamma * B - mu * B;
  });
  m.system.jacobians = [](double, std::span<const double> y, std::span<const double> xi,
                          double, Matrix& jy, Matrix& jxi) {
    const double alpha = xi[0], beta = xi[1], gamma = xi[2], mu = xi[3];
    const double C = y[0], B = y[1];
    jy(0, 0) = alpha * (1.0 - (C + B)) - alpha * C - beta;
    jy(0, 1) = -alpha * C + gamma;
    jy(1, 0) = beta;
    jy(1, 1) = -gamma - mu;
    jxi(0, 0) = C * (1.0 - (C + B));
    jxi(0, 1) = -C;
    jxi(0, 2) = B;
    jxi(0, 3) = 0.0;
    jxi(1, 0) = 0.0;
    jxi(1, 1) = C;
    jxi(1, 2) = -B;
    jxi(1, 3) = -B;
  };
  m.system.t0 = 0.0;
  m.system.y0 = InitialState::fixed({c0, b0});

  m.obs.noise = ObservationModel::NoiseKind::additive;
  m.obs.sigma_index = 4;
  m.obs.channels = {{0, 1}};  // only total cover is observed
  return m;
}

Model make_prostate(double s0, double d0, double p0) {
  Model m;
  m.name = "prostate";
  m.group_prefix = "P";
  m.default_pooling = PoolingMode::none;

  m.space = ParameterSpace({
      {"p", 0.0, 1.0, PriorDist::uniform(0.0, 1.0)},
      positive("lambda", PriorDist::half_normal(1.0)),
      positive("alpha", PriorDist::half_normal(1.0)),
      positive("rho", PriorDist::half_normal(1.0)),
      positive("phi", PriorDist::half_normal(1.0)),
      positive("sigma", PriorDist::half_normal(1.0)),
      positive("sigma_prime", PriorDist::half_normal(1.0)),
  });
  m.xi_of_theta = {0, 1, 2, 3, 4};

  // Stem cells self-renew in proportion to their population share; the
  // treatment indicator switches decay of differentiated cells. The share
  // S/(S+D) is defined as 0 at S+D = 0, where both cell derivatives vanish.
  m.system = make_ode_system(3, 5, [](double, auto y, auto xi, double treat, auto dydt) {
    const auto p = xi[0], lambda = xi[1], alpha = xi[2], rho = xi[3], phi = xi[4];
    const auto S = y[0], D = y[1], P = y[2];
    const auto total = S + D;
    const auto frac = value_of(total) > 0.0 ? S / total : decltype(total)(0.0);
    dydt[0] = frac * p * lambda * S;
    dydt[1] = (1.0 - p * frac) * lambda * S - alpha * D * treat;
    dydt[2] = rho * D - phi * P;
  });
  m.system.jacobians = [](double, std::span<const double> y, std::span<const double> xi,
                          double treat, Matrix& jy, Matrix& jxi) {
    const double p = xi[0], lambda = xi[1], alpha = xi[2], rho = xi[3], phi = xi[4];
    const double S = y[0], D = y[1], P = y[2];
    const double total = S + D;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t k = 0; k < 3; ++k) jy(i, k) = 0.0;
      for (std::size_t k = 0; k < 5; ++k) jxi(i, k) = 0.0;
    }
    double q = 0.0, dq_dS = 0.0, dq_dD = 0.0;
    if (total > 0.0) {
      q = S / total;
      dq_dS = D / (total * total);
      dq_dD = -S / (total * total);
    }
    jy(0, 0) = p * lambda * (q + S * dq_dS);
    jy(0, 1) = p * lambda * S * dq_dD;
    jy(1, 0) = lambda * (1.0 - p * q) - p * lambda * S * dq_dS;
    jy(1, 1) = -p * lambda * S * dq_dD - alpha * treat;
    jy(2, 1) = rho;
    jy(2, 2) = -phi;
    jxi(0, 0) = lambda * S * q;
    jxi(0, 1) = p * S * q;
    jxi(1, 0) = -lambda * S * q;
    jxi(1, 1) = (1.0 - p * q) * S;
    jxi(1, 2) = -D * treat;
    jxi(2, 3) = D;
    jxi(2, 4) = -P;
  };
  m.system.t0 = 0.0;
  m.system.y0 = InitialState::fixed({s0, d0, p0});

  // P0 is anchored at the patient's first observed PSA value.
  m.y0_for_group = [](const OdeSystem& sys, const GroupSeries& g) {
    InitialState y0 = sys.y0;
    if (g.observations.cols() > 0) y0.entries[2] = {g.observations(0, 0), -1};
    return y0;
  };

  m.obs.noise = ObservationModel::NoiseKind::add_prop;
  m.obs.sigma_index = 5;
  m.obs.sigma_prime_index = 6;
  m.obs.channels = {{2}};  // PSA only
  return m;
}

double ic_or(const ModelOverrides& o, const std::string& key, double fallback) {
  auto it = o.initial_conditions.find(key);
  return it == o.initial_conditions.end() ? fallback : it->second;
}

}  // namespace

Model make_model(ModelKind kind, const ModelOverrides& overrides) {
  static const std::map<ModelKind, std::vector<std::string>> ic_keys = {
      {ModelKind::toy, {}},
      {ModelKind::coral, {"C0", "B0"}},
      {ModelKind::prostate, {"S0", "D0", "P0"}},
  };
  for (const auto& [key, value] : overrides.initial_conditions) {
    const auto& allowed = ic_keys.at(kind);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw UnknownOverrideError("model '" + to_string(kind) +
                                 "' has no initial condition '" + key + "'");
    (void)value;
  }

  Model m;
  switch (kind) {
    case ModelKind::toy:
      m = make_toy();
      break;
    case ModelKind::coral:
      m = make_coral(ic_or(overrides, "C0", 0.3), ic_or(overrides, "B0", 0.1));
      break;
    case ModelKind::prostate:
      m = make_prostate(ic_or(overrides, "S0", 0.1), ic_or(overrides, "D0", 1.0),
                        ic_or(overrides, "P0", 10.0));
      break;
  }

  for (const auto& [name, prior] : overrides.priors) {
    const int idx = m.space.index_of(name);
    if (idx < 0)
      throw UnknownOverrideError("model '" + m.name + "' has no parameter '" + name + "'");
    m.space.spec(idx).prior = prior;
  }
  if (overrides.pooling) m.default_pooling = *overrides.pooling;
  return m;
}

}  // namespace odebayes
