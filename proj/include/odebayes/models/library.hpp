#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "odebayes/model/model.hpp"
#include "odebayes/model/prior.hpp"

namespace odebayes {

enum class ModelKind { toy, coral, prostate };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind kind);

class UnknownOverrideError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelOverrides {
  std::map<std::string, PriorDist> priors;
  std::map<std::string, double> initial_conditions;  // C0,B0 (coral); S0,D0,P0 (prostate)
  std::optional<PoolingMode> pooling;
};

/// Pre-wired model bundles:
///  - toy: two-species competition with shared carrying capacity, both
///    subpopulations observed, additive Gaussian noise, inferred initial
///    sizes; parameters p[1], p[2], p[3], y0[1], y0[2], sigma.
///  - coral: assimilating/bleaching cover fractions, observed as their sum,
///    additive Gaussian noise, fixed initial conditions from config.
///  - prostate: stem/differentiated cells plus PSA, treatment forcing,
///    observed PSA with additive-plus-proportional noise, P0 anchored at
///    each patient's first observation.
Model make_model(ModelKind kind, const ModelOverrides& overrides = {});

}  // namespace odebayes
