#pragma once

#include <string>
#include <vector>

#include "odebayes/io/config.hpp"
#include "odebayes/model/dataset.hpp"
#include "odebayes/target/ode_target.hpp"

namespace odebayes {

/// Splits each group's observations at a treatment-cycle boundary derived
/// from its forcing schedule. "first cycle" ends where the second
/// on-interval starts; "exclude last cycle" cuts at the last on-interval
/// start. Groups keep their forcing and identity on both sides.
std::pair<Dataset, Dataset> split_holdout(const Dataset& full, HoldoutMode mode);

/// Group problems for a dataset slice with y0 and forcing anchored on the
/// full series, so holdout evaluation shares the training-time setup.
std::vector<GroupProblem> prepare_slice_problems(const Model& model, const Dataset& full,
                                                 const Dataset& slice);

int cmd_simulate(const RunConfig& config);
int cmd_fit(const RunConfig& config);
int cmd_predict(const RunConfig& config, const std::string& run_dir);
int cmd_loo(const std::vector<std::string>& run_dirs, const std::string& out_path);

}  // namespace odebayes
