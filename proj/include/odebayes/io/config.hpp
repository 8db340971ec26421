#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "odebayes/models/library.hpp"
#include "odebayes/ode/system.hpp"
#include "odebayes/sample/config.hpp"
#include "odebayes/target/pooling.hpp"

namespace odebayes {

struct TimesSpec {
  double start = 0.0;
  double stop = 48.0;
  int count = 13;

  std::vector<double> grid() const;
};

enum class HoldoutMode { none, first_cycle_only, exclude_last_cycle };

/// Everything a run needs, loadable from one JSON file; a run is
/// reproducible from (config file, dataset files) alone. Environment
/// overrides: ODEBAYES_SEED and ODEBAYES_OUT only.
struct RunConfig {
  ModelKind model_kind = ModelKind::toy;
  ModelOverrides overrides;

  std::string data_path;
  std::string schedule_path;
  HoldoutMode holdout = HoldoutMode::none;

  PoolingStructure pooling;
  bool pooling_set = false;  // falls back to the model default when false

  SamplerConfig sampler;
  SolverConfig solver;

  std::string out_dir = "out";

  // simulate section
  std::map<std::string, double> truth;
  TimesSpec sim_times;
  int sim_groups = 6;
  std::vector<std::pair<double, double>> sim_schedule;  // shared on-intervals

  TimesSpec predict_times{0.0, 48.0, 101};

  std::string canonical_json;  // reserialized config, hashed into manifests
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text, const std::string& origin);

}  // namespace odebayes
