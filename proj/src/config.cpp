#include "odebayes/io/config.hpp"

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace odebayes {

using nlohmann::json;

std::vector<double> TimesSpec::grid() const {
  if (count < 1) throw ConfigError("time grid count must be >= 1");
  if (count == 1) return {start};
  if (!(stop > start)) throw ConfigError("time grid stop must exceed start");
  std::vector<double> ts(count);
  for (int i = 0; i < count; ++i)
    ts[i] = start + (stop - start) * static_cast<double>(i) / (count - 1);
  return ts;
}

namespace {

PriorDist parse_prior(const json& j, const std::string& name) {
  const std::string type = j.at("type").get<std::string>();
  auto num = [&](const char* key) { return j.at(key).get<double>(); };
  if (type == "normal") return PriorDist::normal(num("loc"), num("scale"));
  if (type == "half_normal") return PriorDist::half_normal(num("scale"));
  if (type == "log_normal") return PriorDist::log_normal(num("loc"), num("scale"));
  if (type == "uniform") return PriorDist::uniform(num("lower"), num("upper"));
  if (type == "exponential") return PriorDist::exponential(num("rate"));
  if (type == "flat") return PriorDist::flat();
  throw ConfigError("prior for '" + name + "': unknown type '" + type + "'");
}

TimesSpec parse_times(const json& j) {
  TimesSpec t;
  t.start = j.value("start", 0.0);
  t.stop = j.value("stop", 48.0);
  t.count = j.value("count", 13);
  return t;
}

HoldoutMode parse_holdout(const std::string& s) {
  if (s == "none") return HoldoutMode::none;
  if (s == "first_cycle_only") return HoldoutMode::first_cycle_only;
  if (s == "exclude_last_cycle") return HoldoutMode::exclude_last_cycle;
  throw ConfigError("unknown holdout mode '" + s + "'");
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  RunConfig cfg;
  if (j.contains("model")) {
    const auto& m = j["model"];
    cfg.model_kind = model_kind_from_string(m.value("kind", std::string("toy")));
    if (m.contains("priors"))
      for (auto& [name, spec] : m["priors"].items())
        cfg.overrides.priors.emplace(name, parse_prior(spec, name));
    if (m.contains("initial_conditions"))
      for (auto& [name, v] : m["initial_conditions"].items())
        cfg.overrides.initial_conditions.emplace(name, v.get<double>());
  }

  if (j.contains("data")) {
    const auto& d = j["data"];
    cfg.data_path = d.value("path", std::string());
    cfg.schedule_path = d.value("schedule", std::string());
    cfg.holdout = parse_holdout(d.value("holdout", std::string("none")));
  }

  if (j.contains("pooling")) {
    const auto& p = j["pooling"];
    cfg.pooling_set = true;
    const std::string mode = p.value("mode", std::string("complete"));
    if (mode == "complete")
      cfg.pooling.mode = PoolingMode::complete;
    else if (mode == "none")
      cfg.pooling.mode = PoolingMode::none;
    else if (mode == "partial")
      cfg.pooling.mode = PoolingMode::partial;
    else
      throw ConfigError("unknown pooling mode '" + mode + "'");
    if (p.contains("group_params"))
      cfg.pooling.group_params = p["group_params"].get<std::vector<std::string>>();
    cfg.pooling.centered = p.value("centered", false);
    if (p.contains("hyper"))
      for (auto& [name, h] : p["hyper"].items()) {
        HyperSpec spec;
        spec.mu_loc = h.value("mu_loc", 0.0);
        spec.mu_scale = h.value("mu_scale", 1.0);
        spec.sigma_scale = h.value("sigma_scale", 1.0);
        cfg.pooling.hyper.emplace(name, spec);
      }
  }

  if (j.contains("sampler")) {
    const auto& s = j["sampler"];
    cfg.sampler.algorithm = algorithm_from_string(s.value("algorithm", std::string("nuts")));
    cfg.sampler.n_chains = s.value("chains", 4);
    cfg.sampler.n_warmup = s.value("warmup", 1000);
    cfg.sampler.n_draws = s.value("draws", 1000);
    cfg.sampler.seed = s.value("seed", 0ULL);
    cfg.sampler.target_accept = s.value("target_accept", 0.8);
    cfg.sampler.max_tree_depth = s.value("max_tree_depth", 10);
    cfg.sampler.hmc_leapfrog_steps = s.value("hmc_leapfrog_steps", 16);
    cfg.sampler.divergence_delta = s.value("divergence_delta", 1000.0);
    if (s.contains("rwm_sigma"))
      cfg.sampler.rwm_sigma = s["rwm_sigma"].get<std::vector<double>>();
    cfg.sampler.parallel_chains = s.value("parallel_chains", true);
  }

  if (j.contains("solver")) {
    const auto& s = j["solver"];
    cfg.solver.rel_tol = s.value("rel_tol", 1e-6);
    cfg.solver.abs_tol = s.value("abs_tol", 1e-6);
    cfg.solver.max_steps = s.value("max_steps", 1000000L);
    if (s.contains("initial_step")) cfg.solver.initial_step = s["initial_step"].get<double>();
    if (!(cfg.solver.rel_tol > 0.0) || !(cfg.solver.abs_tol > 0.0))
      throw ConfigError("solver tolerances must be positive");
  }

  if (j.contains("output")) cfg.out_dir = j["output"].value("dir", std::string("out"));

  if (j.contains("simulate")) {
    const auto& s = j["simulate"];
    if (s.contains("truth"))
      for (auto& [name, v] : s["truth"].items()) cfg.truth.emplace(name, v.get<double>());
    if (s.contains("times")) cfg.sim_times = parse_times(s["times"]);
    cfg.sim_groups = s.value("groups", 6);
    if (s.contains("schedule"))
      for (const auto& pair : s["schedule"]) {
        if (!pair.is_array() || pair.size() != 2)
          throw ConfigError("simulate.schedule entries must be [t_on, t_off] pairs");
        cfg.sim_schedule.emplace_back(pair[0].get<double>(), pair[1].get<double>());
      }
  }

  if (j.contains("predict") && j["predict"].contains("times"))
    cfg.predict_times = parse_times(j["predict"]["times"]);

  // environment overrides: seed and output directory only
  if (const char* env = std::getenv("ODEBAYES_SEED"))
    cfg.sampler.seed = std::strtoull(env, nullptr, 10);
  if (const char* env = std::getenv("ODEBAYES_OUT")) cfg.out_dir = env;

  cfg.sampler.validate();

  // canonical form: the parsed tree with overrides applied, sorted keys
  json canon = j;
  canon["sampler"]["seed"] = cfg.sampler.seed;
  canon["output"]["dir"] = cfg.out_dir;
  cfg.canonical_json = canon.dump(2);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

}  // namespace odebayes
