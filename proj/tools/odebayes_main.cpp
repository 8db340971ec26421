#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>

#include "odebayes/io/commands.hpp"
#include "odebayes/io/config.hpp"

using namespace odebayes;

namespace {

RunConfig load_with_overrides(const std::string& config_path, long long seed_flag,
                              const std::string& out_flag) {
  // CLI flags win over the environment; both only touch seed and out dir.
  if (seed_flag >= 0) setenv("ODEBAYES_SEED", std::to_string(seed_flag).c_str(), 1);
  if (!out_flag.empty()) setenv("ODEBAYES_OUT", out_flag.c_str(), 1);
  return load_run_config(config_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian inference for first-order ODE models"};
  app.require_subcommand(1);

  std::string config_path = "odebayes.json";
  long long seed_flag = -1;
  std::string out_flag;
  std::string run_dir;
  std::vector<std::string> loo_dirs;
  std::string loo_out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)");
    sub->add_option("--seed", seed_flag, "override the sampler seed");
    sub->add_option("--out", out_flag, "override the output directory");
  };

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(sim);
  auto* fit = app.add_subcommand("fit", "sample the posterior and write run artifacts");
  add_common(fit);
  auto* predict = app.add_subcommand("predict", "posterior predictive bands from stored draws");
  add_common(predict);
  predict->add_option("--run", run_dir, "run directory holding the draws (default: out dir)");
  auto* loo = app.add_subcommand("loo", "PSIS-LOO report, optionally comparing two runs");
  loo->add_option("dirs", loo_dirs, "one or two run directories")->required();
  loo->add_option("--report", loo_out, "also write the report to this path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(load_with_overrides(config_path, seed_flag, out_flag));
    if (fit->parsed()) return cmd_fit(load_with_overrides(config_path, seed_flag, out_flag));
    if (predict->parsed())
      return cmd_predict(load_with_overrides(config_path, seed_flag, out_flag), run_dir);
    if (loo->parsed()) return cmd_loo(loo_dirs, loo_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
