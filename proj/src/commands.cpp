#include "odebayes/io/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "odebayes/diag/diagnostics.hpp"
#include "odebayes/eval/evaluation.hpp"
#include "odebayes/io/artifacts.hpp"
#include "odebayes/io/csv.hpp"
#include "odebayes/io/sha256.hpp"
#include "odebayes/model/simulate.hpp"
#include "odebayes/sample/run.hpp"

namespace odebayes {

namespace fs = std::filesystem;

namespace {

std::vector<double> truth_vector(const Model& model,
                                 const std::map<std::string, double>& truth) {
  std::vector<double> theta(model.space.n());
  for (int i = 0; i < model.space.n(); ++i) {
    const auto& name = model.space.spec(i).name;
    auto it = truth.find(name);
    if (it == truth.end())
      throw ConfigError("simulate.truth is missing parameter '" + name + "'");
    theta[i] = it->second;
  }
  return theta;
}

PoolingStructure effective_pooling(const RunConfig& config, const Model& model) {
  if (config.pooling_set) return config.pooling;
  PoolingStructure p;
  p.mode = model.default_pooling;
  return p;
}

GroupSeries slice_group(const GroupSeries& g, bool keep_before, double boundary) {
  GroupSeries out;
  out.id = g.id;
  out.forcing = g.forcing;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < g.times.size(); ++i) {
    const bool before = g.times[i] < boundary;
    if (before == keep_before) keep.push_back(i);
  }
  out.observations = Matrix(g.observations.rows(), keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.times.push_back(g.times[keep[k]]);
    for (std::size_t ch = 0; ch < g.observations.rows(); ++ch)
      out.observations(ch, k) = g.observations(ch, keep[k]);
  }
  return out;
}

}  // namespace

std::vector<GroupProblem> prepare_slice_problems(const Model& model, const Dataset& full,
                                                 const Dataset& slice) {
  const auto anchored = prepare_groups(model, full);
  std::vector<GroupProblem> out;
  for (const auto& g : slice.groups) {
    const GroupProblem* anchor = nullptr;
    for (const auto& a : anchored)
      if (a.id == g.id) anchor = &a;
    if (!anchor) throw std::runtime_error("group " + g.id + " missing from full dataset");
    GroupProblem p;
    p.id = g.id;
    p.times = g.times;
    p.observations = g.observations;
    p.forcing = anchor->forcing;
    p.y0 = anchor->y0;
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

void write_schedule_csv(const std::string& path, const Dataset& ds) {
  std::ostringstream os;
  os << "group,t_on,t_off\n";
  for (const auto& g : ds.groups) {
    const auto bp = g.forcing.breakpoints();
    const auto vals = g.forcing.values();
    for (std::size_t i = 0; i + 1 < vals.size(); ++i)
      if (vals[i + 1] == 1.0)
        os << g.id << ',' << format_double(bp[i]) << ','
           << format_double(i + 1 < bp.size() ? bp[i + 1] : bp[i]) << "\n";
  }
  atomic_write(path, os.str());
}

}  // namespace

std::pair<Dataset, Dataset> split_holdout(const Dataset& full, HoldoutMode mode) {
  if (mode == HoldoutMode::none) return {full, Dataset{}};
  Dataset train, holdout;
  for (const auto& g : full.groups) {
    const auto bp = g.forcing.breakpoints();
    double boundary = 0.0;
    if (mode == HoldoutMode::first_cycle_only) {
      if (bp.size() < 3)
        throw std::runtime_error("group " + g.id +
                                 ": first_cycle_only needs a second treatment cycle");
      boundary = bp[2];  // start of the second on-interval
    } else {
      if (bp.size() < 4)
        throw std::runtime_error("group " + g.id +
                                 ": exclude_last_cycle needs at least two cycles");
      boundary = bp[bp.size() - 2];  // start of the last on-interval
    }
    auto tr = slice_group(g, true, boundary);
    auto ho = slice_group(g, false, boundary);
    if (tr.times.empty())
      throw std::runtime_error("group " + g.id + ": holdout leaves no training data");
    if (ho.times.empty())
      throw std::runtime_error("group " + g.id + ": holdout leaves no held-out data");
    train.groups.push_back(std::move(tr));
    holdout.groups.push_back(std::move(ho));
  }
  return {train, holdout};
}

int cmd_simulate(const RunConfig& config) {
  const auto model = make_model(config.model_kind, config.overrides);
  const auto theta = truth_vector(model, config.truth);
  const auto times = config.sim_times.grid();

  std::vector<ForcingSchedule> forcing;
  if (!config.sim_schedule.empty()) {
    std::vector<double> breaks;
    std::vector<double> values{0.0};
    for (auto [on, off] : config.sim_schedule) {
      breaks.push_back(on);
      values.push_back(1.0);
      breaks.push_back(off);
      values.push_back(0.0);
    }
    forcing.assign(config.sim_groups, ForcingSchedule(breaks, values));
  }

  const auto ds =
      simulate_data(model, theta, times, config.sim_groups, config.sampler.seed, forcing,
                    config.solver);

  fs::create_directories(config.out_dir);
  RunPaths paths{config.out_dir};
  ds.to_csv(paths.data_csv());
  std::vector<std::string> files = {"data.csv"};
  if (!config.sim_schedule.empty()) {
    write_schedule_csv(paths.schedule_csv(), ds);
    files.push_back("schedule.csv");
  }
  write_manifest(paths, Sha256::hex(config.canonical_json), config.sampler.seed, 0.0, files);
  std::cout << "wrote " << paths.data_csv() << " (" << ds.groups.size() << " groups, "
            << ds.n_observations() << " observations)\n";
  return 0;
}

int cmd_fit(const RunConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  if (config.data_path.empty()) throw ConfigError("fit requires data.path");

  auto full = Dataset::from_csv(config.data_path);
  if (!config.schedule_path.empty()) full.apply_schedule_csv(config.schedule_path);

  const auto model = make_model(config.model_kind, config.overrides);
  const auto pooling = effective_pooling(config, model);

  const auto [train, holdout] = split_holdout(full, config.holdout);
  const auto target =
      build_target(model, prepare_slice_problems(model, full, train), pooling, config.solver);

  const auto chains = run_chains(*target, config.sampler);

  const auto names = target->coord_names();
  const auto summary =
      diag::summarize(chains, names, config.sampler.max_tree_depth);
  const std::string table = diag::render_table(summary);
  std::cout << table;

  fs::create_directories(config.out_dir);
  RunPaths paths{config.out_dir};
  const std::string config_hash = Sha256::hex(config.canonical_json);

  write_draw_files(paths, names, chains, config_hash);
  atomic_write(paths.summary_txt(), table);
  atomic_write(paths.summary_csv(), diag::summary_csv(summary));

  // evaluation set: held-out observations when a holdout is configured,
  // the training observations otherwise
  std::unique_ptr<OdeTarget> eval_holder;
  if (config.holdout != HoldoutMode::none)
    eval_holder =
        build_target(model, prepare_slice_problems(model, full, holdout), pooling, config.solver);
  const OdeTarget& eval_ref = eval_holder ? *eval_holder : *target;
  const auto loglik = build_loglik_matrix(eval_ref, chains);
  write_loglik_files(paths, loglik);
  const auto loo = psis_loo(loglik);
  atomic_write(paths.loo_txt(), loo_report_text(loo));

  Rng pp_rng(config.sampler.seed, 0xfeedULL);
  const auto pp =
      posterior_predictive(*target, chains, config.predict_times.grid(), pp_rng);
  write_band_files(paths, pp);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  write_manifest(paths, config_hash, config.sampler.seed, wall,
                 {"draws.csv", "draws_unconstrained.csv", "stats.csv", "draws.bin",
                  "summary.txt", "summary.csv", "loglik.csv", "loglik_labels.csv",
                  "loo.txt", "y_mean_bands.csv", "y_pred_bands.csv"});

  std::cout << "\nartifacts in " << config.out_dir << " (wall time "
            << static_cast<long>(wall) << " s)\n";
  return 0;
}

int cmd_predict(const RunConfig& config, const std::string& run_dir) {
  RunPaths paths{run_dir.empty() ? config.out_dir : run_dir};
  verify_manifest(paths);

  const std::string config_hash = Sha256::hex(config.canonical_json);
  const auto chains = load_draws(paths, config_hash);
  if (chains.empty()) throw std::runtime_error("no draws in " + paths.dir);

  if (config.data_path.empty()) throw ConfigError("predict requires data.path");
  auto full = Dataset::from_csv(config.data_path);
  if (!config.schedule_path.empty()) full.apply_schedule_csv(config.schedule_path);
  const auto model = make_model(config.model_kind, config.overrides);
  const auto pooling = effective_pooling(config, model);
  const auto [train, holdout] = split_holdout(full, config.holdout);
  const auto target =
      build_target(model, prepare_slice_problems(model, full, train), pooling, config.solver);

  if (static_cast<int>(chains.front().draws_unconstrained.cols()) != target->dim())
    throw DimensionMismatchError("draws dimension does not match the model target");

  Rng pp_rng(config.sampler.seed, 0xfeedULL);
  const auto pp =
      posterior_predictive(*target, chains, config.predict_times.grid(), pp_rng);
  write_band_files(paths, pp);

  // refresh the manifest entries for the band files
  nlohmann::json manifest;
  {
    std::ifstream in(paths.manifest_json());
    manifest = nlohmann::json::parse(in);
  }
  std::vector<std::string> names;
  for (auto& [name, hash] : manifest["files"].items()) names.push_back(name);
  for (const auto& extra : {"y_mean_bands.csv", "y_pred_bands.csv"})
    if (std::find(names.begin(), names.end(), extra) == names.end())
      names.emplace_back(extra);
  std::string combined;
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    const std::string h = Sha256::hex_file(paths.dir + "/" + name);
    manifest["files"][name] = h;
    combined += name + ":" + h + "\n";
  }
  manifest["artifacts_sha256"] = Sha256::hex(combined);
  atomic_write(paths.manifest_json(), manifest.dump(2) + "\n");

  std::cout << "wrote " << paths.y_mean_bands_csv() << " and " << paths.y_pred_bands_csv()
            << "\n";
  return 0;
}

int cmd_loo(const std::vector<std::string>& run_dirs, const std::string& out_path) {
  if (run_dirs.empty() || run_dirs.size() > 2)
    throw std::runtime_error("loo takes one or two run directories");

  std::vector<LooResult> results;
  for (const auto& dir : run_dirs) {
    RunPaths paths{dir};
    verify_manifest(paths);
    results.push_back(psis_loo(read_loglik_files(paths)));
  }

  std::string report = loo_report_text(results[0]);
  if (results.size() == 2) {
    const auto cmp = loo_compare(results[0], results[1]);
    report += "\n" + loo_report_text(results[1]);
    report += "\n" + loo_comparison_text(results[0], results[1], cmp);
  }
  std::cout << report;
  if (!out_path.empty()) atomic_write(out_path, report);
  return 0;
}

}  // namespace odebayes
