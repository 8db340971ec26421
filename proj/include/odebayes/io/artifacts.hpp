#pragma once

#include <optional>
#include <string>
#include <vector>

#include "odebayes/eval/evaluation.hpp"
#include "odebayes/sample/chain_output.hpp"

namespace odebayes {

/// Write-temp-then-rename; partial artifacts never become visible.
void atomic_write(const std::string& path, const std::string& content);

/// Artifact names inside one run directory.
struct RunPaths {
  std::string dir;

  std::string data_csv() const { return dir + "/data.csv"; }
  std::string schedule_csv() const { return dir + "/schedule.csv"; }
  std::string draws_csv() const { return dir + "/draws.csv"; }
  std::string draws_unconstrained_csv() const { return dir + "/draws_unconstrained.csv"; }
  std::string stats_csv() const { return dir + "/stats.csv"; }
  std::string draws_bin() const { return dir + "/draws.bin"; }
  std::string summary_txt() const { return dir + "/summary.txt"; }
  std::string summary_csv() const { return dir + "/summary.csv"; }
  std::string loglik_csv() const { return dir + "/loglik.csv"; }
  std::string loglik_labels_csv() const { return dir + "/loglik_labels.csv"; }
  std::string y_mean_bands_csv() const { return dir + "/y_mean_bands.csv"; }
  std::string y_pred_bands_csv() const { return dir + "/y_pred_bands.csv"; }
  std::string loo_txt() const { return dir + "/loo.txt"; }
  std::string manifest_json() const { return dir + "/manifest.json"; }
};

/// draws.csv (constrained coordinates plus per-draw sampler statistics),
/// draws_unconstrained.csv, stats.csv, and the binary cache keyed by the
/// config hash.
void write_draw_files(const RunPaths& paths, const std::vector<std::string>& names,
                      const std::vector<ChainOutput>& chains, const std::string& config_hash);

/// Binary cache when its key matches, CSV otherwise. Only the draw
/// matrices are populated.
std::vector<ChainOutput> load_draws(const RunPaths& paths, const std::string& config_hash);

void write_loglik_files(const RunPaths& paths, const LogLikMatrix& loglik);
LogLikMatrix read_loglik_files(const RunPaths& paths);

/// Per-time quantile bands (2.5/25/50/75/97.5%) of y_mean and y_pred.
void write_band_files(const RunPaths& paths, const PosteriorPredictive& pp);

std::string loo_report_text(const LooResult& loo);
std::string loo_comparison_text(const LooResult& a, const LooResult& b,
                                const LooComparison& cmp);

/// manifest.json records the config hash, seed, versions, wall time, and a
/// SHA-256 per artifact plus a combined hash over them.
void write_manifest(const RunPaths& paths, const std::string& config_hash,
                    std::uint64_t seed, double wall_time_seconds,
                    const std::vector<std::string>& artifact_files);

/// Recomputes every file hash and the combined hash; throws on mismatch.
void verify_manifest(const RunPaths& paths);

}  // namespace odebayes
