#include "odebayes/io/artifacts.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "odebayes/common/special.hpp"
#include "odebayes/io/csv.hpp"
#include "odebayes/io/sha256.hpp"
#include "odebayes/kernels/kernels.hpp"

namespace odebayes {

namespace fs = std::filesystem;
using nlohmann::json;

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error(tmp + ": cannot open for writing");
    out << content;
  }
  fs::rename(tmp, path);
}

namespace {

constexpr char kBinMagic[8] = {'O', 'D', 'B', 'D', 'R', 'W', 'S', '1'};

std::string stats_header() {
  return "accept_prob,divergent,energy,tree_depth,n_leapfrog,step_size";
}

std::string stats_cells(const DrawStats& s) {
  std::ostringstream os;
  os << format_double(s.accept_prob) << ',' << (s.divergent ? 1 : 0) << ','
     << format_double(s.energy) << ',' << s.tree_depth << ',' << s.n_leapfrog << ','
     << format_double(s.step_size);
  return os.str();
}

}  // namespace

void write_draw_files(const RunPaths& paths, const std::vector<std::string>& names,
                      const std::vector<ChainOutput>& chains, const std::string& config_hash) {
  // constrained draws plus per-draw statistics
  {
    std::ostringstream os;
    os << "chain,draw";
    for (const auto& n : names) os << ',' << n;
    os << ',' << stats_header() << "\n";
    for (const auto& c : chains)
      for (std::size_t d = 0; d < c.draws_constrained.rows(); ++d) {
        os << c.chain_id << ',' << d;
        for (double v : c.draws_constrained.row(d)) os << ',' << format_double(v);
        os << ',' << stats_cells(c.stats[d]) << "\n";
      }
    atomic_write(paths.draws_csv(), os.str());
  }
  // unconstrained coordinates, for downstream recomputation
  {
    std::ostringstream os;
    os << "chain,draw";
    for (const auto& n : names) os << ',' << n;
    os << "\n";
    for (const auto& c : chains)
      for (std::size_t d = 0; d < c.draws_unconstrained.rows(); ++d) {
        os << c.chain_id << ',' << d;
        for (double v : c.draws_unconstrained.row(d)) os << ',' << format_double(v);
        os << "\n";
      }
    atomic_write(paths.draws_unconstrained_csv(), os.str());
  }
  // stats alone
  {
    std::ostringstream os;
    os << "chain,draw," << stats_header() << "\n";
    for (const auto& c : chains)
      for (std::size_t d = 0; d < c.stats.size(); ++d)
        os << c.chain_id << ',' << d << ',' << stats_cells(c.stats[d]) << "\n";
    atomic_write(paths.stats_csv(), os.str());
  }
  // binary cache keyed by the config hash
  {
    std::ostringstream os(std::ios::binary);
    os.write(kBinMagic, 8);
    char hash_buf[64] = {};
    std::memcpy(hash_buf, config_hash.data(), std::min<std::size_t>(64, config_hash.size()));
    os.write(hash_buf, 64);
    const std::uint32_t n_chains = static_cast<std::uint32_t>(chains.size());
    const std::uint32_t dim =
        chains.empty() ? 0 : static_cast<std::uint32_t>(chains[0].draws_unconstrained.cols());
    const std::uint32_t n_draws =
        chains.empty() ? 0 : static_cast<std::uint32_t>(chains[0].draws_unconstrained.rows());
    os.write(reinterpret_cast<const char*>(&n_chains), 4);
    os.write(reinterpret_cast<const char*>(&dim), 4);
    os.write(reinterpret_cast<const char*>(&n_draws), 4);
    for (const auto& c : chains) {
      const auto u = c.draws_unconstrained.flat();
      const auto con = c.draws_constrained.flat();
      os.write(reinterpret_cast<const char*>(u.data()),
               static_cast<std::streamsize>(u.size() * sizeof(double)));
      os.write(reinterpret_cast<const char*>(con.data()),
               static_cast<std::streamsize>(con.size() * sizeof(double)));
    }
    atomic_write(paths.draws_bin(), os.str());
  }
}

std::vector<ChainOutput> load_draws(const RunPaths& paths, const std::string& config_hash) {
  // try the cache
  {
    std::ifstream in(paths.draws_bin(), std::ios::binary);
    if (in) {
      char magic[8], hash_buf[64];
      std::uint32_t n_chains = 0, dim = 0, n_draws = 0;
      in.read(magic, 8);
      in.read(hash_buf, 64);
      in.read(reinterpret_cast<char*>(&n_chains), 4);
      in.read(reinterpret_cast<char*>(&dim), 4);
      in.read(reinterpret_cast<char*>(&n_draws), 4);
      if (in && std::memcmp(magic, kBinMagic, 8) == 0 &&
          std::string(hash_buf, hash_buf + config_hash.size()) == config_hash) {
        std::vector<ChainOutput> chains(n_chains);
        bool ok = true;
        for (std::uint32_t c = 0; c < n_chains && ok; ++c) {
          chains[c].chain_id = static_cast<int>(c);
          chains[c].draws_unconstrained = Matrix(n_draws, dim);
          chains[c].draws_constrained = Matrix(n_draws, dim);
          chains[c].stats.resize(n_draws);
          auto& u = chains[c].draws_unconstrained.storage();
          auto& con = chains[c].draws_constrained.storage();
          in.read(reinterpret_cast<char*>(u.data()),
                  static_cast<std::streamsize>(u.size() * sizeof(double)));
          in.read(reinterpret_cast<char*>(con.data()),
                  static_cast<std::streamsize>(con.size() * sizeof(double)));
          ok = static_cast<bool>(in);
        }
        if (ok) return chains;
      }
    }
  }

  // fall back to the CSVs
  std::ifstream uin(paths.draws_unconstrained_csv());
  std::ifstream cin_(paths.draws_csv());
  if (!uin || !cin_)
    throw std::runtime_error(paths.dir + ": no usable draws files");
  std::string uline, cline;
  std::getline(uin, uline);
  std::getline(cin_, cline);
  const auto uhead = split_csv_line(uline);
  const auto chead = split_csv_line(cline);
  const std::size_t dim = uhead.size() - 2;

  std::map<int, ChainOutput> by_chain;
  long lineno = 1;
  while (std::getline(uin, uline) && std::getline(cin_, cline)) {
    ++lineno;
    if (uline.empty()) continue;
    const std::string ctx = paths.draws_unconstrained_csv() + ":" + std::to_string(lineno);
    const auto uf = split_csv_line(uline);
    const auto cf = split_csv_line(cline);
    if (uf.size() != dim + 2) throw CsvError(ctx + ": wrong field count");
    const int chain = static_cast<int>(parse_long(uf[0], ctx));
    std::vector<double> urow(dim), crow(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      urow[i] = parse_double(uf[2 + i], ctx);
      crow[i] = parse_double(cf[2 + i], ctx);
    }
    auto& out = by_chain[chain];
    out.chain_id = chain;
    out.draws_unconstrained.push_row(urow);
    out.draws_constrained.push_row(crow);
    out.stats.push_back({});
  }
  std::vector<ChainOutput> chains;
  for (auto& [id, c] : by_chain) chains.push_back(std::move(c));
  return chains;
}

void write_loglik_files(const RunPaths& paths, const LogLikMatrix& loglik) {
  {
    std::ostringstream os;
    os << "draw,obs_index,loglik\n";
    for (std::size_t s = 0; s < loglik.loglik.rows(); ++s)
      for (std::size_t i = 0; i < loglik.loglik.cols(); ++i)
        os << s << ',' << i << ',' << format_double(loglik.loglik(s, i)) << "\n";
    atomic_write(paths.loglik_csv(), os.str());
  }
  {
    std::ostringstream os;
    os << "obs_index,group,time,channel\n";
    for (std::size_t i = 0; i < loglik.labels.size(); ++i)
      os << i << ',' << loglik.labels[i].group << ','
         << format_double(loglik.labels[i].time) << ',' << loglik.labels[i].channel << "\n";
    atomic_write(paths.loglik_labels_csv(), os.str());
  }
}

LogLikMatrix read_loglik_files(const RunPaths& paths) {
  LogLikMatrix out;
  {
    std::ifstream in(paths.loglik_labels_csv());
    if (!in) throw std::runtime_error(paths.loglik_labels_csv() + ": cannot open");
    std::string line;
    std::getline(in, line);
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const std::string ctx = paths.loglik_labels_csv() + ":" + std::to_string(lineno);
      const auto f = split_csv_line(line);
      if (f.size() != 4) throw CsvError(ctx + ": wrong field count");
      out.labels.push_back(
          {f[1], parse_double(f[2], ctx), static_cast<int>(parse_long(f[3], ctx))});
    }
  }
  {
    std::ifstream in(paths.loglik_csv());
    if (!in) throw std::runtime_error(paths.loglik_csv() + ": cannot open");
    std::string line;
    std::getline(in, line);
    const std::size_t n_obs = out.labels.size();
    std::vector<double> row;
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const std::string ctx = paths.loglik_csv() + ":" + std::to_string(lineno);
      const auto f = split_csv_line(line);
      if (f.size() != 3) throw CsvError(ctx + ": wrong field count");
      row.push_back(parse_double(f[2], ctx));
      if (row.size() == n_obs) {
        out.loglik.push_row(row);
        row.clear();
      }
    }
    if (!row.empty()) throw CsvError(paths.loglik_csv() + ": trailing partial draw row");
  }
  return out;
}

void write_band_files(const RunPaths& paths, const PosteriorPredictive& pp) {
  const std::vector<double> probs = {0.025, 0.25, 0.5, 0.75, 0.975};
  auto render = [&](const auto& tensor) {
    std::ostringstream os;
    os << "group,channel,time,q2.5,q25,q50,q75,q97.5\n";
    for (std::size_t g = 0; g < tensor.size(); ++g)
      for (std::size_t ch = 0; ch < tensor[g].size(); ++ch)
        for (std::size_t t = 0; t < tensor[g][ch].size(); ++t) {
          auto values = tensor[g][ch][t];
          std::sort(values.begin(), values.end());
          os << pp.group_ids[g] << ',' << ch << ',' << format_double(pp.times[t]);
          for (double p : probs) os << ',' << format_double(quantile_sorted(values, p));
          os << "\n";
        }
    return os.str();
  };
  atomic_write(paths.y_mean_bands_csv(), render(pp.y_mean));
  atomic_write(paths.y_pred_bands_csv(), render(pp.y_pred));
}

std::string loo_report_text(const LooResult& loo) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "elpd_loo %10.1f  (se %.1f)\n", loo.elpd, loo.se);
  os << buf;
  os << "observations " << loo.pointwise.size() << ", draws excluded for solver failures "
     << loo.excluded_draws << "\n";
  os << "Pareto k: " << loo.n_high_k << " high (k > 0.7), " << loo.n_very_high_k
     << " very high (k > 1.0)\n\n";

  // per-group subtotals as columns with a trailing total, wrapped when wide
  std::vector<std::string> order;
  std::map<std::string, double> totals;
  for (std::size_t i = 0; i < loo.labels.size(); ++i) {
    const auto& g = loo.labels[i].group;
    if (!totals.count(g)) order.push_back(g);
    totals[g] += loo.pointwise[i];
  }
  const std::size_t per_row = 12;
  for (std::size_t start = 0; start < order.size(); start += per_row) {
    const std::size_t end = std::min(order.size(), start + per_row);
    const bool last_chunk = end == order.size();
    os << "        ";
    for (std::size_t i = start; i < end; ++i) {
      std::snprintf(buf, sizeof(buf), " %9s", order[i].c_str());
      os << buf;
    }
    if (last_chunk) os << "     total";
    os << "\n" << "elpd    ";
    for (std::size_t i = start; i < end; ++i) {
      std::snprintf(buf, sizeof(buf), " %9.1f", totals[order[i]]);
      os << buf;
    }
    if (last_chunk) {
      std::snprintf(buf, sizeof(buf), " %9.1f", loo.elpd);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::string loo_comparison_text(const LooResult& a, const LooResult& b,
                                const LooComparison& cmp) {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "elpd_diff %8.1f  se_diff %6.1f  (second minus first)%s\n", cmp.elpd_diff,
                cmp.se_diff, cmp.flagged ? "  [difference exceeds 2 se]" : "");
  os << buf;
  std::snprintf(buf, sizeof(buf), "first:  elpd %10.1f (se %.1f)\n", a.elpd, a.se);
  os << buf;
  std::snprintf(buf, sizeof(buf), "second: elpd %10.1f (se %.1f)\n", b.elpd, b.se);
  os << buf;
  return os.str();
}

void write_manifest(const RunPaths& paths, const std::string& config_hash,
                    std::uint64_t seed, double wall_time_seconds,
                    const std::vector<std::string>& artifact_files) {
  json j;
  j["engine"] = "odebayes 0.1.0";
  j["kernels"] = kernels::impl_name();
  j["config_sha256"] = config_hash;
  j["seed"] = seed;
  j["wall_time_seconds"] = wall_time_seconds;
  json files = json::object();
  std::string combined;
  std::vector<std::string> sorted = artifact_files;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& f : sorted) {
    const std::string h = Sha256::hex_file(paths.dir + "/" + f);
    files[f] = h;
    combined += f + ":" + h + "\n";
  }
  j["files"] = files;
  j["artifacts_sha256"] = Sha256::hex(combined);
  atomic_write(paths.manifest_json(), j.dump(2) + "\n");
}

void verify_manifest(const RunPaths& paths) {
  std::ifstream in(paths.manifest_json());
  if (!in) throw std::runtime_error(paths.manifest_json() + ": cannot open");
  json j = json::parse(in);
  std::string combined;
  std::vector<std::string> names;
  for (auto& [name, hash] : j.at("files").items()) names.push_back(name);
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    const std::string expect = j["files"][name].get<std::string>();
    const std::string got = Sha256::hex_file(paths.dir + "/" + name);
    if (got != expect)
      throw std::runtime_error(paths.dir + "/" + name + ": hash mismatch (artifact modified)");
    combined += name + ":" + got + "\n";
  }
  if (Sha256::hex(combined) != j.at("artifacts_sha256").get<std::string>())
    throw std::runtime_error(paths.manifest_json() + ": combined artifact hash mismatch");
}

}  // namespace odebayes
