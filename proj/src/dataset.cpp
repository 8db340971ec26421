#include "odebayes/model/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "odebayes/io/csv.hpp"

namespace odebayes {

void Dataset::validate() const {
  for (const auto& g : groups) {
    if (g.times.empty()) throw std::invalid_argument("group " + g.id + " has no times");
    for (std::size_t i = 1; i < g.times.size(); ++i)
      if (!(g.times[i] > g.times[i - 1]))
        throw std::invalid_argument("group " + g.id + ": times not strictly increasing");
    if (g.observations.cols() != g.times.size())
      throw std::invalid_argument("group " + g.id + ": observation count != time count");
    if (g.observations.rows() != groups.front().observations.rows())
      throw std::invalid_argument("group " + g.id + ": channel count differs");
    for (double v : g.observations.flat())
      if (std::isnan(v)) throw std::invalid_argument("group " + g.id + ": NaN observation");
  }
}

Dataset Dataset::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(path + ": cannot open");
  std::string line;
  long lineno = 0;

  auto ctx = [&]() { return path + ":" + std::to_string(lineno); };

  if (!std::getline(in, line)) throw CsvError(path + ": empty file");
  ++lineno;
  {
    auto head = split_csv_line(line);
    if (head.size() != 4 || head[0] != "group" || head[1] != "time" ||
        head[2] != "channel" || head[3] != "value")
      throw CsvError(ctx() + ": expected header 'group,time,channel,value'");
  }

  // group -> time -> channel -> value, groups kept in first-seen order
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::map<long, double>>> cells;
  long max_channel = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 4) throw CsvError(ctx() + ": expected 4 fields, got " + std::to_string(f.size()));
    const std::string& gid = f[0];
    const double t = parse_double(f[1], ctx());
    const long ch = parse_long(f[2], ctx());
    const double v = parse_double(f[3], ctx());
    if (ch < 0) throw CsvError(ctx() + ": negative channel index");
    if (!cells.count(gid)) order.push_back(gid);
    auto& slot = cells[gid][t];
    if (slot.count(ch)) throw CsvError(ctx() + ": duplicate (group,time,channel)");
    slot[ch] = v;
    max_channel = std::max(max_channel, ch);
  }
  if (order.empty()) throw CsvError(path + ": no data rows");

  const long n_channels = max_channel + 1;
  Dataset ds;
  for (const auto& gid : order) {
    GroupSeries g;
    g.id = gid;
    const auto& by_time = cells[gid];
    g.observations = Matrix(n_channels, by_time.size());
    std::size_t col = 0;
    for (const auto& [t, chans] : by_time) {
      g.times.push_back(t);
      for (long ch = 0; ch < n_channels; ++ch) {
        auto it = chans.find(ch);
        if (it == chans.end())
          throw CsvError(path + ": group " + gid + " missing channel " +
                         std::to_string(ch) + " at time " + format_double(t));
        g.observations(ch, col) = it->second;
      }
      ++col;
    }
    ds.groups.push_back(std::move(g));
  }
  ds.validate();
  return ds;
}

void Dataset::to_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw CsvError(path + ": cannot open for writing");
  out << "group,time,channel,value\n";
  for (const auto& g : groups)
    for (std::size_t i = 0; i < g.times.size(); ++i)
      for (std::size_t ch = 0; ch < g.observations.rows(); ++ch)
        out << g.id << ',' << format_double(g.times[i]) << ',' << ch << ','
            << format_double(g.observations(ch, i)) << '\n';
}

void Dataset::apply_schedule_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(path + ": cannot open");
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw CsvError(path + ": empty file");
  ++lineno;
  {
    auto head = split_csv_line(line);
    if (head.size() != 3 || head[0] != "group" || head[1] != "t_on" || head[2] != "t_off")
      throw CsvError(path + ":1: expected header 'group,t_on,t_off'");
  }
  std::map<std::string, std::vector<std::pair<double, double>>> intervals;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(lineno);
    auto f = split_csv_line(line);
    if (f.size() != 3) throw CsvError(ctx + ": expected 3 fields");
    const double on = parse_double(f[1], ctx);
    const double off = parse_double(f[2], ctx);
    if (!(off > on)) throw CsvError(ctx + ": t_off must exceed t_on");
    intervals[f[0]].emplace_back(on, off);
  }
  for (auto& g : groups) {
    auto it = intervals.find(g.id);
    if (it == intervals.end()) continue;
    auto& iv = it->second;
    std::sort(iv.begin(), iv.end());
    std::vector<double> breaks;
    std::vector<double> values{0.0};
    for (auto [on, off] : iv) {
      breaks.push_back(on);
      values.push_back(1.0);
      breaks.push_back(off);
      values.push_back(0.0);
    }
    g.forcing = ForcingSchedule(std::move(breaks), std::move(values));
  }
}

}  // namespace odebayes
