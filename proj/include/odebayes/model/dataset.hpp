#pragma once

#include <string>
#include <vector>

#include "odebayes/common/matrix.hpp"
#include "odebayes/ode/system.hpp"

namespace odebayes {

/// One grouped time series (a well, a site, a patient). observations is
/// n_channels x n_times; the forcing schedule defaults to constant zero.
struct GroupSeries {
  std::string id;
  std::vector<double> times;
  Matrix observations;
  ForcingSchedule forcing;
};

struct Dataset {
  std::vector<GroupSeries> groups;

  int n_channels() const {
    return groups.empty() ? 0 : static_cast<int>(groups.front().observations.rows());
  }
  long n_observations() const {
    long n = 0;
    for (const auto& g : groups)
      n += static_cast<long>(g.observations.rows() * g.observations.cols());
    return n;
  }

  const GroupSeries* find(const std::string& id) const {
    for (const auto& g : groups)
      if (g.id == id) return &g;
    return nullptr;
  }

  /// Checks sorted times, matching observation counts, and absence of NaNs.
  void validate() const;

  /// CSV schema: header `group,time,channel,value`; channel is a 0-based
  /// index; every group must carry a complete channel x time grid.
  static Dataset from_csv(const std::string& path);
  void to_csv(const std::string& path) const;

  /// Treatment-schedule CSV: header `group,t_on,t_off`, one on-interval per
  /// row. Groups present in the file get a 0/1 forcing schedule.
  void apply_schedule_csv(const std::string& path);
};

}  // namespace odebayes
