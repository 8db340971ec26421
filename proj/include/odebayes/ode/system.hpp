#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "odebayes/common/matrix.hpp"
#include "odebayes/ode/dual.hpp"

namespace odebayes {

/// Piecewise-constant forcing over time. Interval lookup is right-continuous:
/// value_at(b) for a breakpoint b returns the value that starts at b.
class ForcingSchedule {
 public:
  ForcingSchedule() : values_{0.0} {}

  ForcingSchedule(std::vector<double> breakpoints, std::vector<double> values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (values_.size() != breakpoints_.size() + 1)
      throw std::invalid_argument("forcing: need one value per interval");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i)
      if (!(breakpoints_[i] > breakpoints_[i - 1]))
        throw std::invalid_argument("forcing: breakpoints must be strictly increasing");
  }

  static ForcingSchedule constant(double v) {
    ForcingSchedule s;
    s.values_ = {v};
    return s;
  }

  double value_at(double t) const {
    std::size_t i = 0;
    while (i < breakpoints_.size() && t >= breakpoints_[i]) ++i;
    return values_[i];
  }

  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

/// Initial state: each entry is either a fixed number or a reference into
/// the ODE-parameter vector (for inferred initial conditions).
struct InitialState {
  struct Entry {
    double value = 0.0;
    int xi_index = -1;  // >= 0: take xi[xi_index]
  };
  std::vector<Entry> entries;

  static InitialState fixed(std::vector<double> values) {
    InitialState s;
    for (double v : values) s.entries.push_back({v, -1});
    return s;
  }

  std::vector<double> resolve(std::span<const double> xi) const {
    std::vector<double> y0(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i)
      y0[i] = entries[i].xi_index >= 0 ? xi[entries[i].xi_index] : entries[i].value;
    return y0;
  }
};

using Rhs = std::function<void(double t, std::span<const double> y,
                               std::span<const double> xi, double forcing,
                               std::span<double> dydt)>;
using RhsDual = std::function<void(double t, std::span<const Dual> y,
                                   std::span<const Dual> xi, double forcing,
                                   std::span<Dual> dydt)>;
/// Analytic Jacobians df/dy (dim x dim) and df/dxi (dim x n_xi).
using RhsJacobians = std::function<void(double t, std::span<const double> y,
                                        std::span<const double> xi, double forcing,
                                        Matrix& df_dy, Matrix& df_dxi)>;

struct OdeSystem {
  int dim = 0;
  int n_xi = 0;
  Rhs rhs;
  RhsDual rhs_dual;
  RhsJacobians jacobians;  // empty: derived from rhs_dual
  double t0 = 0.0;
  InitialState y0;
};

/// Wraps a generic callable f(t, y, xi, forcing, dydt) templated on the
/// scalar type into both the plain and the dual-number entry points.
template <class F>
OdeSystem make_ode_system(int dim, int n_xi, F f) {
  OdeSystem s;
  s.dim = dim;
  s.n_xi = n_xi;
  s.rhs = [f](double t, std::span<const double> y, std::span<const double> xi,
              double forcing, std::span<double> dydt) { f(t, y, xi, forcing, dydt); };
  s.rhs_dual = [f](double t, std::span<const Dual> y, std::span<const Dual> xi,
                   double forcing, std::span<Dual> dydt) { f(t, y, xi, forcing, dydt); };
  return s;
}

struct Trajectory {
  std::vector<double> times;
  Matrix states;                      // n_times x dim
  std::vector<Matrix> sensitivities;  // per time: dim x n_xi

  bool has_sensitivities() const { return !sensitivities.empty(); }
};

struct SolverConfig {
  double rel_tol = 1e-6;
  double abs_tol = 1e-6;
  long max_steps = 1'000'000;
  std::optional<double> initial_step;
};

class SolverError : public std::runtime_error {
 public:
  enum class Code { max_steps_exceeded, non_finite_state };

  SolverError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

}  // namespace odebayes
