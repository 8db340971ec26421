#include "odebayes/ode/solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

namespace odebayes {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
// 5th-order solution weights (= last A row) and the 5th-minus-4th error weights.
constexpr double kB[7] = {35.0 / 384,      0.0,          500.0 / 1113, 125.0 / 192,
                          -2187.0 / 6784,  11.0 / 84,    0.0};
constexpr double kE[7] = {71.0 / 57600,    0.0,          -71.0 / 16695, 71.0 / 1920,
                          -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

constexpr double kSafety = 0.9;
constexpr double kPiAlpha = 0.7 / 5.0;  // exponent on the current error
constexpr double kPiBeta = 0.4 / 5.0;   // exponent on the previous error
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// rhs over the (possibly augmented) integration state; the forcing value is
// sampled once per attempted step, at the step's start time.
using StepRhs = std::function<void(double t, double forcing_value,
                                   std::span<const double> y, std::span<double> out)>;

class Dp45 {
 public:
  Dp45(std::size_t n, StepRhs f, const SolverConfig& cfg, const ForcingSchedule& forcing)
      : n_(n), f_(std::move(f)), cfg_(cfg), forcing_(&forcing) {
    for (auto& k : k_) k.resize(n_);
    y_stage_.resize(n_);
    y_new_.resize(n_);
    err_vec_.resize(n_);
  }

  /// Advances (t, y) to exactly t_stop.
  void integrate_to(double& t, std::vector<double>& y, double t_stop) {
    if (!(t_stop > t)) return;
    if (h_ <= 0.0)
      h_ = cfg_.initial_step ? *cfg_.initial_step : initial_step(t, y, t_stop - t);

    while (t < t_stop) {
      if (steps_attempted_ >= cfg_.max_steps)
        throw SolverError(SolverError::Code::max_steps_exceeded,
                          "ODE solver exceeded max_steps");
      ++steps_attempted_;

      bool last = false;
      double h = h_;
      if (h >= t_stop - t) {
        h = t_stop - t;
        last = true;
      }
      if (!(h > 0.0) || !std::isfinite(h) || t + h == t)
        throw SolverError(SolverError::Code::non_finite_state,
                          "ODE solver step size underflow");

      const double u = forcing_->value_at(t);
      f_(t, u, y, k_[0]);
      for (int s = 1; s < 7; ++s) {
        for (std::size_t i = 0; i < n_; ++i) {
          double acc = 0.0;
          for (int j = 0; j < s; ++j) acc += kA[s][j] * k_[j][i];
          y_stage_[i] = y[i] + h * acc;
        }
        f_(t + kC[s] * h, u, y_stage_, k_[s]);
      }
      for (std::size_t i = 0; i < n_; ++i) {
        double yb = 0.0, ye = 0.0;
        for (int s = 0; s < 7; ++s) {
          yb += kB[s] * k_[s][i];
          ye += kE[s] * k_[s][i];
        }
        y_new_[i] = y[i] + h * yb;
        err_vec_[i] = h * ye;
      }

      if (!all_finite(y_new_) || !all_finite(err_vec_)) {
        // Blow-up inside the trial step; shrink hard and retry.
        h_ = h * kFacMin;
        continue;
      }

      double err_sq = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double sc =
            cfg_.abs_tol + cfg_.rel_tol * std::max(std::fabs(y[i]), std::fabs(y_new_[i]));
        const double e = err_vec_[i] / sc;
        err_sq += e * e;
      }
      const double err = std::sqrt(err_sq / static_cast<double>(n_));

      if (err <= 1.0) {
        t = last ? t_stop : t + h;
        y.swap(y_new_);
        double fac = kSafety * std::pow(std::max(err, 1e-16), -kPiAlpha) *
                     std::pow(err_prev_, kPiBeta);
        fac = std::clamp(fac, kFacMin, kFacMax);
        h_ = h * fac;
        err_prev_ = std::max(err, 1e-4);
      } else {
        const double fac = std::clamp(kSafety * std::pow(err, -0.2), kFacMin, 1.0);
        h_ = h * fac;
      }
    }
  }

 private:
  double initial_step(double t, std::span<const double> y, double span) const {
    const double u = forcing_->value_at(t);
    std::vector<double> f0(n_), f1(n_), y1(n_);
    f_(t, u, y, f0);
    if (!all_finite(f0))
      throw SolverError(SolverError::Code::non_finite_state,
                        "right-hand side not finite at initial state");
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double sc = cfg_.abs_tol + cfg_.rel_tol * std::fabs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(n_));
    d1 = std::sqrt(d1 / static_cast<double>(n_));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    for (std::size_t i = 0; i < n_; ++i) y1[i] = y[i] + h0 * f0[i];
    f_(t + h0, u, y1, f1);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double sc = cfg_.abs_tol + cfg_.rel_tol * std::fabs(y[i]);
      const double df = (f1[i] - f0[i]) / sc;
      d2 += df * df;
    }
    d2 = std::sqrt(d2 / static_cast<double>(n_)) / h0;
    double h1;
    if (std::max(d1, d2) <= 1e-15)
      h1 = std::max(1e-6, h0 * 1e-3);
    else
      h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::min({100.0 * h0, h1, span});
  }

  std::size_t n_;
  StepRhs f_;
  SolverConfig cfg_;
  const ForcingSchedule* forcing_;
  long steps_attempted_ = 0;
  double h_ = 0.0;
  double err_prev_ = 1e-4;
  std::vector<double> k_[7];
  std::vector<double> y_stage_, y_new_, err_vec_;
};

void validate_inputs(const OdeSystem& system, std::span<const double> xi,
                     std::span<const double> ts) {
  if (static_cast<int>(xi.size()) != system.n_xi)
    throw std::invalid_argument("xi length does not match system.n_xi");
  if (!all_finite(xi)) throw std::invalid_argument("xi must be finite");
  if (ts.empty()) throw std::invalid_argument("output grid is empty");
  if (!(ts[0] >= system.t0))
    throw std::invalid_argument("output grid starts before t0");
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (!(ts[i] > ts[i - 1]))
      throw std::invalid_argument("output grid must be strictly increasing");
  if (static_cast<int>(system.y0.entries.size()) != system.dim)
    throw std::invalid_argument("initial state length does not match dim");
}

std::vector<double> stop_points(std::span<const double> ts, double t0,
                                const ForcingSchedule& forcing) {
  std::vector<double> stops;
  for (double t : ts)
    if (t > t0) stops.push_back(t);
  for (double b : forcing.breakpoints())
    if (b > t0 && b < ts.back()) stops.push_back(b);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  return stops;
}

Trajectory solve_impl(const OdeSystem& system, std::span<const double> xi,
                      std::span<const double> ts, const SolverConfig& config,
                      const ForcingSchedule& forcing, bool with_sens) {
  validate_inputs(system, xi, ts);
  const int dim = system.dim;
  const int n_xi = system.n_xi;
  const std::size_t n = with_sens ? static_cast<std::size_t>(dim) * (1 + n_xi)
                                  : static_cast<std::size_t>(dim);

  std::vector<double> state(n, 0.0);
  {
    const auto y0 = system.y0.resolve(xi);
    std::copy(y0.begin(), y0.end(), state.begin());
    if (with_sens) {
      // dS/dxi at t0: identity columns where y0 entries are parameters.
      for (int i = 0; i < dim; ++i) {
        const int j = system.y0.entries[i].xi_index;
        if (j >= 0) state[dim + j * dim + i] = 1.0;
      }
    }
  }

  StepRhs step_rhs;
  if (!with_sens) {
    step_rhs = [&system, xi](double t, double u, std::span<const double> y,
                             std::span<double> out) {
      system.rhs(t, y.first(system.dim), xi, u, out.first(system.dim));
    };
  } else {
    auto df_dy = std::make_shared<Matrix>(dim, dim);
    auto df_dxi = std::make_shared<Matrix>(dim, n_xi);
    step_rhs = [&system, xi, dim, n_xi, df_dy, df_dxi](double t, double u,
                                                       std::span<const double> y,
                                                       std::span<double> out) {
      const auto y_core = y.first(dim);
      system.rhs(t, y_core, xi, u, out.first(dim));
      if (system.jacobians)
        system.jacobians(t, y_core, xi, u, *df_dy, *df_dxi);
      else
        jacobians_via_dual(system, t, y_core, xi, u, *df_dy, *df_dxi);
      for (int j = 0; j < n_xi; ++j) {
        const auto s_col = y.subspan(dim + j * dim, dim);
        for (int i = 0; i < dim; ++i) {
          double acc = (*df_dxi)(i, j);
          for (int k = 0; k < dim; ++k) acc += (*df_dy)(i, k) * s_col[k];
          out[dim + j * dim + i] = acc;
        }
      }
    };
  }

  Dp45 stepper(n, std::move(step_rhs), config, forcing);

  Trajectory out;
  out.times.assign(ts.begin(), ts.end());
  out.states = Matrix(ts.size(), dim);
  if (with_sens) out.sensitivities.reserve(ts.size());

  auto record = [&](std::size_t row) {
    for (int i = 0; i < dim; ++i) out.states(row, i) = state[i];
    if (with_sens) {
      Matrix s(dim, n_xi);
      for (int j = 0; j < n_xi; ++j)
        for (int i = 0; i < dim; ++i) s(i, j) = state[dim + j * dim + i];
      out.sensitivities.push_back(std::move(s));
    }
  };

  double t = system.t0;
  std::size_t row = 0;
  if (ts[0] == system.t0) record(row++);

  for (double stop : stop_points(ts, system.t0, forcing)) {
    stepper.integrate_to(t, state, stop);
    if (!all_finite(state))
      throw SolverError(SolverError::Code::non_finite_state, "non-finite state");
    if (row < ts.size() && ts[row] == stop) record(row++);
  }
  assert(row == ts.size());
  return out;
}

}  // namespace

void jacobians_via_dual(const OdeSystem& system, double t, std::span<const double> y,
                        std::span<const double> xi, double forcing, Matrix& df_dy,
                        Matrix& df_dxi) {
  const int dim = system.dim;
  const int n_xi = system.n_xi;
  assert(dim + n_xi <= kDualWidth);
  std::vector<Dual> yd(dim), xid(n_xi), fd(dim);
  for (int i = 0; i < dim; ++i) yd[i] = Dual::seeded(y[i], i);
  for (int j = 0; j < n_xi; ++j) xid[j] = Dual::seeded(xi[j], dim + j);
  system.rhs_dual(t, yd, xid, forcing, fd);
  if (df_dy.rows() != static_cast<std::size_t>(dim)) df_dy = Matrix(dim, dim);
  if (df_dxi.rows() != static_cast<std::size_t>(dim) ||
      df_dxi.cols() != static_cast<std::size_t>(n_xi))
    df_dxi = Matrix(dim, n_xi);
  for (int i = 0; i < dim; ++i) {
    for (int k = 0; k < dim; ++k) df_dy(i, k) = fd[i].d[k];
    for (int j = 0; j < n_xi; ++j) df_dxi(i, j) = fd[i].d[dim + j];
  }
}

Trajectory solve(const OdeSystem& system, std::span<const double> xi,
                 std::span<const double> ts, const SolverConfig& config,
                 const ForcingSchedule& forcing) {
  return solve_impl(system, xi, ts, config, forcing, false);
}

Trajectory solve_with_sensitivities(const OdeSystem& system, std::span<const double> xi,
                                    std::span<const double> ts, const SolverConfig& config,
                                    const ForcingSchedule& forcing) {
  return solve_impl(system, xi, ts, config, forcing, true);
}

}  // namespace odebayes
