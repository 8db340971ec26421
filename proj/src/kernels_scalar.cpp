#include <cassert>
#include <cmath>
#include <limits>

#include "kernels_detail.hpp"

namespace odebayes::kernels::detail {

double sum_scalar(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

double dot_scalar(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double max_scalar(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::fmax(m, v);
  return m;
}

double sum_exp_shifted_scalar(std::span<const double> x, double shift) {
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - shift);
  return acc;
}

double sq_dev_sum_scalar(std::span<const double> x, double center) {
  double acc = 0.0;
  for (double v : x) {
    const double d = v - center;
    acc += d * d;
  }
  return acc;
}

}  // namespace odebayes::kernels::detail
