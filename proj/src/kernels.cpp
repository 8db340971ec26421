#include "odebayes/kernels/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

#include "kernels_detail.hpp"

namespace odebayes::kernels {

namespace {

Impl resolve_default() {
  if (const char* env = std::getenv("ODEBAYES_KERNELS")) {
    const std::string s(env);
    if (s == "scalar") return Impl::scalar;
    if (s == "avx2") {
      if (!detail::avx2_supported())
        throw std::runtime_error("ODEBAYES_KERNELS=avx2 but CPU lacks AVX2+FMA");
      return Impl::avx2;
    }
    throw std::runtime_error("ODEBAYES_KERNELS must be 'scalar' or 'avx2'");
  }
  return detail::avx2_supported() ? Impl::avx2 : Impl::scalar;
}

std::atomic<Impl>& impl_slot() {
  static std::atomic<Impl> impl{resolve_default()};
  return impl;
}

}  // namespace

Impl active_impl() { return impl_slot().load(std::memory_order_relaxed); }

std::string impl_name() { return active_impl() == Impl::avx2 ? "avx2" : "scalar"; }

void force_impl(Impl impl) {
  if (impl == Impl::avx2 && !detail::avx2_supported())
    throw std::runtime_error("AVX2 kernels unsupported on this CPU");
  impl_slot().store(impl, std::memory_order_relaxed);
}

double sum(std::span<const double> x) {
  return active_impl() == Impl::avx2 ? detail::sum_avx2(x) : detail::sum_scalar(x);
}

double dot(std::span<const double> x, std::span<const double> y) {
  return active_impl() == Impl::avx2 ? detail::dot_avx2(x, y) : detail::dot_scalar(x, y);
}

double max(std::span<const double> x) {
  return active_impl() == Impl::avx2 ? detail::max_avx2(x) : detail::max_scalar(x);
}

double sum_exp_shifted(std::span<const double> x, double shift) {
  return active_impl() == Impl::avx2 ? detail::sum_exp_shifted_avx2(x, shift)
                                     : detail::sum_exp_shifted_scalar(x, shift);
}

double sq_dev_sum(std::span<const double> x, double center) {
  return active_impl() == Impl::avx2 ? detail::sq_dev_sum_avx2(x, center)
                                     : detail::sq_dev_sum_scalar(x, center);
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double m = max(x);
  if (!std::isfinite(m)) return m;
  return m + std::log(sum_exp_shifted(x, m));
}

}  // namespace odebayes::kernels
