#include <doctest.h>

#include <cmath>
#include <vector>

#include "odebayes/common/rng.hpp"
#include "odebayes/common/special.hpp"
#include "odebayes/kernels/kernels.hpp"

using namespace odebayes;

namespace {

struct ImplGuard {
  kernels::Impl saved = kernels::active_impl();
  ~ImplGuard() { kernels::force_impl(saved); }
};

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

}  // namespace

TEST_CASE("kernel results agree across implementations") {
  ImplGuard guard;
  const bool have_avx2 = [] {
    try {
      kernels::force_impl(kernels::Impl::avx2);
      return true;
    } catch (...) {
      return false;
    }
  }();
  if (!have_avx2) return;  // scalar-only host

  Rng rng(20240811);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 64u, 1001u}) {
    auto x = random_vec(n, rng, -30.0, 10.0);
    auto y = random_vec(n, rng, -2.0, 2.0);

    kernels::force_impl(kernels::Impl::scalar);
    const double s_sum = kernels::sum(x);
    const double s_dot = kernels::dot(x, y);
    const double s_max = kernels::max(x);
    const double s_se = kernels::sum_exp_shifted(x, s_max);
    const double s_sq = kernels::sq_dev_sum(x, 1.25);
    const double s_lse = kernels::log_sum_exp(x);

    kernels::force_impl(kernels::Impl::avx2);
    CHECK(kernels::sum(x) == doctest::Approx(s_sum).epsilon(1e-12));
    CHECK(kernels::dot(x, y) == doctest::Approx(s_dot).epsilon(1e-12));
    CHECK(kernels::max(x) == s_max);
    if (n > 0) {
      CHECK(kernels::sum_exp_shifted(x, s_max) == doctest::Approx(s_se).epsilon(1e-12));
      CHECK(kernels::log_sum_exp(x) == doctest::Approx(s_lse).epsilon(1e-12));
    }
    CHECK(kernels::sq_dev_sum(x, 1.25) == doctest::Approx(s_sq).epsilon(1e-12));
  }
}

TEST_CASE("kernels handle extreme exponent spreads") {
  ImplGuard guard;
  std::vector<double> x = {0.0, -700.0, -745.0, -1000.0, -5.0};
  for (auto impl : {kernels::Impl::scalar, kernels::Impl::avx2}) {
    try {
      kernels::force_impl(impl);
    } catch (...) {
      continue;
    }
    // log(e^0 + e^-5 + tiny) ~ log(1 + e^-5)
    CHECK(kernels::log_sum_exp(x) ==
          doctest::Approx(std::log(1.0 + std::exp(-5.0) + std::exp(-700.0))).epsilon(1e-12));
  }
}

TEST_CASE("log_sum_exp known values and shift stability") {
  std::vector<double> two = {std::log(0.2), std::log(0.4)};
  // mean of densities: log((0.2+0.4)/2) = log 0.3 after subtracting log 2
  CHECK(kernels::log_sum_exp(two) - std::log(2.0) ==
        doctest::Approx(std::log(0.3)).epsilon(1e-12));

  Rng rng(7);
  auto x = random_vec(257, rng, -4.0, 4.0);
  const double base = kernels::log_sum_exp(x);
  for (auto& v : x) v += 123.5;
  CHECK(kernels::log_sum_exp(x) - 123.5 == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("splittable rng streams are reproducible and distinct") {
  Rng a(42, 0), b(42, 0), c(42, 1);
  bool any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    if (va != c.next_u64()) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("rng normal moments") {
  Rng rng(123);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("inverse normal cdf reference points") {
  CHECK(inv_phi(0.5) == 0.0);
  CHECK(inv_phi(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(inv_phi(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  CHECK(inv_phi(0.99) == doctest::Approx(2.3263478740408408).epsilon(1e-12));
  CHECK(inv_phi(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-9));
}

TEST_CASE("type-7 quantiles interpolate linearly") {
  std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(v, 0.0) == doctest::Approx(1.0));
  CHECK(quantile(v, 1.0) == doctest::Approx(4.0));
  CHECK(quantile(v, 1.0 / 3.0) == doctest::Approx(2.0));
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
}
