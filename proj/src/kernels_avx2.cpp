#include <cassert>
#include <cmath>
#include <limits>

#include "kernels_detail.hpp"

#if defined(__x86_64__) || defined(__i386__)

#pragma GCC push_options
#pragma GCC target("avx2,fma")

#include <immintrin.h>

namespace odebayes::kernels::detail {

bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, sh));
}

// exp() on 4 doubles: range reduction x = n*ln2 + r, degree-13 Taylor on r,
// then scale by 2^n through the exponent field. Inputs below -708 flush to
// zero; inputs are expected untouched by overflow (callers shift by max).
inline __m256d exp4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d underflow = _mm256_set1_pd(-708.0);

  __m256d zero_mask = _mm256_cmp_pd(x, underflow, _CMP_LT_OQ);
  x = _mm256_max_pd(x, underflow);

  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  __m256d p = _mm256_set1_pd(1.6059043836821613e-10);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.08767569878681e-9));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.505210838544172e-8));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.755731922398589e-7));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985893e-6));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.48015873015873e-5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.984126984126984e-4));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.388888888888889e-3));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(8.333333333333333e-3));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(4.1666666666666664e-2));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.6666666666666666e-1));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  __m256i expo = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  __m256d scale = _mm256_castsi256_pd(expo);

  __m256d out = _mm256_mul_pd(p, scale);
  return _mm256_andnot_pd(zero_mask, out);
}

}  // namespace

double sum_avx2(std::span<const double> x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= x.size(); i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
  double tail = 0.0;
  for (; i < x.size(); ++i) tail += x[i];
  return hsum(acc) + tail;
}

double dot_avx2(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= x.size(); i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i), acc);
  double tail = 0.0;
  for (; i < x.size(); ++i) tail += x[i] * y[i];
  return hsum(acc) + tail;
}

double max_avx2(std::span<const double> x) {
  __m256d acc = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= x.size(); i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x.data() + i));
  double m = hmax(acc);
  for (; i < x.size(); ++i) m = std::fmax(m, x[i]);
  return m;
}

double sum_exp_shifted_avx2(std::span<const double> x, double shift) {
  const __m256d sh = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= x.size(); i += 4)
    acc = _mm256_add_pd(acc, exp4(_mm256_sub_pd(_mm256_loadu_pd(x.data() + i), sh)));
  double tail = 0.0;
  for (; i < x.size(); ++i) tail += std::exp(x[i] - shift);
  return hsum(acc) + tail;
}

double sq_dev_sum_avx2(std::span<const double> x, double center) {
  const __m256d c = _mm256_set1_pd(center);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= x.size(); i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), c);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double tail = 0.0;
  for (; i < x.size(); ++i) {
    const double d = x[i] - center;
    tail += d * d;
  }
  return hsum(acc) + tail;
}

}  // namespace odebayes::kernels::detail

#pragma GCC pop_options

#else  // non-x86 fallback: report unsupported, route to scalar

namespace odebayes::kernels::detail {

bool avx2_supported() { return false; }
double sum_avx2(std::span<const double> x) { return sum_scalar(x); }
double dot_avx2(std::span<const double> x, std::span<const double> y) { return dot_scalar(x, y); }
double max_avx2(std::span<const double> x) { return max_scalar(x); }
double sum_exp_shifted_avx2(std::span<const double> x, double shift) {
  return sum_exp_shifted_scalar(x, shift);
}
double sq_dev_sum_avx2(std::span<const double> x, double center) {
  return sq_dev_sum_scalar(x, center);
}

}  // namespace odebayes::kernels::detail

#endif
