#pragma once

#include <span>

namespace odebayes::kernels::detail {

double sum_scalar(std::span<const double> x);
double dot_scalar(std::span<const double> x, std::span<const double> y);
double max_scalar(std::span<const double> x);
double sum_exp_shifted_scalar(std::span<const double> x, double shift);
double sq_dev_sum_scalar(std::span<const double> x, double center);

bool avx2_supported();

double sum_avx2(std::span<const double> x);
double dot_avx2(std::span<const double> x, std::span<const double> y);
double max_avx2(std::span<const double> x);
double sum_exp_shifted_avx2(std::span<const double> x, double shift);
double sq_dev_sum_avx2(std::span<const double> x, double center);

}  // namespace odebayes::kernels::detail
