#pragma once

#include <span>
#include <string>

namespace odebayes::kernels {

/// Reduction kernels behind the diagnostics/evaluation hot loops. A scalar
/// reference implementation always exists; on x86-64 an AVX2+FMA variant is
/// selected at runtime when the CPU supports it. The two variants are
/// equivalence-tested against each other; they may differ by reassociation
/// rounding only.
enum class Impl { scalar, avx2 };

/// Active implementation. Resolved once: the ODEBAYES_KERNELS environment
/// variable ("scalar" or "avx2") wins, otherwise the best supported variant.
Impl active_impl();
std::string impl_name();

/// Test hook; throws if the requested variant is unsupported on this CPU.
void force_impl(Impl impl);

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double max(std::span<const double> x);
/// Sum of exp(x[i] - shift).
double sum_exp_shifted(std::span<const double> x, double shift);
/// Sum of (x[i] - center)^2.
double sq_dev_sum(std::span<const double> x, double center);

/// log(sum(exp(x))) with max shift; -inf on empty input.
double log_sum_exp(std::span<const double> x);

}  // namespace odebayes::kernels
