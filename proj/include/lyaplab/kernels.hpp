#pragma once
// Bulk numeric kernels: reductions and elementwise complex arithmetic.
//
// Every kernel exists as a scalar reference and as SIMD variants. The variants
// perform the same floating-point operations in the same order, so results are
// bit-identical to the reference (the build disables FP contraction).
#include <complex>
#include <span>
#include <string_view>

namespace lyaplab::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);

// Best available ISA, unless overridden by LYAPLAB_SIMD=scalar|avx2|neon.
Isa active_isa();
// Test hook; throws std::invalid_argument if the ISA is not available.
void force_isa(Isa isa);

// Deterministic tree summation.
double pairwise_sum(std::span<const double> x);
double pairwise_sum(std::span<const double> x, Isa isa);

// Tree sum of x[i]^2.
double pairwise_sum_squares(std::span<const double> x);
double pairwise_sum_squares(std::span<const double> x, Isa isa);

// out[i] = scale * a[i] * b[i]
void complex_mul_scaled(std::span<const std::complex<double>> a,
                        std::span<const std::complex<double>> b, double scale,
                        std::span<std::complex<double>> out);
void complex_mul_scaled(std::span<const std::complex<double>> a,
                        std::span<const std::complex<double>> b, double scale,
                        std::span<std::complex<double>> out, Isa isa);

// out[i] = |a[i]|
void complex_abs(std::span<const std::complex<double>> a, std::span<double> out);
void complex_abs(std::span<const std::complex<double>> a, std::span<double> out, Isa isa);

}  // namespace lyaplab::kernels
