#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "lyaplab/kernels.hpp"
#include "variants.hpp"

namespace lyaplab::kernels {
namespace {

using detail::kLeafSize;
using detail::Variant;

const Variant& variant_for(Isa isa) {
  switch (isa) {
#ifdef LYAPLAB_HAVE_AVX2
    case Isa::avx2:
      return detail::avx2_variant();
#endif
#ifdef LYAPLAB_HAVE_NEON
    case Isa::neon:
      return detail::neon_variant();
#endif
    default:
      return detail::scalar_variant();
  }
}

Isa detect() {
  if (const char* env = std::getenv("LYAPLAB_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && isa_available(Isa::avx2)) return Isa::avx2;
    if (want == "neon" && isa_available(Isa::neon)) return Isa::neon;
  }
  if (isa_available(Isa::avx2)) return Isa::avx2;
  if (isa_available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

std::atomic<int>& forced() {
  static std::atomic<int> value{-1};
  return value;
}

template <class Leaf>
double tree(const double* x, std::size_t n, Leaf leaf) {
  if (n <= kLeafSize) return leaf(x, n);
  const std::size_t half = n / 2;
  return tree(x, half, leaf) + tree(x + half, n - half, leaf);
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
    default:
      return "scalar";
  }
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#ifdef LYAPLAB_HAVE_AVX2
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#ifdef LYAPLAB_HAVE_NEON
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  const int f = forced().load();
  if (f >= 0) return static_cast<Isa>(f);
  static const Isa detected = detect();
  return detected;
}

void force_isa(Isa isa) {
  if (!isa_available(isa))
    throw std::invalid_argument("ISA not available: " + std::string(isa_name(isa)));
  forced().store(static_cast<int>(isa));
}

double pairwise_sum(std::span<const double> x, Isa isa) {
  return tree(x.data(), x.size(), variant_for(isa).block_sum);
}
double pairwise_sum(std::span<const double> x) { return pairwise_sum(x, active_isa()); }

double pairwise_sum_squares(std::span<const double> x, Isa isa) {
  return tree(x.data(), x.size(), variant_for(isa).block_sum_squares);
}
double pairwise_sum_squares(std::span<const double> x) {
  return pairwise_sum_squares(x, active_isa());
}

void complex_mul_scaled(std::span<const std::complex<double>> a,
                        std::span<const std::complex<double>> b, double scale,
                        std::span<std::complex<double>> out, Isa isa) {
  if (a.size() != b.size() || a.size() != out.size())
    throw std::invalid_argument("complex_mul_scaled: length mismatch");
  variant_for(isa).complex_mul_scaled(reinterpret_cast<const double*>(a.data()),
                                      reinterpret_cast<const double*>(b.data()), scale,
                                      reinterpret_cast<double*>(out.data()), a.size());
}
void complex_mul_scaled(std::span<const std::complex<double>> a,
                        std::span<const std::complex<double>> b, double scale,
                        std::span<std::complex<double>> out) {
  complex_mul_scaled(a, b, scale, out, active_isa());
}

void complex_abs(std::span<const std::complex<double>> a, std::span<double> out, Isa isa) {
  if (a.size() != out.size()) throw std::invalid_argument("complex_abs: length mismatch");
  variant_for(isa).complex_abs(reinterpret_cast<const double*>(a.data()), out.data(),
                               a.size());
}
void complex_abs(std::span<const std::complex<double>> a, std::span<double> out) {
  complex_abs(a, out, active_isa());
}

}  // namespace lyaplab::kernels
