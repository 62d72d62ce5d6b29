#pragma once
#include <cstddef>

// Leaf routines of each ISA. A "block" is at most kLeafSize values; the four
// accumulators take indices i mod 4 and are combined as (a0+a1)+(a2+a3),
// then the tail is added left to right.
namespace lyaplab::kernels::detail {

inline constexpr std::size_t kLeafSize = 64;

struct Variant {
  double (*block_sum)(const double*, std::size_t);
  double (*block_sum_squares)(const double*, std::size_t);
  void (*complex_mul_scaled)(const double*, const double*, double, double*, std::size_t);
  void (*complex_abs)(const double*, double*, std::size_t);
};

const Variant& scalar_variant();
#ifdef LYAPLAB_HAVE_AVX2
const Variant& avx2_variant();
#endif
#ifdef LYAPLAB_HAVE_NEON
const Variant& neon_variant();
#endif

}  // namespace lyaplab::kernels::detail
