#include <arm_neon.h>

#include <cmath>

#include "variants.hpp"

namespace lyaplab::kernels::detail {
namespace {

// Two float64x2 accumulators give the same four lanes as the scalar layout.
double block_sum(const double* x, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    lo = vaddq_f64(lo, vld1q_f64(x + i));
    hi = vaddq_f64(hi, vld1q_f64(x + i + 2));
  }
  double s = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
             (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (std::size_t i = body; i < n; ++i) s += x[i];
  return s;
}

double block_sum_squares(const double* x, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    const float64x2_t a = vld1q_f64(x + i), b = vld1q_f64(x + i + 2);
    lo = vaddq_f64(lo, vmulq_f64(a, a));
    hi = vaddq_f64(hi, vmulq_f64(b, b));
  }
  double s = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
             (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (std::size_t i = body; i < n; ++i) s += x[i] * x[i];
  return s;
}

void complex_mul_scaled(const double* a, const double* b, double scale, double* out,
                        std::size_t n) {
  const float64x2_t s = vdupq_n_f64(scale);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t va = vld1q_f64(a + 2 * i), vb = vld1q_f64(b + 2 * i);
    const float64x2_t ar = vdupq_laneq_f64(va, 0), ai = vdupq_laneq_f64(va, 1);
    const float64x2_t t1 = vmulq_f64(ar, vb);                  // ar*br ar*bi
    const float64x2_t t2 = vmulq_f64(ai, vextq_f64(vb, vb, 1));  // ai*bi ai*br
    const double re = vgetq_lane_f64(t1, 0) - vgetq_lane_f64(t2, 0);
    const double im = vgetq_lane_f64(t1, 1) + vgetq_lane_f64(t2, 1);
    vst1q_f64(out + 2 * i, vmulq_f64(s, float64x2_t{re, im}));
  }
}

void complex_abs(const double* a, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t v = vld1q_f64(a + 2 * i);
    const float64x2_t sq = vmulq_f64(v, v);
    out[i] = std::sqrt(vgetq_lane_f64(sq, 0) + vgetq_lane_f64(sq, 1));
  }
}

}  // namespace

const Variant& neon_variant() {
  static const Variant v{block_sum, block_sum_squares, complex_mul_scaled, complex_abs};
  return v;
}

}  // namespace lyaplab::kernels::detail
