#include <immintrin.h>

#include <cmath>

#include "variants.hpp"

namespace lyaplab::kernels::detail {
namespace {

double horizontal(__m256d acc) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double block_sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = horizontal(acc);
  for (std::size_t i = body; i < n; ++i) s += x[i];
  return s;
}

double block_sum_squares(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s = horizontal(acc);
  for (std::size_t i = body; i < n; ++i) s += x[i] * x[i];
  return s;
}

// Two complex numbers per register: [r0 i0 r1 i1].
void complex_mul_scaled(const double* a, const double* b, double scale, double* out,
                        std::size_t n) {
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(a + 2 * i);
    const __m256d vb = _mm256_loadu_pd(b + 2 * i);
    const __m256d ar = _mm256_unpacklo_pd(va, va);  // r0 r0 r1 r1
    const __m256d ai = _mm256_unpackhi_pd(va, va);  // i0 i0 i1 i1
    const __m256d bswap = _mm256_permute_pd(vb, 0b0101);  // i r i r
    const __m256d t1 = _mm256_mul_pd(ar, vb);     // ar*br ar*bi
    const __m256d t2 = _mm256_mul_pd(ai, bswap);  // ai*bi ai*br
    const __m256d prod = _mm256_addsub_pd(t1, t2);
    _mm256_storeu_pd(out + 2 * i, _mm256_mul_pd(s, prod));
  }
  for (; i < n; ++i) {
    const double ar = a[2 * i], ai = a[2 * i + 1];
    const double br = b[2 * i], bi = b[2 * i + 1];
    out[2 * i] = scale * (ar * br - ai * bi);
    out[2 * i + 1] = scale * (ar * bi + ai * br);
  }
}

void complex_abs(const double* a, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d v = _mm256_loadu_pd(a + 2 * i);
    const __m256d sq = _mm256_mul_pd(v, v);
    const __m256d sum = _mm256_hadd_pd(sq, sq);  // r0²+i0² (x2), r1²+i1² (x2)
    const __m256d root = _mm256_sqrt_pd(sum);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, root);
    out[i] = lanes[0];
    out[i + 1] = lanes[2];
  }
  for (; i < n; ++i) {
    const double re = a[2 * i], im = a[2 * i + 1];
    out[i] = std::sqrt(re * re + im * im);
  }
}

}  // namespace

const Variant& avx2_variant() {
  static const Variant v{block_sum, block_sum_squares, complex_mul_scaled, complex_abs};
  return v;
}

}  // namespace lyaplab::kernels::detail
