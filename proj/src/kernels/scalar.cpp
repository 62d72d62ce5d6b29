#include <cmath>

#include "variants.hpp"

namespace lyaplab::kernels::detail {
namespace {

double block_sum(const double* x, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4)
    for (std::size_t l = 0; l < 4; ++l) acc[l] += x[i + l];
  double s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = body; i < n; ++i) s += x[i];
  return s;
}

double block_sum_squares(const double* x, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4)
    for (std::size_t l = 0; l < 4; ++l) acc[l] += x[i + l] * x[i + l];
  double s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = body; i < n; ++i) s += x[i] * x[i];
  return s;
}

void complex_mul_scaled(const double* a, const double* b, double scale, double* out,
                        std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[2 * i], ai = a[2 * i + 1];
    const double br = b[2 * i], bi = b[2 * i + 1];
    out[2 * i] = scale * (ar * br - ai * bi);
    out[2 * i + 1] = scale * (ar * bi + ai * br);
  }
}

void complex_abs(const double* a, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double re = a[2 * i], im = a[2 * i + 1];
    out[i] = std::sqrt(re * re + im * im);
  }
}

}  // namespace

const Variant& scalar_variant() {
  static const Variant v{block_sum, block_sum_squares, complex_mul_scaled, complex_abs};
  return v;
}

}  // namespace lyaplab::kernels::detail
