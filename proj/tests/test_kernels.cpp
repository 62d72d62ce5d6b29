#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "lyaplab/kernels.hpp"

using namespace lyaplab::kernels;

namespace {

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
    if (isa_available(isa)) out.push_back(isa);
  return out;
}

std::vector<double> random_values(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng) * std::pow(10.0, 6 * u(rng));
  return x;
}

}  // namespace

TEST_CASE("pairwise sum of integers is exact") {
  for (std::size_t n : {0u, 1u, 3u, 4u, 63u, 64u, 65u, 1000u, 4099u}) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i + 1);
    for (Isa isa : available()) CHECK(pairwise_sum(x, isa) == n * (n + 1) / 2.0);
  }
}

TEST_CASE("SIMD reductions are bit-identical to the scalar reference") {
  for (std::size_t n : {1u, 5u, 64u, 129u, 1023u, 65536u + 7u}) {
    const auto x = random_values(n, 17 + n);
    const double ref = pairwise_sum(x, Isa::scalar);
    const double ref_sq = pairwise_sum_squares(x, Isa::scalar);
    for (Isa isa : available()) {
      CAPTURE(isa_name(isa));
      CHECK(pairwise_sum(x, isa) == ref);
      CHECK(pairwise_sum_squares(x, isa) == ref_sq);
    }
  }
}

TEST_CASE("pairwise sum stays accurate on cancelling data") {
  std::vector<double> x;
  for (int i = 0; i < 100000; ++i) {
    x.push_back(1e8 + 0.1);
    x.push_back(-1e8);
  }
  const double pair_value = (1e8 + 0.1) - 1e8;  // exact in binary64
  const double exact = 100000 * pair_value;
  // tree summation: error below eps * log2(n) * sum|x|
  const double bound = 2.2e-16 * 18 * 2e13;
  CHECK(std::abs(pairwise_sum(x) - exact) <= bound);
}

TEST_CASE("complex kernels agree across variants") {
  const std::size_t n = 1001;
  const auto re = random_values(2 * n, 3);
  const auto im = random_values(2 * n, 4);
  std::vector<std::complex<double>> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = {re[i], im[i]};
    b[i] = {re[n + i], im[n + i]};
  }
  std::vector<std::complex<double>> ref(n), out(n);
  std::vector<double> ref_abs(n), out_abs(n);
  complex_mul_scaled(a, b, 2.5, ref, Isa::scalar);
  complex_abs(a, ref_abs, Isa::scalar);
  for (std::size_t i = 0; i < n; ++i) {
    const std::complex<double> want = 2.5 * (a[i] * b[i]);
    CHECK(std::abs(ref[i] - want) <= 1e-15 * std::abs(want) + 1e-300);
    CHECK(ref_abs[i] == doctest::Approx(std::abs(a[i])).epsilon(1e-15));
  }
  for (Isa isa : available()) {
    complex_mul_scaled(a, b, 2.5, out, isa);
    complex_abs(a, out_abs, isa);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(out[i] == ref[i]);
      CHECK(out_abs[i] == ref_abs[i]);
    }
  }
}

TEST_CASE("forced ISA is honoured") {
  const Isa before = active_isa();
  force_isa(Isa::scalar);
  CHECK(active_isa() == Isa::scalar);
  force_isa(before);
  CHECK(active_isa() == before);
}
