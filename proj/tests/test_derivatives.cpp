#include <cmath>
#include <memory>

#include "doctest.h"
#include "lyaplab/derivatives.hpp"
#include "lyaplab/errors.hpp"
#include "test_support.hpp"

using namespace lyaplab;
using testsupport::thrown_code;

namespace {

const Grouping kUnstable{{1, 1}, 1};
const Grouping kStable{{1, 1}, 0};

FamilySpec cat_family(std::uint64_t seed) {
  FamilySpec fam;
  fam.x = random_divfree(2, seed);
  return fam;
}

// The perturbed cat map frozen at t = 0.1: a nonlinear base with smooth bundles.
const TorusMap& frozen_base() {
  static const TorusMap base = family_map(cat_family(11), 0.1);
  return base;
}

const FramedSplitting& frozen_split(const Grouping& grouping) {
  static const FramedSplitting unstable =
      power_splitting(frozen_base(), exact_splitting(TorusMap::cat_map(), kUnstable), 64);
  static const FramedSplitting stable =
      power_splitting(frozen_base(), exact_splitting(TorusMap::cat_map(), kStable), 64);
  return grouping.target == 1 ? unstable : stable;
}

// Orthonormal chart [E^u | E^s] of the cat map, positively oriented.
Mat cat_chart() {
  const FramedSplitting unstable = exact_splitting(TorusMap::cat_map(), kUnstable);
  Mat chart(2, 2);
  chart.col(0) = unstable.frame(0).col(1);
  chart.col(1) = unstable.frame(0).col(0);
  if (chart.determinant() < 0) chart.col(1) *= -1.0;
  return chart;
}

BumpSpec cat_bump(double radius) {
  BumpSpec spec;
  spec.radius = radius;
  spec.chart = cat_chart();
  spec.center = Vec(2);
  spec.center << 1.0, 2.0;  // not periodic
  return spec.resolved();
}

}  // namespace

TEST_CASE("zero field gives zero derivatives") {
  const TorusMap cat = TorusMap::cat_map();
  const FramedSplitting split = exact_splitting(cat, kUnstable);
  const FieldPtr zero = make_trig_field(TrigField(2, ValueRank::multivector, 1));
  const Quadrature quad = lattice_quadrature(2, 16);
  CHECK(lambda_prime_via_F(split, *zero, quad) == 0.0);
  CHECK(lambda_prime_via_E(split, *zero, quad) == 0.0);
  CHECK(lambda_prime_holder(split, zero, {0.02, 0.01}, 16).value == 0.0);
  const VPrime vp(cat, split, zero, quad);
  CHECK(vp.value(Vec::Constant(2, 0.3)).norm() == 0.0);
  const SecondDerivative second = lambda_second(cat, split, zero, zero, quad);
  CHECK(second.value == 0.0);
}

TEST_CASE("linear automorphism is critical") {
  const TorusMap cat = TorusMap::cat_map();
  for (const Grouping& g : {kUnstable, kStable}) {
    const FramedSplitting split = exact_splitting(cat, g);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const FieldPtr x = make_trig_field(cat_family(seed).x);
      const double via_f = lambda_prime_via_F(split, *x);
      const double via_e = lambda_prime_via_E(split, *x);
      CHECK(std::abs(via_f) < 1e-12);
      CHECK(std::abs(via_e) < 1e-12);
      CHECK(std::abs(via_f - via_e) < 1e-10);
    }
  }
}

TEST_CASE("first derivative on a nonlinear base matches finite differences") {
  const FramedSplitting& split = frozen_split(kUnstable);
  FamilySpec fam;
  fam.base = frozen_base();
  fam.x = random_divfree(2, 3);
  const FieldPtr x = make_trig_field(fam.x);
  const double via_f = lambda_prime_via_F(split, *x);
  const double via_e = lambda_prime_via_E(split, *x);
  const HolderDerivative holder = lambda_prime_holder(split, x);
  CHECK(std::abs(via_f) > 1e-5);
  CHECK(std::abs(via_f - via_e) < 1e-8);
  CHECK(std::abs(holder.value - via_f) < 1e-4);
  CHECK(holder.g0 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(holder.bound_ratio < 1.0);
  CHECK(holder.omega_exponent > 0.9);
  CHECK(holder.v_exponent > 0.9);

  const std::vector<double> ts{-0.01, -0.005, 0.005, 0.01};
  const FdSlope fd = fd_slope(exponent_curve(fam, kUnstable, ts, split.resolution()));
  REQUIRE(fd.steps.size() == 2);
  CHECK(std::abs(fd.extrapolated - via_f) <= 1e-3 * std::abs(via_f));
}

TEST_CASE("first derivative is linear in the field") {
  const FramedSplitting& split = frozen_split(kUnstable);
  const TrigField a = random_divfree(2, 5);
  const TrigField b = random_divfree(2, 6);
  const double sum = lambda_prime_via_F(split, *make_trig_field(a + b));
  const double parts = lambda_prime_via_F(split, *make_trig_field(a)) + lambda_prime_via_F(split, *make_trig_field(b));
  CHECK(std::abs(sum - parts) < 1e-9);
  const double scaled = lambda_prime_via_E(split, *make_trig_field(2.5 * a));
  CHECK(std::abs(scaled - 2.5 * lambda_prime_via_E(split, *make_trig_field(a))) < 1e-9);
}

TEST_CASE("first derivatives of the two bundles cancel") {
  const FieldPtr x = make_trig_field(random_divfree(2, 7));
  const double unstable = lambda_prime_via_F(frozen_split(kUnstable), *x);
  const double stable = lambda_prime_via_F(frozen_split(kStable), *x);
  CHECK(std::abs(unstable) > 1e-6);
  CHECK(std::abs(unstable + stable) < 1e-8);
}

TEST_CASE("grid data without cubic interpolation is rejected") {
  const FramedSplitting split = exact_splitting(TorusMap::cat_map(), kUnstable);
  const FieldPtr x = make_trig_field(random_divfree(2, 1));
  const GridField rough_omega = GridField::sample(TrigField::constant(2, ValueRank::form, 1, split.omega_at(0)), 16, 1);
  const GridField rough_v = GridField::sample(TrigField::constant(2, ValueRank::multivector, 1, split.v_at(0)), 16, 1);
  const GridField omega = split.omega_grid(16);
  const GridField v = split.v_grid(16);
  CHECK(thrown_code([&] { lambda_prime_via_F(rough_omega, v, *x); }) == ErrorCode::NeedsSmoothOmega);
  CHECK(thrown_code([&] { lambda_prime_via_E(omega, rough_v, *x); }) == ErrorCode::NeedsSmoothV);
  CHECK(std::abs(lambda_prime_via_F(omega, v, *x)) < 1e-12);
}

TEST_CASE("derivative of V solves its defining equation") {
  const TorusMap cat = TorusMap::cat_map();
  const FramedSplitting split = exact_splitting(cat, kUnstable);
  const FamilySpec fam = cat_family(1);
  const FieldPtr x = make_trig_field(fam.x);
  const VPrime vp(cat, split, x, lattice_quadrature(2, 32));
  CHECK(vp.terms() > 0);
  CHECK(vp.tail_bound() <= 1e-10);
  CHECK(vp.residual(32) <= 2.0 * vp.tail_bound());
  CHECK(vp.kernel_residual(32) <= 1e-9);

  // (V_t − V)/t against V′ with ω_F held fixed.
  SplittingOptions options;
  options.normalization = Normalization::reference;
  options.reference_omega = split.omega_source();
  const double t = 1e-3;
  const FramedSplitting moved = power_splitting(family_map(fam, t), split, 32, options);
  const GridField lattice = moved.v_grid();
  double worst = 0.0, size = 0.0;
  for (std::size_t i = 0; i < moved.num_points(); ++i) {
    const WVec fd = (moved.v_at(i) - split.v_at(0)) / t;
    const WVec exact = vp.value(lattice.point(i));
    worst = std::max(worst, (fd - exact).cwiseAbs().maxCoeff());
    size = std::max(size, exact.cwiseAbs().maxCoeff());
  }
  CHECK(size > 0.05);
  CHECK(worst <= 1e-4);
}

TEST_CASE("series length cap") {
  const TorusMap cat = TorusMap::cat_map();
  const FramedSplitting split = exact_splitting(cat, kUnstable);
  const FieldPtr x = make_trig_field(random_divfree(2, 1));
  VPrimeOptions options;
  options.max_terms = 3;
  CHECK(thrown_code([&] { VPrime(cat, split, x, lattice_quadrature(2, 16), options); }) == ErrorCode::SeriesTooLong);
}

TEST_CASE("second derivative matches a quadratic fit of the exponent") {
  const TorusMap cat = TorusMap::cat_map();
  const FamilySpec fam = cat_family(2);
  const FieldPtr x = make_trig_field(fam.x);
  const Quadrature quad = lattice_quadrature(2, 64);
  const std::vector<double> ts{-0.04, -0.02, 0.0, 0.02, 0.04};
  for (const Grouping& g : {kUnstable, kStable}) {
    const SecondDerivative second = lambda_second(cat, exact_splitting(cat, g), x, nullptr, quad);
    const FdSecond fd = fd_second(exponent_curve(fam, g, ts, 64));
    CHECK(std::abs(fd.linear) < 1e-6);
    CHECK(std::abs(second.value) > 1e-4);
    CHECK(std::abs(fd.stencil - second.value) <= 0.05 * std::abs(second.value));
    CHECK(std::abs(fd.parabola - second.value) <= 0.05 * std::abs(second.value));
  }
}

TEST_CASE("second derivative is quadratic in X plus linear in Y") {
  const TorusMap cat = TorusMap::cat_map();
  const FramedSplitting split = exact_splitting(cat, kUnstable);
  const FramedSplitting& curved = frozen_split(kUnstable);
  const Quadrature quad = lattice_quadrature(2, 32);
  const TrigField x = random_divfree(2, 8);
  const FieldPtr y = make_trig_field(random_divfree(2, 9));
  const double base = lambda_second(cat, split, make_trig_field(x), nullptr, quad).value;
  for (double c : {2.0, 3.0}) {
    const double scaled = lambda_second(cat, split, make_trig_field(c * x), nullptr, quad).value;
    CHECK(scaled == doctest::Approx(c * c * base).epsilon(1e-9));
  }
  // The Y term vanishes on a linear base; use the curved one.
  const Quadrature own = lattice_quadrature(2, curved.resolution());
  const FieldPtr xf = make_trig_field(x);
  const double without = lambda_second(frozen_base(), curved, xf, nullptr, own).value;
  const double with_y = lambda_second(frozen_base(), curved, xf, y, own).value - without;
  CHECK(std::abs(with_y) > 1e-6);
  for (double c : {2.0, 3.0}) {
    const FieldPtr cy = make_trig_field(c * random_divfree(2, 9));
    const double diff = lambda_second(frozen_base(), curved, xf, cy, own).value - without;
    CHECK(diff == doctest::Approx(c * with_y).epsilon(1e-8));
  }
}

TEST_CASE("second derivatives of the two bundles cancel") {
  const TorusMap cat = TorusMap::cat_map();
  const FieldPtr x = make_trig_field(random_divfree(2, 4));
  const Quadrature quad = lattice_quadrature(2, 32);
  const double unstable = lambda_second(cat, exact_splitting(cat, kUnstable), x, nullptr, quad).value;
  const double stable = lambda_second(cat, exact_splitting(cat, kStable), x, nullptr, quad).value;
  CHECK(std::abs(unstable) > 1e-4);
  CHECK(std::abs(unstable + stable) < 1e-12);
}

TEST_CASE("bump perturbation separates the exponents") {
  const TorusMap cat = TorusMap::cat_map();
  const FramedSplitting unstable = exact_splitting(cat, kUnstable);
  const FramedSplitting stable = exact_splitting(cat, kStable);
  CHECK(return_time(cat, BumpSpec{}.resolved()).periodic);
  for (double r : {0.2, 0.1}) {
    const BumpSpec spec = cat_bump(r);
    CHECK_FALSE(return_time(cat, spec).periodic);
    const auto field = std::make_shared<BumpField>(spec);
    const Quadrature quad = support_quadrature(*field, 16);
    const double k = bump_K(spec);
    const double top = lambda_second(cat, unstable, field, nullptr, quad).value;
    const double middle = lambda_second(cat, stable, field, nullptr, quad).value;
    CHECK(top < 0.0);
    CHECK(middle > 0.0);
    CHECK(top / (r * r) == doctest::Approx(-k).epsilon(0.15));
    CHECK(middle / (r * r) == doctest::Approx(k).epsilon(0.15));
  }

  // Independent oracle: λ(t) of cat ∘ φ_t from power iteration on a lattice.
  const double r = 0.2;
  const auto field = std::make_shared<BumpField>(cat_bump(r));
  ExponentCurve curve;
  for (double t : {-0.04, -0.02, 0.0, 0.02, 0.04}) {
    ExponentSample s;
    s.t = t;
    s.lambda = lyapunov_exponent(power_splitting(cat.then_flow(field, t), unstable, 128));
    curve.samples.push_back(s);
  }
  const double formula = lambda_second(cat, unstable, field, nullptr, support_quadrature(*field, 16)).value;
  CHECK(fd_second(curve).stencil == doctest::Approx(formula).epsilon(0.02));
}
