#include <cmath>

#include "doctest.h"
#include "lyaplab/calculus.hpp"
#include "lyaplab/flow.hpp"
#include "lyaplab/torus_map.hpp"
#include "test_support.hpp"

using namespace lyaplab;

namespace {

Vec pt(double a, double b) {
  Vec p(2);
  p << a, b;
  return p;
}

TrigField shear() {
  TrigPoly s(2);
  s.add({0, 1}, 0.0, 1.0);  // sin x₂
  return TrigField::vector({s, TrigPoly(2)});
}

}  // namespace

TEST_CASE("constant fields translate exactly") {
  TrigField c = TrigField::vector({TrigPoly::constant(2, 0.3), TrigPoly::constant(2, -0.2)});
  const Vec q = flow_integrate(c, 2.0, pt(1.0, 1.0));
  CHECK(q(0) == doctest::Approx(1.6).epsilon(1e-14));
  CHECK(q(1) == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("shear flow matches its closed form with Jacobian") {
  const Flow flow(make_trig_field(shear()));
  for (double t : {0.01, 0.3, 1.0, -0.7}) {
    const Vec p = pt(2.0, 0.9);
    Mat j;
    const Vec q = flow.lift(p, t, &j);
    CHECK(std::abs(q(0) - (p(0) + t * std::sin(p(1)))) <= 1e-12);
    CHECK(std::abs(q(1) - p(1)) <= 1e-15);
    CHECK(std::abs(j(0, 1) - t * std::cos(p(1))) <= 1e-12);
    CHECK(std::abs(j(0, 0) - 1.0) <= 1e-14);
  }
}

TEST_CASE("Hamiltonian flows conserve the Hamiltonian and reverse in time") {
  std::mt19937_64 rng(12);
  const TrigPoly h = testsupport::random_poly(2, 2, 4, rng, 0.3);
  const TrigField x = testsupport::hamiltonian_field(h);
  const Flow flow(make_trig_field(x));
  for (auto p : {pt(0.5, 0.5), pt(3.0, 5.0), pt(6.0, 1.0)}) {
    const Vec q = flow.map(p, 1.0);
    CHECK(std::abs(h(q) - h(p)) <= 1e-10);
    const Vec back = flow.map(q, -1.0);
    CHECK(torus_delta(back, p).norm() <= 1e-11);
    Mat j;
    flow.map(p, 0.5, &j);
    CHECK(std::abs(j.determinant() - 1.0) <= 1e-11);  // divergence-free
    const double e = 1e-6;
    for (int c = 0; c < 2; ++c) {
      Vec dp = Vec::Zero(2);
      dp(c) = e;
      const Vec fd = (flow.lift(p + dp, 0.5) - flow.lift(p - dp, 0.5)) / (2 * e);
      CHECK((fd - j.col(c)).norm() <= 1e-8);
    }
  }
}

TEST_CASE("step control meets the per-unit-time tolerance") {
  std::mt19937_64 rng(13);
  const TrigField x = testsupport::hamiltonian_field(testsupport::random_poly(2, 3, 5, rng, 0.5));
  const Flow flow(make_trig_field(x));
  const Vec p = pt(1.0, 2.0);
  const double t = 1.0;
  const Vec coarse = flow.lift(p, t);
  const Flow fine(make_trig_field(x), FlowOptions{1e-15, 0.25, 1e-6});
  CHECK(fine.step() < flow.step());
  CHECK((coarse - fine.lift(p, t)).norm() <= 1e-10);
}

TEST_CASE("tabulated flow map reproduces the flow on and off the lattice") {
  std::mt19937_64 rng(14);
  const TrigField x = testsupport::hamiltonian_field(testsupport::random_poly(2, 2, 4, rng, 0.2));
  const TorusMap tab = flow_map(x, 0.3, 64);
  for (std::size_t i : {0u, 17u, 1234u}) {
    GridField probe(2, 64, ValueRank::scalar, 0);
    const Vec p = probe.point(i);
    CHECK(torus_delta(tab.apply(p), flow_integrate(x, 0.3, p)).norm() <= 1e-13);
  }
  const Vec off = pt(1.111, 2.222);
  CHECK(torus_delta(tab.apply(off), flow_integrate(x, 0.3, off)).norm() <= 1e-5);
}

TEST_CASE("torus maps: inverse and Jacobian of composite stages") {
  std::mt19937_64 rng(15);
  const TrigField x = testsupport::hamiltonian_field(testsupport::random_poly(2, 2, 3, rng, 0.1));
  const TrigField delta = testsupport::random_field(2, ValueRank::multivector, 1, 1, 2, rng, 0.05);
  const TorusMap f = TorusMap::cat_map().then_flow(make_trig_field(x), 0.4).then_displacement(delta);
  for (auto p : {pt(0.2, 0.3), pt(4.0, 1.0)}) {
    Mat j, jinv;
    const Vec q = f.apply(p, &j);
    const Vec back = f.inverse(q, &jinv);
    CHECK(torus_delta(back, p).norm() <= 1e-11);
    CHECK((j - jinv).norm() <= 1e-10);
    const double e = 1e-6;
    for (int c = 0; c < 2; ++c) {
      Vec dp = Vec::Zero(2);
      dp(c) = e;
      const Vec fd = torus_delta(f.apply(p + dp), f.apply(p - dp)) / (2 * e);
      CHECK((fd - j.col(c)).norm() <= 1e-7);
    }
  }
  const TrigField big = testsupport::random_field(2, ValueRank::multivector, 1, 3, 3, rng, 2.0);
  CHECK_THROWS(TorusMap::cat_map().then_displacement(big));
}

