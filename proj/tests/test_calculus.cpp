#include <cmath>

#include "doctest.h"
#include "lyaplab/calculus.hpp"
#include "lyaplab/errors.hpp"
#include "test_support.hpp"

using namespace lyaplab;

namespace {

double max_coef_diff(const TrigField& a, const TrigField& b) { return testsupport::max_coefficient(a - b); }

}  // namespace

TEST_CASE("Lie derivative closed forms") {
  const TrigField c = TrigField::vector({TrigPoly::constant(2, 0.4), TrigPoly::constant(2, -1.0)});
  WVec dx1(2);
  dx1 << 1.0, 0.0;
  const TrigField omega = TrigField::constant(2, ValueRank::form, 1, dx1);
  CHECK(lie_derivative(c, omega).total_terms() == 0);

  TrigPoly h(2);  // sin x₁ sin x₂ = ½cos(x₁−x₂) − ½cos(x₁+x₂)
  h.add({1, -1}, 0.5, 0.0);
  h.add({1, 1}, -0.5, 0.0);
  const TrigField x = testsupport::hamiltonian_field(h);
  const TrigField got = lie_derivative(x, omega);
  // expected: −cos x₁ cos x₂ dx₁ + sin x₁ sin x₂ dx₂
  TrigPoly cc(2);
  cc.add({1, 1}, -0.5, 0.0);
  cc.add({1, -1}, -0.5, 0.0);
  TrigField want(2, ValueRank::form, 1);
  want[0] = cc;
  want[1] = h;
  CHECK(max_coef_diff(got, want) <= 1e-15);
}

TEST_CASE("Leibniz rule for scalar multiples") {
  std::mt19937_64 rng(21);
  for (auto rank : {ValueRank::form, ValueRank::multivector}) {
    const TrigField x = testsupport::random_field(3, ValueRank::multivector, 1, 2, 3, rng);
    const TrigField w = testsupport::random_field(3, rank, 2, 2, 3, rng);
    const TrigPoly f = testsupport::random_poly(3, 2, 3, rng);
    const TrigField lhs = lie_derivative(x, w.times(f));
    const TrigPoly xf = lie_derivative(x, TrigField::scalar(f))[0];
    const TrigField rhs = w.times(xf) + lie_derivative(x, w).times(f);
    CHECK(max_coef_diff(lhs, rhs) <= 1e-12);
  }
}

TEST_CASE("exactness identities") {
  std::mt19937_64 rng(22);
  for (int d = 2; d <= 4; ++d) {
    const TrigField g = TrigField::scalar(testsupport::random_poly(d, 2, 4, rng));
    const TrigField x = testsupport::random_field(d, ValueRank::multivector, 1, 2, 3, rng);
    const TrigField w = testsupport::random_field(d, ValueRank::form, 1, 2, 3, rng);
    CHECK(testsupport::max_coefficient(exterior_derivative(exterior_derivative(g))) <= 1e-13);
    CHECK(testsupport::max_coefficient(exterior_derivative(exterior_derivative(w))) <= 1e-13);
    CHECK(max_coef_diff(lie_derivative(x, exterior_derivative(g)),
                        exterior_derivative(lie_derivative(x, g))) <= 1e-13);
    // Cartan: L_X ω = i_X dω + d i_X ω
    for (int k = 1; k <= d; ++k) {
      const TrigField wk = testsupport::random_field(d, ValueRank::form, k, 2, 2, rng);
      const TrigField cartan = interior_product(x, exterior_derivative(wk)).degree() == k
                                   ? interior_product(x, exterior_derivative(wk)) + exterior_derivative(interior_product(x, wk))
                                   : exterior_derivative(interior_product(x, wk));
      CHECK(max_coef_diff(lie_derivative(x, wk), cartan) <= 1e-12);
    }
  }
}

TEST_CASE("Lie derivative respects the pairing") {
  std::mt19937_64 rng(23);
  for (int k = 1; k <= 3; ++k) {
    const TrigField x = testsupport::random_field(3, ValueRank::multivector, 1, 2, 2, rng);
    const TrigField w = testsupport::random_field(3, ValueRank::form, k, 1, 2, rng);
    const TrigField v = testsupport::random_field(3, ValueRank::multivector, k, 1, 2, rng);
    const TrigField lhs = lie_derivative(x, pair(w, v));
    const TrigField rhs = pair(lie_derivative(x, w), v) + pair(w, lie_derivative(x, v));
    CHECK(max_coef_diff(lhs, rhs) <= 1e-12);
  }
  // vector fields: L_X V = [X, V]
  const TrigField x = testsupport::random_field(2, ValueRank::multivector, 1, 2, 2, rng);
  const TrigField v = testsupport::random_field(2, ValueRank::multivector, 1, 2, 2, rng);
  const TrigField g = TrigField::scalar(testsupport::random_poly(2, 2, 3, rng));
  // [X,V] g = X(V g) − V(X g)
  auto apply = [](const TrigField& f, const TrigField& s) { return lie_derivative(f, s); };
  const TrigField lhs = apply(lie_derivative(x, v), g);
  const TrigField rhs = apply(x, apply(v, g)) - apply(v, apply(x, g));
  CHECK(max_coef_diff(lhs, rhs) <= 1e-12);
}

TEST_CASE("pairing of dual bases and simple elements") {
  WVec e(1);
  e << 1.0;
  const TrigField area = TrigField::constant(2, ValueRank::form, 2, e);
  const TrigField v12 = TrigField::constant(2, ValueRank::multivector, 2, e);
  CHECK(pair(area, v12)[0].mean() == 1.0);
  CHECK(pair(area, -1.0 * v12)[0].mean() == -1.0);  // ∂₂∧∂₁ = −∂₁∧∂₂

  std::mt19937_64 rng(24);
  const TrigField a1 = testsupport::random_field(2, ValueRank::form, 1, 1, 2, rng);
  const TrigField a2 = testsupport::random_field(2, ValueRank::form, 1, 1, 2, rng);
  const TrigField v1 = testsupport::random_field(2, ValueRank::multivector, 1, 1, 2, rng);
  const TrigField v2 = testsupport::random_field(2, ValueRank::multivector, 1, 1, 2, rng);
  const TrigField omega = wedge(a1, a2);
  const GridField og = GridField::sample(omega, 32);
  GridField vg(2, 32, ValueRank::multivector, 2);
  for (std::size_t i = 0; i < vg.num_points(); ++i) {
    Mat cols(2, 2);
    cols.col(0) = v1(vg.point(i));
    cols.col(1) = v2(vg.point(i));
    vg.set(i, wedge_columns(cols));
  }
  const GridField pg = pair(og, vg);
  for (std::size_t i = 0; i < pg.num_points(); i += 37) {
    const Vec p = pg.point(i);
    Mat gram(2, 2);
    gram << a1(p).dot(v1(p)), a1(p).dot(v2(p)), a2(p).dot(v1(p)), a2(p).dot(v2(p));
    CHECK(pg.value(i, 0) == doctest::Approx(gram.determinant()).epsilon(1e-12));
  }
  CHECK_THROWS_AS(pair(a1, v12), LabError);
}

TEST_CASE("duality of pullback and pushforward converges at interpolation order") {
  std::mt19937_64 rng(25);
  const TrigField x = testsupport::hamiltonian_field(testsupport::random_poly(2, 1, 3, rng, 0.2));
  const TorusMap phi = TorusMap::identity(2).then_flow(make_trig_field(x), 0.5);
  const TrigField w = testsupport::random_field(2, ValueRank::form, 1, 2, 3, rng);
  const TrigField v = testsupport::random_field(2, ValueRank::multivector, 1, 2, 3, rng);
  for (int order : {1, 3}) {
    double err[2];
    for (int r = 0; r < 2; ++r) {
      const int n = 32 << r;
      const GridField wg = GridField::sample(w, n, order), vg = GridField::sample(v, n, order);
      const GridField lhs = pair(pullback_form(phi, wg), vg);
      const GridField rhs = pair(wg, pushforward_multivector(phi, vg));
      double e = 0;
      for (std::size_t i = 0; i < lhs.num_points(); ++i)
        e = std::max(e, std::abs(lhs.value(i, 0) - rhs.interpolate(phi.apply(lhs.point(i)))(0)));
      err[r] = e;
    }
    CAPTURE(order);
    CHECK(err[0] / err[1] >= std::pow(2.0, order) - 0.5);
  }
}

TEST_CASE("divergence-free flows preserve the lattice average") {
  std::mt19937_64 rng(26);
  const TrigField x = testsupport::hamiltonian_field(testsupport::random_poly(2, 2, 4, rng, 0.3));
  CHECK(testsupport::max_coefficient(divergence(x)) <= 1e-15);
  const TrigField g = TrigField::scalar(testsupport::random_poly(2, 3, 5, rng));
  const TorusMap phi = TorusMap::identity(2).then_flow(make_trig_field(x), 0.8);
  CHECK(std::abs(torus_integrate(compose(g, phi, 64)) - torus_integrate(g)) <= 1e-9);
}

TEST_CASE("pullback expansions: first order and flow approximation") {
  std::mt19937_64 rng(27);
  const TrigField x = testsupport::hamiltonian_field(testsupport::random_poly(2, 2, 3, rng, 0.3));
  const TrigField y = testsupport::hamiltonian_field(testsupport::random_poly(2, 2, 3, rng, 0.3));
  const TrigField w = testsupport::random_field(2, ValueRank::form, 1, 2, 3, rng);
  const int n = 32;
  const GridField w0 = GridField::sample(w, n);
  const GridField lxw = GridField::sample(lie_derivative(x, w), n);
  auto h = [&](double t) {
    return TorusMap::identity(2).then_flow(make_trig_field(y), 0.5 * t * t).then_flow(make_trig_field(x), t);
  };
  auto phi = [&](double t) { return TorusMap::identity(2).then_flow(make_trig_field(x), t); };
  auto sup = [](const GridField& a, const GridField& b, double scale) {
    double e = 0;
    for (std::size_t i = 0; i < a.num_points(); ++i)
      for (int c = 0; c < a.num_components(); ++c) e = std::max(e, std::abs((a.value(i, c) - b.value(i, c)) * scale));
    return e;
  };
  double first[2], approx[2];
  for (int r = 0; r < 2; ++r) {
    const double t = 0.02 / (1 << r);
    const GridField ht = pullback_form(h(t), w, n);
    GridField diff(2, n, ValueRank::form, 1);
    for (std::size_t i = 0; i < diff.num_points(); ++i)
      diff.set(i, (ht.at(i) - w0.at(i)) / t);
    first[r] = sup(diff, lxw, 1.0);
    approx[r] = sup(ht, pullback_form(phi(t), w, n), 1.0);
  }
  CHECK(first[0] / first[1] >= 1.9);
  CHECK(approx[0] / approx[1] >= 3.5);

  const GridField lxw_grid = lie_derivative(TrigVectorField(x), GridField::sample(w, 64));
  const GridField lxw64 = GridField::sample(lie_derivative(x, w), 64);
  CHECK(sup(lxw_grid, lxw64, 1.0) <= 1e-3);
  CHECK_THROWS_AS(lie_derivative(TrigVectorField(x), GridField::sample(w, 64, 1)), LabError);
}
