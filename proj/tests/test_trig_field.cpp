#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "lyaplab/errors.hpp"
#include "lyaplab/trig_field.hpp"
#include "test_support.hpp"

using namespace lyaplab;

namespace {

Vec pt(double a, double b) {
  Vec p(2);
  p << a, b;
  return p;
}

}  // namespace

TEST_CASE("canonical frequencies merge conjugate harmonics") {
  TrigPoly f(2);
  f.add({1, -2}, 1.0, 0.5);
  f.add({-1, 2}, 2.0, 0.5);  // cos is even, sin odd
  REQUIRE(f.size() == 1);
  const auto& [k, h] = *f.terms().begin();
  CHECK(k[0] == 1);
  CHECK(h.c == 3.0);
  CHECK(h.s == 0.0);
  CHECK(f.empty() == false);
  f.add({1, -2}, -3.0, 0.0);
  CHECK(f.empty());
}

TEST_CASE("evaluation, derivative and products agree with pointwise calculus") {
  std::mt19937_64 rng(1);
  const TrigPoly f = testsupport::random_poly(2, 3, 6, rng);
  const TrigPoly g = testsupport::random_poly(2, 2, 5, rng);
  const TrigPoly fg = f * g;
  const double h = 1e-6;
  for (auto p : {pt(0.3, 1.1), pt(4.0, 2.5), pt(6.1, 0.0)}) {
    CHECK(fg(p) == doctest::Approx(f(p) * g(p)).epsilon(1e-12));
    for (int j = 0; j < 2; ++j) {
      Vec e = Vec::Zero(2);
      e(j) = h;
      const double fd = (f(p + e) - f(p - e)) / (2 * h);
      CHECK(f.partial(j)(p) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
  CHECK(mean_of_product(f, g) == doctest::Approx(fg.mean()).epsilon(1e-14));
}

TEST_CASE("linear composition transforms frequencies by the transpose") {
  std::mt19937_64 rng(2);
  const TrigPoly f = testsupport::random_poly(2, 3, 5, rng);
  Eigen::Matrix<std::int64_t, -1, -1> m(2, 2);
  m << 2, 1, 1, 1;
  const TrigPoly fm = f.compose_linear(m);
  const Vec p = pt(0.7, 5.2);
  CHECK(fm(p) == doctest::Approx(f(m.cast<double>() * p)).epsilon(1e-12));
}

TEST_CASE("text round trip preserves every term bit for bit") {
  std::mt19937_64 rng(3);
  const TrigField f = testsupport::random_field(3, ValueRank::form, 2, 2, 4, rng);
  std::stringstream ss;
  f.write(ss);
  const TrigField g = TrigField::read(ss);
  REQUIRE(g.num_components() == f.num_components());
  CHECK(g.degree() == 2);
  CHECK(g.rank() == ValueRank::form);
  for (int c = 0; c < f.num_components(); ++c) {
    REQUIRE(g[c].size() == f[c].size());
    auto it = g[c].terms().begin();
    for (const auto& [k, h] : f[c].terms()) {
      CHECK(it->first == k);
      CHECK(it->second.c == h.c);
      CHECK(it->second.s == h.s);
      ++it;
    }
  }
}

TEST_CASE("malformed text is rejected") {
  std::stringstream bad("# trigfield 2 vector 1\n5 1 0 1.0 0.0\n");
  CHECK_THROWS_AS(TrigField::read(bad), LabError);
  std::stringstream no_header("0 1 0 1.0 0.0\n");
  CHECK_THROWS_AS(TrigField::read(no_header), LabError);
}

TEST_CASE("shared-phase evaluator matches direct evaluation") {
  std::mt19937_64 rng(4);
  const TrigField f = testsupport::random_field(2, ValueRank::multivector, 1, 3, 6, rng);
  const TrigEvaluator ev(f);
  for (auto p : {pt(0.1, 0.2), pt(3.3, 4.4)}) {
    WVec v;
    Eigen::Matrix<double, -1, -1, 0, kMaxWedge, kMaxDim> g;
    ev.value_and_gradient(p, v, g);
    for (int c = 0; c < 2; ++c) {
      CHECK(v(c) == doctest::Approx(f[c](p)).epsilon(1e-13));
      for (int j = 0; j < 2; ++j) CHECK(g(c, j) == doctest::Approx(f[c].partial(j)(p)).epsilon(1e-12));
    }
  }
}
