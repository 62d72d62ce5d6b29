#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "lyaplab/exterior.hpp"

using namespace lyaplab;

namespace {

Mat random_mat(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = n(rng);
  return m;
}

}  // namespace

TEST_CASE("wedge basis enumerates sorted subsets lexicographically") {
  const WedgeBasis& b = wedge_basis(4, 2);
  REQUIRE(b.size() == 6);
  CHECK(b.set(0)[0] == 0);
  CHECK(b.set(0)[1] == 1);
  CHECK(b.set(2)[1] == 3);
  CHECK(b.set(5)[0] == 2);
  CHECK(b.set(5)[1] == 3);
  for (int d = 1; d <= 4; ++d)
    for (int k = 0; k <= d; ++k) CHECK(wedge_basis(d, k).size() == binomial(d, k));
}

TEST_CASE("compound matrices are multiplicative and reduce to det at top degree") {
  std::mt19937_64 rng(7);
  for (int d = 2; d <= 4; ++d) {
    const Mat a = random_mat(d, rng), b = random_mat(d, rng);
    for (int k = 0; k <= d; ++k) {
      const WMat lhs = compound(a * b, k);
      const WMat rhs = compound(a, k) * compound(b, k);
      CHECK((lhs - rhs).norm() <= 1e-12 * (1 + lhs.norm()));
    }
    CHECK(compound(a, d)(0, 0) == doctest::Approx(a.determinant()).epsilon(1e-12));
    CHECK((compound(a, 1) - a).norm() == 0.0);
  }
}

TEST_CASE("derivation is the derivative of the compound of exp(tA)") {
  std::mt19937_64 rng(11);
  for (int d = 2; d <= 4; ++d) {
    const Mat a = random_mat(d, rng);
    const Eigen::MatrixXd ad = a;
    for (int k = 1; k <= d; ++k) {
      const double h = 1e-5;
      const Mat ep = (h * ad).exp(), em = (-h * ad).exp();
      const WMat fd = (compound(ep, k) - compound(em, k)) / (2 * h);
      CHECK((fd - derivation(a, k)).norm() <= 1e-7 * (1 + fd.norm()));
    }
    CHECK(derivation(a, d)(0, 0) == doctest::Approx(a.trace()).epsilon(1e-13));
  }
}

TEST_CASE("wedge of columns transforms by the compound matrix") {
  std::mt19937_64 rng(5);
  const Mat a = random_mat(4, rng);
  const Mat cols = random_mat(4, rng).leftCols(2);
  const WVec lhs = wedge_columns(a * cols);
  const WVec rhs = compound(a, 2) * wedge_columns(cols);
  CHECK((lhs - rhs).norm() <= 1e-12 * (1 + lhs.norm()));
}

TEST_CASE("index insertion and removal signs") {
  IndexSet s;
  s.size = 2;
  s.idx = {0, 2, 0, 0};
  const auto ins = insert_index(s, 1);
  REQUIRE(ins.has_value());
  CHECK(ins->second == -1);
  CHECK(ins->first[1] == 1);
  CHECK_FALSE(insert_index(s, 2).has_value());
  const auto [r, sign] = remove_at(ins->first, 1);
  CHECK(sign == -1);
  CHECK(r == s);
}

TEST_CASE("torus helpers") {
  Vec p(2);
  p << -0.5, 7.0;
  const Vec w = wrap_point(p);
  CHECK(w(0) == doctest::Approx(2 * std::numbers::pi - 0.5));
  CHECK(w(1) == doctest::Approx(7.0 - 2 * std::numbers::pi));
  Vec q(2);
  q << 0.1, 6.2;
  const Vec dlt = torus_delta(q, wrap_point(Vec::Zero(2)));
  CHECK(dlt(1) == doctest::Approx(6.2 - 2 * std::numbers::pi));
}
