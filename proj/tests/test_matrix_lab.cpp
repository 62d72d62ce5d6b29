#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "doctest.h"
#include "lyaplab/errors.hpp"
#include "lyaplab/matrix_lab.hpp"
#include "test_support.hpp"

using namespace lyaplab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd rotation_generator() {
  MatrixXd r(2, 2);
  r << 0, -1, 1, 0;
  return r;
}

MatrixXd diag2(double a, double b) {
  MatrixXd m = MatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// Independent reference: plain eigensolve of the perturbed matrix, no continuation.
double log_top_eigenvalue(const MatrixXd& m, double near) {
  const Eigen::EigenSolver<MatrixXd> es(m, false);
  double best = 0, dist = 1e300;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double re = es.eigenvalues()(i).real();
    if (std::abs(re - near) < dist) {
      dist = std::abs(re - near);
      best = re;
    }
  }
  return std::log(std::abs(best));
}

}  // namespace

TEST_CASE("simple eigen data for closed-form matrices") {
  const auto e = continue_simple_eigen(diag2(2, 0.5), 2.0);
  CHECK(e.eta == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(e.v(0)) == doctest::Approx(1.0));
  CHECK(std::abs(e.v(1)) < 1e-14);

  MatrixXd cat(2, 2);
  cat << 2, 1, 1, 1;
  const auto c = continue_simple_eigen(cat, 2.6);
  CHECK(c.eta == doctest::Approx((3 + std::sqrt(5.0)) / 2).epsilon(1e-14));
  CHECK((cat * c.v - c.eta * c.v).norm() <= 1e-10 * cat.norm());
  CHECK((c.v_star * cat - c.eta * c.v_star).norm() <= 1e-10 * cat.norm());
  CHECK(std::abs((c.v_star * c.v)(0) - 1.0) <= 1e-14);
  CHECK((c.v_star * c.complement).norm() <= 1e-12);

  MatrixXd d3 = MatrixXd::Zero(3, 3);
  d3.diagonal() << 3, -1, 0.2;
  const auto e3 = continue_simple_eigen(d3, 3.0);
  CHECK(e3.eta == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(std::abs(e3.v(0)) == doctest::Approx(1.0));
  CHECK(e3.complement.cols() == 2);
}

TEST_CASE("degenerate and complex spectra are rejected") {
  MatrixXd d = MatrixXd::Zero(3, 3);
  d.diagonal() << 2, 2, 1;
  try {
    continue_simple_eigen(d, 2.0);
    FAIL("expected EigenNotSimple");
  } catch (const LabError& err) {
    CHECK(err.code() == ErrorCode::EigenNotSimple);
  }
  MatrixXd rot(2, 2);
  rot << 1, -2, 2, 1;
  try {
    continue_simple_eigen(rot, 1.0);
    FAIL("expected EigenComplex");
  } catch (const LabError& err) {
    CHECK(err.code() == ErrorCode::EigenComplex);
  }
}

TEST_CASE("first derivative: closed forms and finite-difference oracle") {
  const MatrixXd a = diag2(2, 0.5);
  const auto e = continue_simple_eigen(a, 2.0);
  CHECK(dlog_eta(MatrixFamilyTangent(a, MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)), e) == 0.0);
  CHECK(dlog_eta(MatrixFamilyTangent(a, rotation_generator(), MatrixXd::Zero(2, 2)), e) == 0.0);

  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    double top = 0;
    const MatrixXd m = testsupport::distinct_real_spectrum(4, rng, &top);
    const MatrixXd x = testsupport::gaussian(4, 4, rng);
    const MatrixFamilyTangent fam(m, x, MatrixXd::Zero(4, 4));
    const auto eig = continue_simple_eigen(m, top);
    const double h = 1e-5;
    const double fd = (log_top_eigenvalue((h * x).exp() * m, top) -
                       log_top_eigenvalue((-h * x).exp() * m, top)) /
                      (2 * h);
    const double got = dlog_eta(fam, eig);
    CHECK(std::abs(got - fd) <= 1e-6 * std::max(std::abs(fd), 1e-3));
  }
}

TEST_CASE("eigenvector derivative") {
  const MatrixXd a = diag2(2, 0.5);
  const auto e = continue_simple_eigen(a, 2.0);
  const VectorXd zero = v_prime(MatrixFamilyTangent(a, diag2(1, 0), MatrixXd::Zero(2, 2)), e);
  CHECK(zero.norm() <= 1e-15);

  for (auto [eta, nu] : {std::pair{2.0, 0.5}, std::pair{3.0, -1.0}}) {
    const MatrixXd an = diag2(eta, nu);
    const auto en = continue_simple_eigen(an, eta);
    const VectorXd vp = v_prime(MatrixFamilyTangent(an, rotation_generator(), MatrixXd::Zero(2, 2)), en);
    // the rotation sends v to w = sign(v0) e2
    const double w_sign = en.v(0) > 0 ? 1.0 : -1.0;
    CHECK(vp(0) == doctest::Approx(0.0));
    CHECK(vp(1) == doctest::Approx(w_sign * eta / (eta - nu)).epsilon(1e-13));
  }

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    double top = 0;
    const MatrixXd m = testsupport::distinct_real_spectrum(3, rng, &top);
    const MatrixXd x = testsupport::gaussian(3, 3, rng, 0.3);
    const MatrixFamilyTangent fam(m, x, MatrixXd::Zero(3, 3));
    const auto eig = continue_simple_eigen(m, top);
    const VectorXd vp = v_prime(fam, eig);
    CHECK(std::abs((eig.v_star * vp)(0)) <= 1e-12 * (1 + vp.norm()));
    // independent reference: eigensolve of exp(hX)A, normalized against v_star
    const double h = 1e-5;
    const Eigen::EigenSolver<MatrixXd> es((h * x).exp() * m, true);
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(es.eigenvalues()(i) - top) < std::abs(es.eigenvalues()(best) - top)) best = i;
    VectorXd vt = es.eigenvectors().col(best).real();
    vt /= (eig.v_star * vt)(0);
    const VectorXd v0 = eig.v / (eig.v_star * eig.v)(0);
    CHECK(((vt - v0) / h - vp).cwiseAbs().maxCoeff() <= 1e-5);
    const VectorXd central = (continued_eigenvector(fam, h, top, eig.v_star) -
                              continued_eigenvector(fam, -h, top, eig.v_star)) / (2 * h);
    CHECK((central - vp).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, vp.norm()));
  }
}

TEST_CASE("second derivative: rotation closed form") {
  for (auto [eta, nu] : {std::pair{2.0, 0.5}, std::pair{3.0, -1.0}, std::pair{1.5, 0.2}}) {
    const MatrixXd a = diag2(eta, nu);
    const MatrixFamilyTangent fam(a, rotation_generator(), MatrixXd::Zero(2, 2));
    const auto e = continue_simple_eigen(a, eta);
    CHECK(std::abs(d2log_eta(fam, e) - (eta + nu) / (nu - eta)) <= 1e-10);
  }
  const MatrixXd a = diag2(2, 0.5);
  const auto e = continue_simple_eigen(a, 2.0);
  CHECK(d2log_eta(MatrixFamilyTangent(a, MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)), e) == 0.0);
}

TEST_CASE("second derivative matches finite differences with a second-order tangent") {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 10; ++trial) {
    double top = 0;
    const MatrixXd m = testsupport::distinct_real_spectrum(4, rng, &top);
    const MatrixXd x = testsupport::gaussian(4, 4, rng);
    const MatrixXd y = testsupport::gaussian(4, 4, rng);
    const MatrixFamilyTangent fam(m, x, y);
    const auto eig = continue_simple_eigen(m, top);
    const double h = 1e-3;
    auto g = [&](double t) {
      return log_top_eigenvalue((t * x).exp() * (0.5 * t * t * y).exp() * m, top);
    };
    const double fd = (g(h) - 2 * g(0) + g(-h)) / (h * h);
    const double got = d2log_eta(fam, eig);
    // plain central difference: truncation is O(h²)
    CHECK(std::abs(got - fd) <= 1e-4 * std::max(std::abs(fd), 1.0));
    const auto oracle = matrix_fd_oracle(fam, eig.eta);
    CHECK(std::abs(got - oracle.d2log) <= 1e-6 * std::max(std::abs(got), 1.0));
    CHECK(std::abs(dlog_eta(fam, eig) - oracle.dlog) <= 1e-9 * std::max(std::abs(oracle.dlog), 1.0));
  }
}

TEST_CASE("linearity, split, kernel and basis-independence properties") {
  std::mt19937_64 rng(4);
  double top = 0;
  const MatrixXd m = testsupport::distinct_real_spectrum(4, rng, &top);
  const MatrixXd x1 = testsupport::gaussian(4, 4, rng), x2 = testsupport::gaussian(4, 4, rng);
  const MatrixXd y1 = testsupport::gaussian(4, 4, rng), y2 = testsupport::gaussian(4, 4, rng);
  const MatrixXd z = MatrixXd::Zero(4, 4);
  const auto eig = continue_simple_eigen(m, top);
  const double a = 0.7, b = -1.3;

  const double lhs = dlog_eta(MatrixFamilyTangent(m, a * x1 + b * x2, z), eig);
  const double rhs = a * dlog_eta(MatrixFamilyTangent(m, x1, z), eig) +
                     b * dlog_eta(MatrixFamilyTangent(m, x2, z), eig);
  CHECK(std::abs(lhs - rhs) <= 1e-12 * (1 + std::abs(lhs)));

  auto ypart = [&](const MatrixXd& y) {
    return d2log_eta(MatrixFamilyTangent(m, x1, y), eig) - d2log_eta(MatrixFamilyTangent(m, x1, z), eig);
  };
  CHECK(std::abs(ypart(a * y1 + b * y2) - (a * ypart(y1) + b * ypart(y2))) <= 1e-10);

  const VectorXd vp = v_prime(MatrixFamilyTangent(m, x1, y1), eig);
  CHECK(std::abs((eig.v_star * vp)(0)) <= 1e-12);

  const MatrixXd s = MatrixXd::Identity(4, 4) + testsupport::gaussian(4, 4, rng, 0.4);
  const MatrixXd si = s.inverse();
  const MatrixFamilyTangent conj(s * m * si, s * x1 * si, s * y1 * si);
  const auto eig_c = continue_simple_eigen(conj.base, top);
  const double d1 = dlog_eta(MatrixFamilyTangent(m, x1, y1), eig);
  const double d2 = d2log_eta(MatrixFamilyTangent(m, x1, y1), eig);
  CHECK(std::abs(dlog_eta(conj, eig_c) - d1) <= 1e-10 * std::max(1.0, std::abs(d1)));
  CHECK(std::abs(d2log_eta(conj, eig_c) - d2) <= 1e-10 * std::max(1.0, std::abs(d2)));
}

TEST_CASE("criticality under antisymmetric tangents iff v is orthogonal to the complement") {
  const MatrixXd z = MatrixXd::Zero(3, 3);
  auto antisym = [](int i, int j) {
    MatrixXd k = MatrixXd::Zero(3, 3);
    k(i, j) = 1;
    k(j, i) = -1;
    return k;
  };
  MatrixXd diag = MatrixXd::Zero(3, 3);
  diag.diagonal() << 3, 1, 0.5;
  const auto ed = continue_simple_eigen(diag, 3.0);
  CHECK((ed.v.transpose() * ed.complement).norm() <= 1e-14);
  for (auto [i, j] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}})
    CHECK(std::abs(dlog_eta(MatrixFamilyTangent(diag, antisym(i, j), z), ed)) <= 1e-14);

  MatrixXd nonnormal = diag;
  nonnormal(0, 1) = 1.0;  // v = e1 but v* is tilted
  const auto en = continue_simple_eigen(nonnormal, 3.0);
  CHECK((en.v.transpose() * en.complement).norm() > 1e-3);
  double largest = 0;
  for (auto [i, j] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}})
    largest = std::max(largest, std::abs(dlog_eta(MatrixFamilyTangent(nonnormal, antisym(i, j), z), en)));
  CHECK(largest > 1e-3);
}

TEST_CASE("ill-conditioned restriction is reported") {
  MatrixXd a = MatrixXd::Zero(2, 2);
  a.diagonal() << 1.0, 1.0 + 1e-6;
  const auto e = continue_simple_eigen(a, 1.0);
  MatrixTolerances tight;
  tight.max_condition = 1e4;
  try {
    v_prime(MatrixFamilyTangent(a, rotation_generator(), MatrixXd::Zero(2, 2)), e, tight);
    FAIL("expected SingularRestriction");
  } catch (const LabError& err) {
    CHECK(err.code() == ErrorCode::SingularRestriction);
  }
}
