#include "lyaplab/matrix_lab.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <sstream>

#include "lyaplab/errors.hpp"

namespace lyaplab {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd inverse_iteration(const MatrixXd& a, double shift) {
  const int d = static_cast<int>(a.rows());
  const Eigen::PartialPivLU<MatrixXd> lu(a - shift * MatrixXd::Identity(d, d));
  VectorXd v = VectorXd::Ones(d) / std::sqrt(static_cast<double>(d));
  for (int it = 0; it < 60; ++it) {
    VectorXd w = lu.solve(v);
    w.normalize();
    Eigen::Index k = 0;
    w.cwiseAbs().maxCoeff(&k);
    if (w(k) < 0) w = -w;
    const double change = (w - v).norm();
    v = w;
    if (change < 1e-15) break;
  }
  return v;
}

// Eigenvalue of a nearest to the target, from the full spectrum.
std::complex<double> nearest_eigenvalue(const MatrixXd& a, double target, double* second_gap) {
  const Eigen::EigenSolver<MatrixXd> es(a, false);
  const auto& ev = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i)
    if (std::abs(ev(i) - target) < std::abs(ev(best) - target)) best = i;
  if (second_gap) {
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (i != best) gap = std::min(gap, std::abs(ev(i) - ev(best)));
    *second_gap = gap;
  }
  return ev(best);
}

}  // namespace

MatrixFamilyTangent::MatrixFamilyTangent(MatrixXd a, MatrixXd x, MatrixXd y)
    : base(std::move(a)), first(std::move(x)), second(std::move(y)) {
  const auto d = base.rows();
  if (base.cols() != d || first.rows() != d || first.cols() != d || second.rows() != d ||
      second.cols() != d)
    fail(ErrorCode::InvalidArgument, "matrix family: A, X, Y must be square of equal size");
  const Eigen::VectorXd sv = Eigen::JacobiSVD<MatrixXd>(base).singularValues();
  if (d == 0 || !(sv(d - 1) > 1e-12 * sv(0)))
    fail(ErrorCode::InvalidArgument, "matrix family: base matrix is not invertible");
}

MatrixXd MatrixFamilyTangent::at(double t) const {
  const MatrixXd bx = (t * first).exp();
  const MatrixXd by = (0.5 * t * t * second).exp();
  return bx * by * base;
}

SimpleEigenData continue_simple_eigen(const MatrixXd& a, double seed,
                                      const MatrixTolerances& tol) {
  const int d = static_cast<int>(a.rows());
  if (a.cols() != d || d < 1) fail(ErrorCode::InvalidArgument, "matrix must be square");
  double gap = 0.0;
  const std::complex<double> lam = nearest_eigenvalue(a, seed, &gap);
  if (std::abs(lam.imag()) > tol.imag) {
    std::ostringstream os;
    os << "eigenvalue nearest " << seed << " is complex (imag " << lam.imag() << ")";
    fail(ErrorCode::EigenComplex, os.str());
  }
  const double scale = std::max(1.0, std::abs(lam.real()));
  if (gap <= tol.gap * scale) {
    std::ostringstream os;
    os << "eigenvalue " << lam.real() << " is not isolated (gap " << gap << ")";
    fail(ErrorCode::EigenNotSimple, os.str());
  }

  const double shift = lam.real() + 1e-9 * std::min(gap, scale);
  SimpleEigenData out;
  VectorXd v = inverse_iteration(a, shift);
  const VectorXd u = inverse_iteration(a.transpose(), shift);
  const double uv = u.dot(v);
  if (std::abs(uv) < 1e-14) fail(ErrorCode::EigenNotSimple, "left and right eigenvectors are orthogonal");
  out.eta = u.dot(a * v) / uv;
  out.v = v;
  out.v_star = u.transpose() / uv;

  Eigen::HouseholderQR<MatrixXd> qr(out.v_star.transpose());
  const MatrixXd q = qr.householderQ();
  out.complement = q.rightCols(d - 1);
  return out;
}

double dlog_eta(const MatrixFamilyTangent& fam, const SimpleEigenData& eig) {
  return eig.v_star * fam.first * eig.v;
}

VectorXd v_prime(const MatrixFamilyTangent& fam, const SimpleEigenData& eig,
                 const MatrixTolerances& tol) {
  const int d = fam.dim();
  const VectorXd xv = fam.first * eig.v;
  const VectorXd projected = xv - (eig.v_star * xv)(0) * eig.v;

  MatrixXd bordered = MatrixXd::Zero(d + 1, d + 1);
  bordered.topLeftCorner(d, d) = eig.eta * MatrixXd::Identity(d, d) - fam.base;
  bordered.topRightCorner(d, 1) = eig.v;
  bordered.bottomLeftCorner(1, d) = eig.v_star;
  VectorXd rhs = VectorXd::Zero(d + 1);
  rhs.head(d) = eig.eta * projected;

  const Eigen::JacobiSVD<MatrixXd> svd(bordered);
  const auto& s = svd.singularValues();
  const double cond = s(0) / s(s.size() - 1);
  if (!(cond <= tol.max_condition)) {
    std::ostringstream os;
    os << "restricted operator condition number " << cond;
    fail(ErrorCode::SingularRestriction, os.str());
  }
  const VectorXd sol = bordered.fullPivLu().solve(rhs);
  return sol.head(d);
}

double d2log_eta(const MatrixFamilyTangent& fam, const SimpleEigenData& eig,
                 const MatrixTolerances& tol) {
  const VectorXd vp = v_prime(fam, eig, tol);
  const double xv = dlog_eta(fam, eig);
  const double yv = eig.v_star * fam.second * eig.v;
  const double xxv = eig.v_star * fam.first * fam.first * eig.v;
  const double cross = eig.v_star * fam.first * fam.base * vp;
  return yv + xxv - xv * xv + (2.0 / eig.eta) * cross;
}

MatrixFdEstimate matrix_fd_oracle(const MatrixFamilyTangent& fam, double eta, double h) {
  // Track the eigenvalue along t from the base value to stay on the same branch.
  auto log_eta = [&](double t) {
    return std::log(std::abs(nearest_eigenvalue(fam.at(t), eta, nullptr).real()));
  };
  const double g0 = log_eta(0.0);
  const double gp = log_eta(h), gm = log_eta(-h);
  const double gp2 = log_eta(h / 2), gm2 = log_eta(-h / 2);
  const double d1 = (gp - gm) / (2 * h), d1h = (gp2 - gm2) / h;
  const double s1 = (gp - 2 * g0 + gm) / (h * h), s1h = (gp2 - 2 * g0 + gm2) / (h * h / 4);
  return {(4 * d1h - d1) / 3, (4 * s1h - s1) / 3};
}

VectorXd continued_eigenvector(const MatrixFamilyTangent& fam, double t, double eta,
                               const Eigen::RowVectorXd& v_star) {
  const MatrixXd at = fam.at(t);
  const Eigen::EigenSolver<MatrixXd> es(at, true);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i) - eta) < std::abs(es.eigenvalues()(best) - eta)) best = i;
  const VectorXd v = es.eigenvectors().col(best).real();
  return v / (v_star * v)(0);
}

RandomMatrixInstance random_matrix_family(int dim, std::uint64_t seed) {
  if (dim < 2) fail(ErrorCode::InvalidArgument, "random_matrix_family: dimension below 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto gaussian = [&](double scale) {
    MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) m(i, j) = scale * normal(rng);
    return m;
  };
  std::uniform_real_distribution<double> shrink(0.3, 1.0);
  VectorXd lam(dim);
  double mag = 3.0;
  for (int i = 0; i < dim; ++i) {
    lam(i) = (i % 2 == 0 ? 1.0 : -1.0) * mag;
    mag *= 0.6 * shrink(rng);
    if (mag < 0.05) mag = 0.05 * (i + 2);
  }
  const MatrixXd s = MatrixXd::Identity(dim, dim) + gaussian(0.3);
  const MatrixXd a = s * lam.asDiagonal() * s.inverse();
  const MatrixXd x = gaussian(1.0);
  const MatrixXd y = gaussian(1.0);
  return {MatrixFamilyTangent(a, x, y), lam(0)};
}

}  // namespace lyaplab
