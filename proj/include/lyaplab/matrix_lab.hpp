#pragma once
// Derivatives of log η for a simple real eigenvalue η of A(t) = B(t) A,
// with B(t) ≈ exp(t X) exp(t² Y / 2).
#include <Eigen/Dense>

#include <cstdint>

namespace lyaplab {

struct MatrixTolerances {
  double gap = 1e-8;           // relative isolation of the eigenvalue
  double imag = 1e-10;         // largest accepted imaginary part
  double max_condition = 1e12;
};

struct SimpleEigenData {
  double eta = 0.0;
  Eigen::VectorXd v;           // right eigenvector, unit length
  Eigen::RowVectorXd v_star;   // left eigenvector with v_star * v = 1
  Eigen::MatrixXd complement;  // orthonormal basis of ker v_star
};

struct MatrixFamilyTangent {
  Eigen::MatrixXd base;
  Eigen::MatrixXd first;
  Eigen::MatrixXd second;

  MatrixFamilyTangent(Eigen::MatrixXd a, Eigen::MatrixXd x, Eigen::MatrixXd y);
  int dim() const { return static_cast<int>(base.rows()); }
  // exp(t X) exp(t² Y / 2) A
  Eigen::MatrixXd at(double t) const;
};

SimpleEigenData continue_simple_eigen(const Eigen::MatrixXd& a, double seed,
                                      const MatrixTolerances& tol = {});

double dlog_eta(const MatrixFamilyTangent& fam, const SimpleEigenData& eig);
Eigen::VectorXd v_prime(const MatrixFamilyTangent& fam, const SimpleEigenData& eig,
                        const MatrixTolerances& tol = {});
double d2log_eta(const MatrixFamilyTangent& fam, const SimpleEigenData& eig,
                 const MatrixTolerances& tol = {});

// Finite-difference reference from a full eigensolve of A(t) at each sample,
// central differences with one Richardson step.
struct MatrixFdEstimate {
  double dlog = 0.0;
  double d2log = 0.0;
};
MatrixFdEstimate matrix_fd_oracle(const MatrixFamilyTangent& fam, double eta, double h = 1e-3);

// Unit eigenvector continued from v0 for the eigenvalue of A(t) nearest eta,
// normalized by v_star * v(t) = 1.
Eigen::VectorXd continued_eigenvector(const MatrixFamilyTangent& fam, double t, double eta,
                                      const Eigen::RowVectorXd& v_star);

// S·diag(λ)·S⁻¹ with well separated real λ and S = Id + 0.3·gaussian; gaussian
// 𝔛 and 𝔜. The seed eigenvalue is the positive one of largest modulus.
struct RandomMatrixInstance {
  MatrixFamilyTangent family;
  double seed_eigenvalue = 0.0;
};
RandomMatrixInstance random_matrix_family(int dim, std::uint64_t seed);

}  // namespace lyaplab
