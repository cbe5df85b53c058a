#ifndef SPS_LINALG_HPP
#define SPS_LINALG_HPP

#include <Eigen/Dense>

namespace sps {

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Divide-and-conquer symmetric eigensolver (LAPACK dsyevd); throws on failure.
SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& A);

/// B B^T through BLAS dsyrk, mirrored so the result is exactly symmetric.
Eigen::MatrixXd gram(const Eigen::MatrixXd& B);

/// (A + A^T) / 2
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& A);

/// Smallest / largest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& A);
double max_eigenvalue(const Eigen::MatrixXd& A);

/// Projects the spectrum of a symmetric matrix onto [lo, hi].
Eigen::MatrixXd clip_spectrum(const Eigen::MatrixXd& A, double lo, double hi);

/// Inverse of a symmetric PD matrix through a Cholesky factorization; throws
/// std::runtime_error if the factorization fails.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& A);

/// log det of a symmetric PD matrix through Cholesky; throws on failure.
double spd_logdet(const Eigen::MatrixXd& A);

}  // namespace sps

#endif  // SPS_LINALG_HPP
