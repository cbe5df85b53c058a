#include "sps/linalg.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <stdexcept>
#include <string>

namespace sps {

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("symmetric_eigen: matrix must be square");
  SymmetricEigen out;
  out.vectors = A;
  out.values.resize(A.rows());
  if (A.rows() == 0) return out;
  const auto n = static_cast<lapack_int>(A.rows());
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n, out.values.data());
  if (info != 0) throw std::runtime_error("symmetric_eigen: dsyevd failed with info " + std::to_string(info));
  return out;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& B) {
  const auto n = static_cast<blasint>(B.rows());
  Eigen::MatrixXd out(B.rows(), B.rows());
  if (n == 0) return out;
  cblas_dsyrk(CblasColMajor, CblasLower, CblasNoTrans, n, static_cast<blasint>(B.cols()), 1.0, B.data(), n, 0.0,
              out.data(), n);
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& A) { return 0.5 * (A + A.transpose()); }

double min_eigenvalue(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Eigen::MatrixXd clip_spectrum(const Eigen::MatrixXd& A, double lo, double hi) {
  SymmetricEigen eig = symmetric_eigen(A);
  const Eigen::VectorXd clipped = eig.values.cwiseMax(lo).cwiseMin(hi);
  return symmetrized(eig.vectors * clipped.asDiagonal() * eig.vectors.transpose());
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& A) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw std::runtime_error("spd_inverse: Cholesky factorization failed");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(A.rows(), A.cols()));
  return symmetrized(inv);
}

double spd_logdet(const Eigen::MatrixXd& A) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw std::runtime_error("spd_logdet: Cholesky factorization failed");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace sps
