// Small random instances shared by the unit and acceptance tests.
#ifndef SPS_TESTS_FIXTURES_HPP
#define SPS_TESTS_FIXTURES_HPP

#include "sps/kernels.hpp"
#include "sps/rng.hpp"
#include "sps/sampler.hpp"

#include <cstdint>

namespace fixture {

using sps::Index;

inline sps::CovarianceParams se(double rho, double v, double nugget) {
  return {sps::KernelFamily::isotropic(sps::KernelTag::SquaredExponential), Eigen::VectorXd::Constant(1, rho), v,
          nugget};
}

inline sps::CovarianceParams iso(sps::KernelTag tag, double rho, double v, double nugget) {
  return {sps::KernelFamily::isotropic(tag), Eigen::VectorXd::Constant(1, rho), v, nugget};
}

inline Eigen::MatrixXd random_matrix(Index rows, Index cols, sps::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Eigen::MatrixXd M(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) M(i, j) = rng.uniform(lo, hi);
  }
  return M;
}

inline Eigen::MatrixXd random_symmetric(Index n, sps::Rng& rng, double scale = 1.0) {
  const Eigen::MatrixXd A = random_matrix(n, n, rng);
  return scale * 0.5 * (A + A.transpose());
}

/// Sample covariance of N draws of a random SPD model on n points; PD when N >= n.
struct Instance {
  sps::LocationSet locs;
  Eigen::MatrixXd S;
  sps::WeightMatrix G;
};

inline Instance random_instance(Index n, Index N, std::uint64_t seed, double extent = 5.0) {
  const auto locs = sps::uniform_locations(n, 2, 0.0, extent, seed);
  const auto ds = sps::sample_grf(locs, se(1.5, 1.0, 0.2), N, seed + 1);
  return {locs, sps::sample_covariance(ds), sps::distance_weights(locs)};
}

}  // namespace fixture

#endif  // SPS_TESTS_FIXTURES_HPP
