#ifndef SPS_SAMPLER_HPP
#define SPS_SAMPLER_HPP

#include "sps/kernels.hpp"

#include <cstdint>
#include <span>

namespace sps {

/// Locations plus an n x N matrix whose column r is the realization y^(r).
struct SpatialDataset {
  LocationSet locs;
  Eigen::MatrixXd Y;

  SpatialDataset() = default;
  SpatialDataset(LocationSet locations, Eigen::MatrixXd values);

  [[nodiscard]] Index size() const { return locs.size(); }
  [[nodiscard]] Index realizations() const { return Y.cols(); }
  [[nodiscard]] SpatialDataset subset(std::span<const Index> indices) const;
  /// (1/N) sum_r y^(r)
  [[nodiscard]] Eigen::VectorXd mean_observation() const;
};

/// Distance weights: G_ij = |x_i - x_j| off the diagonal, G_ii = nearest-neighbour distance.
struct WeightMatrix {
  Eigen::MatrixXd G;
  double g_max = 0.0;
  double g_min = 0.0;

  /// Wraps an explicit weight matrix (e.g. the scalar instances used in tests).
  static WeightMatrix from_matrix(Eigen::MatrixXd G);
};

/// Uniform locations on the hypercube [lo, hi]^dim.
LocationSet uniform_locations(Index n, Index dim, double lo, double hi, std::uint64_t seed);

/// N independent draws from N(0, C(theta)), bit-reproducible for a fixed seed.
/// A failed Cholesky factorization is retried once with 1e-10 (theta_v + theta_0)
/// added to the diagonal; a second failure throws std::runtime_error.
SpatialDataset sample_grf(const LocationSet& locs, const CovarianceParams& params, Index N, std::uint64_t seed);

/// S = (1/N) Y Y^T
Eigen::MatrixXd sample_covariance(const SpatialDataset& ds);

/// Throws std::invalid_argument for n < 2 (no nearest neighbour).
WeightMatrix distance_weights(const LocationSet& locs);

/// Fraction of off-diagonal entries whose magnitude, scaled by the largest
/// off-diagonal magnitude, exceeds eps. Zero when all off-diagonals vanish.
double near_sparsity_fraction(const Eigen::MatrixXd& M, double eps);

}  // namespace sps

#endif  // SPS_SAMPLER_HPP
