#include "sps/sampler.hpp"

#include "sps/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sps {

SpatialDataset::SpatialDataset(LocationSet locations, Eigen::MatrixXd values)
    : locs(std::move(locations)), Y(std::move(values)) {
  if (Y.rows() != locs.size()) throw std::invalid_argument("SpatialDataset: Y must have one row per location");
  if (Y.cols() < 1) throw std::invalid_argument("SpatialDataset: need at least one realization");
}

SpatialDataset SpatialDataset::subset(std::span<const Index> indices) const {
  Eigen::MatrixXd sub(static_cast<Index>(indices.size()), Y.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) sub.row(static_cast<Index>(k)) = Y.row(indices[k]);
  return SpatialDataset(locs.subset(indices), std::move(sub));
}

Eigen::VectorXd SpatialDataset::mean_observation() const { return Y.rowwise().mean(); }

WeightMatrix WeightMatrix::from_matrix(Eigen::MatrixXd G) {
  if (G.rows() != G.cols() || G.rows() == 0) throw std::invalid_argument("WeightMatrix: must be square and nonempty");
  WeightMatrix w;
  w.g_max = G.maxCoeff();
  w.g_min = G.minCoeff();
  w.G = std::move(G);
  return w;
}

LocationSet uniform_locations(Index n, Index dim, double lo, double hi, std::uint64_t seed) {
  if (!(hi > lo)) throw std::invalid_argument("uniform_locations: empty domain");
  Rng rng(seed);
  Points X(n, dim);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < dim; ++k) X(i, k) = rng.uniform(lo, hi);
  }
  return LocationSet(std::move(X));
}

SpatialDataset sample_grf(const LocationSet& locs, const CovarianceParams& params, Index N, std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("sample_grf: N must be >= 1");
  Eigen::MatrixXd C = covariance_matrix(locs, params);
  const Index n = locs.size();
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) {
    C.diagonal().array() += 1e-10 * (params.theta_v + params.theta_0);
    llt.compute(C);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("sample_grf: covariance matrix is not positive definite after jitter");
    }
  }
  Rng rng(seed);
  Eigen::MatrixXd Z(n, N);
  for (Index r = 0; r < N; ++r) {
    for (Index i = 0; i < n; ++i) Z(i, r) = rng.normal();
  }
  Eigen::MatrixXd Y = llt.matrixL() * Z;
  return SpatialDataset(locs, std::move(Y));
}

Eigen::MatrixXd sample_covariance(const SpatialDataset& ds) {
  const auto N = static_cast<double>(ds.Y.cols());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(ds.size(), ds.size());
  S.selfadjointView<Eigen::Lower>().rankUpdate(ds.Y, 1.0 / N);
  S.triangularView<Eigen::StrictlyUpper>() = S.transpose();
  return S;
}

WeightMatrix distance_weights(const LocationSet& locs) {
  const Index n = locs.size();
  if (n < 2) throw std::invalid_argument("distance_weights: need at least two locations");
  Eigen::MatrixXd G(n, n);
  Eigen::VectorXd nearest = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double h = distance(locs.point(i), locs.point(j));
      if (h == 0.0) throw std::invalid_argument("distance_weights: duplicate locations");
      G(i, j) = h;
      G(j, i) = h;
      nearest[i] = std::min(nearest[i], h);
      nearest[j] = std::min(nearest[j], h);
    }
  }
  G.diagonal() = nearest;
  return WeightMatrix::from_matrix(std::move(G));
}

double near_sparsity_fraction(const Eigen::MatrixXd& M, double eps) {
  const Index n = M.rows();
  if (n < 2 || M.cols() != n) throw std::invalid_argument("near_sparsity_fraction: need a square matrix with n >= 2");
  double scale = 0.0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i != j) scale = std::max(scale, std::abs(M(i, j)));
    }
  }
  if (scale == 0.0) return 0.0;
  Index count = 0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i != j && std::abs(M(i, j)) / scale > eps) ++count;
    }
  }
  return static_cast<double>(count) / static_cast<double>(n * n - n);
}

}  // namespace sps
