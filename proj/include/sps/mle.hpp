#ifndef SPS_MLE_HPP
#define SPS_MLE_HPP

#include "sps/sampler.hpp"

#include <cstdint>

namespace sps {

/// <S, C(theta)^{-1}> + logdet C(theta) from one Cholesky factorization.
/// Throws std::runtime_error when C(theta) is not positive definite.
double mle_objective(const LocationSet& locs, const CovarianceParams& params, const Eigen::MatrixXd& S);

struct MleResult {
  CovarianceParams theta_hat;
  double objective = 0.0;
  int evaluations = 0;
  /// Every start failed the positive-definiteness check.
  bool flagged = false;
};

/// Nelder-Mead in log-parameter space from n_starts starts, each coordinate
/// log-uniform over [1e-2, max(10, diameter)]. Starts are drawn in sequence
/// from one stream, so the starts for k are a prefix of those for k' > k.
/// With the nugget disabled theta_0 is held at 0.
MleResult mle_fit(const SpatialDataset& ds, const KernelFamily& family, int n_starts, std::uint64_t seed,
                  bool nugget_enabled = true);

}  // namespace sps

#endif  // SPS_MLE_HPP
