#ifndef SPS_PREDICT_HPP
#define SPS_PREDICT_HPP

#include "sps/sampler.hpp"
#include "sps/segmentation.hpp"

#include <span>
#include <string>
#include <vector>

namespace sps {

/// Per-query kriging mean and variance of the latent field.
struct PredictiveDistribution {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  /// "exact", "local-neighbourhood" or "per-block".
  std::string method = "exact";
};

/// One Cholesky factorization of C_f + theta_0 I shared by every query.
class KrigingSystem {
 public:
  KrigingSystem(const SpatialDataset& ds, const CovarianceParams& params);

  /// mean = c0^T C^{-1} ybar, variance = theta_v - c0^T C^{-1} c0 (clamped to [0, theta_v]).
  [[nodiscard]] PredictiveDistribution predict(const Points& queries) const;

 private:
  LocationSet locs_;
  CovarianceParams params_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd weights_;
};

PredictiveDistribution predictive_distribution(const SpatialDataset& ds, const CovarianceParams& params,
                                               const Points& queries);

struct StationaryPredictionOptions {
  /// Largest training set solved as one exact system.
  Index full_system_max = 4000;
  /// Cell grid for the local approximation; empty picks one so that a 3^d
  /// neighbourhood holds about full_system_max points.
  std::vector<int> grid_dims;
};

/// Exact kriging when n <= full_system_max; otherwise each query uses the
/// training points in its grid cell and the adjacent cells.
PredictiveDistribution predict_stationary(const SpatialDataset& ds, const CovarianceParams& params,
                                          const Points& queries, const StationaryPredictionOptions& opts = {});

/// Each query is predicted from the block that contains it (spatial plans) or
/// the block with the nearest centroid, using that block's training points
/// and parameters.
PredictiveDistribution predict_nonstationary(const SpatialDataset& ds, const SegmentationPlan& plan,
                                             std::span<const CovarianceParams> block_params, const Points& queries);

/// (1/m) |y_true - y_pred|^2
double mspe(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

}  // namespace sps

#endif  // SPS_PREDICT_HPP
