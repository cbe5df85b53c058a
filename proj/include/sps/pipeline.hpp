#ifndef SPS_PIPELINE_HPP
#define SPS_PIPELINE_HPP

#include "sps/sampler.hpp"
#include "sps/stage1_admm.hpp"
#include "sps/stage2_lsq.hpp"

namespace sps {

struct SpsFit {
  PrecisionEstimate stage1;
  Eigen::MatrixXd c_hat;
  Stage2Result stage2;
};

/// Unsegmented two-stage fit: sample covariance and distance weights, the
/// Stage I precision estimate, its inverse, then the Stage II least squares.
SpsFit fit_sps(const SpatialDataset& ds, const KernelFamily& family, bool nugget_enabled,
               const Stage1Config& stage1 = {}, const Stage2Options& stage2 = {});

}  // namespace sps

#endif  // SPS_PIPELINE_HPP
