#include "sps/pipeline.hpp"

namespace sps {

SpsFit fit_sps(const SpatialDataset& ds, const KernelFamily& family, bool nugget_enabled, const Stage1Config& stage1,
               const Stage2Options& stage2) {
  SpsFit fit;
  const Eigen::MatrixXd S = sample_covariance(ds);
  const WeightMatrix G = distance_weights(ds.locs);
  fit.stage1 = solve_stage1(S, G, stage1);
  fit.c_hat = invert_precision(fit.stage1);
  fit.stage2 = fit_stage2(fit.c_hat, ds.locs, family, nugget_enabled, stage2);
  return fit;
}

}  // namespace sps
