#include "sps/mle.hpp"

#include "sps/rng.hpp"
#include "sps/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sps {

double mle_objective(const LocationSet& locs, const CovarianceParams& params, const Eigen::MatrixXd& S) {
  if (S.rows() != locs.size() || S.cols() != locs.size()) throw std::invalid_argument("mle_objective: S size mismatch");
  const Eigen::LLT<Eigen::MatrixXd> llt(covariance_matrix(locs, params));
  if (llt.info() != Eigen::Success) throw std::runtime_error("mle_objective: covariance matrix is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd CinvS = llt.solve(S);  // <S, C^{-1}> = tr(C^{-1} S)
  return CinvS.trace() + 2.0 * L.diagonal().array().log().sum();
}

MleResult mle_fit(const SpatialDataset& ds, const KernelFamily& family, int n_starts, std::uint64_t seed,
                  bool nugget_enabled) {
  if (n_starts < 1) throw std::invalid_argument("mle_fit: n_starts must be >= 1");
  family.validate(ds.locs.dim());
  const Eigen::MatrixXd S = sample_covariance(ds);
  const int q = family.q;
  const int dim = q + (nugget_enabled ? 2 : 1);

  auto unpack = [&](const Eigen::VectorXd& z) {
    CovarianceParams p;
    p.family = family;
    p.theta_rho = z.head(q).array().exp();
    p.theta_v = std::exp(z[q]);
    p.theta_0 = nugget_enabled ? std::exp(z[q + 1]) : 0.0;
    return p;
  };
  auto objective = [&](const Eigen::VectorXd& z) {
    if (!z.allFinite()) return std::numeric_limits<double>::infinity();
    try {
      return mle_objective(ds.locs, unpack(z), S);
    } catch (const std::runtime_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const double log_lo = std::log(1e-2);
  const double log_hi = std::log(std::max(10.0, ds.locs.diameter()));
  Rng rng(stream_seed(seed, 0, StreamTag::Starts));
  SimplexOptions opts;
  opts.x_tol = 1e-8;
  opts.f_rel = 1e-12;

  MleResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_starts; ++s) {
    Eigen::VectorXd z0(dim);
    for (int k = 0; k < dim; ++k) z0[k] = rng.uniform(log_lo, log_hi);
    const SimplexResult r = nelder_mead(objective, z0, opts);
    best.evaluations += r.evaluations;
    if (std::isfinite(r.f) && r.f < best.objective) {
      best.objective = r.f;
      best.theta_hat = unpack(r.x);
    }
  }
  if (!std::isfinite(best.objective)) {
    best.flagged = true;
    best.theta_hat = unpack(Eigen::VectorXd::Zero(dim));
  }
  return best;
}

}  // namespace sps
