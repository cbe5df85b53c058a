#ifndef SPS_STAGE2_LSQ_HPP
#define SPS_STAGE2_LSQ_HPP

#include "sps/kernels.hpp"
#include "sps/stage1_admm.hpp"

#include <cstdint>
#include <span>

namespace sps {

/// Vectorized c_hat, r(theta_rho) and the identity indicator d, each of length n^2.
struct LongVectors {
  Eigen::VectorXd c_hat;
  Eigen::VectorXd r_vec;
  Eigen::VectorXd d_vec;

  static LongVectors build(const Eigen::MatrixXd& C_hat, const LocationSet& locs, const KernelFamily& family,
                           const Eigen::VectorXd& theta_rho);
};

/// The four scalars the inner problem depends on. `n` is d^T d = d^T r, which
/// is the total location count when several blocks are concatenated.
struct InnerProducts {
  double rc = 0.0;
  double rr = 0.0;
  double dc = 0.0;
  double n = 0.0;
};

InnerProducts inner_products(const LongVectors& lv);

enum class InnerCase { NuggetOnly, Interior, VarianceOnly };

struct InnerSolution {
  double theta_v = 0.0;
  double theta_0 = 0.0;
  InnerCase active_case = InnerCase::NuggetOnly;
};

/// Closed-form minimizer of (1/2)|theta_v r + theta_0 d - c|^2 over theta_v, theta_0 >= 0.
/// The interior formulas are used only under strict inequalities; ties go to the
/// adjacent boundary case, where the formulas coincide.
InnerSolution inner_solution(const InnerProducts& ip);
InnerSolution inner_solution(const LongVectors& lv);

/// Nugget-free variant: max(0, r^T c / |r|^2).
double inner_solution_no_nugget(const InnerProducts& ip);
double inner_solution_no_nugget(const LongVectors& lv);

/// One block of the (possibly segmented) least-squares fit.
struct BlockView {
  const LocationSet& locs;
  const Eigen::MatrixXd& c_hat;
};

struct OuterEvaluation {
  double objective = 0.0;
  InnerSolution inner;
};

/// f(theta_rho; c_hat) summed over blocks, streaming over (i, j) without
/// materializing the long vectors.
OuterEvaluation evaluate_outer(std::span<const BlockView> blocks, const KernelFamily& family,
                               const Eigen::VectorXd& theta_rho, bool nugget_enabled);

double outer_objective(const Eigen::VectorXd& theta_rho, const Eigen::MatrixXd& C_hat, const LocationSet& locs,
                       const KernelFamily& family, bool nugget_enabled);

struct Stage2Options {
  /// Search resolution as a fraction of D_max.
  double eps_rel = 1e-6;
  /// Log-spaced probes bracketing the isotropic line search.
  int grid_points = 48;
  /// Multi-start count for anisotropic families.
  int n_starts = 8;
  std::uint64_t seed = 0;
  int max_evals_per_start = 3000;
};

struct Stage2Result {
  CovarianceParams theta_hat;
  double objective = 0.0;
  InnerCase active_case = InnerCase::NuggetOnly;
  /// Finite-difference Hessian of f at theta_hat_rho is positive definite.
  bool curvature_ok = false;
  /// No search start improved on the best probe.
  bool flagged = false;
  double d_max = 0.0;
  int evaluations = 0;
};

/// C_hat = P_hat^{-1} via Cholesky; throws std::runtime_error if P_hat is not PD.
Eigen::MatrixXd invert_precision(const PrecisionEstimate& est);

Stage2Result fit_stage2(const Eigen::MatrixXd& C_hat, const LocationSet& locs, const KernelFamily& family,
                        bool nugget_enabled, const Stage2Options& opts = {});

/// Joint fit minimizing the sum of per-block objectives.
Stage2Result fit_stage2_blocks(std::span<const BlockView> blocks, const KernelFamily& family, bool nugget_enabled,
                               const Stage2Options& opts = {});

/// Central-difference Hessian of f with per-coordinate step rel_step * theta_rho_k.
Eigen::MatrixXd outer_hessian(std::span<const BlockView> blocks, const KernelFamily& family,
                              const Eigen::VectorXd& theta_rho, bool nugget_enabled, double rel_step = 1e-4);

}  // namespace sps

#endif  // SPS_STAGE2_LSQ_HPP
