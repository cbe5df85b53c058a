#ifndef SPS_STAGE1_ADMM_HPP
#define SPS_STAGE1_ADMM_HPP

#include "sps/sampler.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace sps {

/// Geometric: rho <- min(rho_growth rho, rho_max) every iteration.
/// Balanced: rho is multiplied (divided) by balance_factor whenever the primal
/// residual exceeds balance_ratio times the dual residual (or vice versa),
/// kept within [rho0^2 / rho_max, rho_max].
enum class PenaltySchedule { Geometric, Balanced };

/// Settings for the weighted-l1 log-det ADMM. Unset alpha / rho0 / rho_max
/// resolve per problem size: alpha = 1/sqrt(n), rho0 = n, rho_max = 1e6 rho0.
struct Stage1Config {
  std::optional<double> alpha;
  double a_star = 0.0;
  double b_star = std::numeric_limits<double>::infinity();
  std::optional<double> rho0;
  double rho_growth = 1.05;
  std::optional<double> rho_max;
  PenaltySchedule schedule = PenaltySchedule::Balanced;
  double balance_ratio = 10.0;
  double balance_factor = 2.0;
  /// Anderson acceleration depth on the fixed-point form of the iteration
  /// (0 = plain ADMM). Reduced for large n so the history stays under ~256 MB.
  int anderson_memory = 10;
  /// Residual tolerances, multiplied by n before comparison with Frobenius norms.
  double eps_primal = 1e-5;
  double eps_dual = 1e-5;
  int max_iters = 500;
  bool record_history = false;

  void validate() const;
  [[nodiscard]] Stage1Config resolved(Index n) const;
};

struct SpectralBounds {
  double a = 0.0;
  double b = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double rho = 0.0;
  double objective = 0.0;
};

struct PrecisionEstimate {
  Eigen::MatrixXd p_hat;
  double a_eff = 0.0;
  double b_eff = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  /// False when max_iters was reached before both residual tests passed.
  bool converged = false;
  std::vector<IterationRecord> history;
};

/// Effective spectral bounds (a, b) for the four (a*, b*) cases. Throws if
/// G_min <= 0 or the inputs violate 0 <= a* <= b*.
SpectralBounds effective_bounds(const Eigen::MatrixXd& S, const WeightMatrix& G, double alpha, double a_star,
                                double b_star);

/// argmin_P <S,P> - log det P + (rho/2)|P - P_bar|_F^2 subject to a I <= P <= b I.
///
/// With rho P_bar - S = U diag(mu) U^T the minimizer is U diag(lambda) U^T where
/// lambda_i = clamp((mu_i + sqrt(mu_i^2 + 4 rho)) / (2 rho), a, b).
Eigen::MatrixXd prox_psi(const Eigen::MatrixXd& p_bar, const Eigen::MatrixXd& S, double rho, double a, double b);

/// argmin_P alpha <G,|P|> + (rho/2)|P - P_bar|_F^2 subject to diag(P) >= 0:
/// soft thresholding at (alpha/rho) G_ij, diagonal clamped at zero.
Eigen::MatrixXd prox_phi(const Eigen::MatrixXd& p_bar, const WeightMatrix& G, double alpha, double rho);

/// <S,P> - log det P + alpha <G,|P|>; +inf if P is not PD.
double stage1_objective(const Eigen::MatrixXd& P, const Eigen::MatrixXd& S, const WeightMatrix& G, double alpha);

/// Runs the ADMM until both scaled residuals pass or max_iters is reached.
/// The returned P_hat is the Z-iterate (exact zeros preserved) projected into
/// [a_eff, b_eff] only when its spectrum leaves that interval.
PrecisionEstimate solve_stage1(const Eigen::MatrixXd& S, const WeightMatrix& G, const Stage1Config& cfg);

}  // namespace sps

#endif  // SPS_STAGE1_ADMM_HPP
