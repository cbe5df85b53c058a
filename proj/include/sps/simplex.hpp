#ifndef SPS_SIMPLEX_HPP
#define SPS_SIMPLEX_HPP

#include <Eigen/Dense>

#include <functional>

namespace sps {

struct SimplexOptions {
  double initial_step = 0.5;
  int max_evals = 4000;
  /// Stop once the simplex diameter drops below x_tol ...
  double x_tol = 1e-10;
  /// ... or the vertex objective spread is below f_rel |f_best|.
  double f_rel = 1e-14;
  /// Restart from the best vertex this many times after convergence.
  int restarts = 1;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Nelder-Mead (reflect 1, expand 2, contract 1/2, shrink 1/2) on an
/// unconstrained objective; non-finite values are treated as +inf.
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective, const Eigen::VectorXd& x0,
                          const SimplexOptions& options = {});

}  // namespace sps

#endif  // SPS_SIMPLEX_HPP
