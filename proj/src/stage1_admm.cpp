#include "sps/stage1_admm.hpp"

#include "sps/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sps {

namespace {

// Root of rho t^2 - mu t - 1 = 0 on t > 0, written to avoid cancellation for mu < 0.
double log_barrier_root(double mu, double rho) {
  const double root = std::sqrt(mu * mu + 4.0 * rho);
  return mu >= 0.0 ? (mu + root) / (2.0 * rho) : 2.0 / (root - mu);
}

// Type-II Anderson extrapolation over the last `memory` differences.
class Anderson {
 public:
  explicit Anderson(int memory) : memory_(static_cast<std::size_t>(memory)) {}

  void reset() {
    dx_.clear();
    df_.clear();
    has_last_ = false;
  }

  // x is the current point, f = T(x) - x. Returns the next point.
  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& f) {
    if (has_last_) {
      if (dx_.size() == memory_) {
        dx_.erase(dx_.begin());
        df_.erase(df_.begin());
        // Drop the oldest row and column of the Gram matrix.
        const auto m = static_cast<Index>(memory_) - 1;
        gram_.topLeftCorner(m, m) = gram_.bottomRightCorner(m, m).eval();
      }
      dx_.push_back(x - x_last_);
      df_.push_back(f - f_last_);
      const auto last = static_cast<Index>(df_.size()) - 1;
      if (gram_.rows() < static_cast<Index>(memory_)) gram_.resize(static_cast<Index>(memory_), static_cast<Index>(memory_));
      for (Index j = 0; j <= last; ++j) {
        gram_(last, j) = gram_(j, last) = df_.back().dot(df_[static_cast<std::size_t>(j)]);
      }
    }
    x_last_ = x;
    f_last_ = f;
    has_last_ = true;
    const auto k = static_cast<Index>(df_.size());
    if (k == 0) return x + f;
    Eigen::MatrixXd g = gram_.topLeftCorner(k, k);
    Eigen::VectorXd rhs(k);
    for (Index i = 0; i < k; ++i) rhs[i] = df_[static_cast<std::size_t>(i)].dot(f);
    g.diagonal().array() += 1e-10 * g.trace() / static_cast<double>(k) + 1e-300;
    const Eigen::VectorXd gamma = g.ldlt().solve(rhs);
    Eigen::VectorXd out = x + f;
    for (Index i = 0; i < k; ++i) {
      out -= gamma[i] * (dx_[static_cast<std::size_t>(i)] + df_[static_cast<std::size_t>(i)]);
    }
    return out;
  }

 private:
  std::size_t memory_;
  std::vector<Eigen::VectorXd> dx_;
  std::vector<Eigen::VectorXd> df_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd x_last_;
  Eigen::VectorXd f_last_;
  bool has_last_ = false;
};

Eigen::VectorXd flatten(const Eigen::MatrixXd& A) { return Eigen::Map<const Eigen::VectorXd>(A.data(), A.size()); }

}  // namespace

void Stage1Config::validate() const {
  if (alpha && !(*alpha > 0.0)) throw std::invalid_argument("Stage1Config: alpha must be > 0");
  if (!(a_star >= 0.0) || !(b_star >= a_star) || !(b_star > 0.0)) {
    throw std::invalid_argument("Stage1Config: need 0 <= a_star <= b_star and b_star > 0");
  }
  if (rho0 && !(*rho0 > 0.0)) throw std::invalid_argument("Stage1Config: rho0 must be > 0");
  if (!(rho_growth >= 1.0)) throw std::invalid_argument("Stage1Config: rho_growth must be >= 1");
  if (rho_max && rho0 && !(*rho_max >= *rho0)) throw std::invalid_argument("Stage1Config: rho_max < rho0");
  if (!(eps_primal > 0.0) || !(eps_dual > 0.0)) throw std::invalid_argument("Stage1Config: tolerances must be > 0");
  if (max_iters < 1) throw std::invalid_argument("Stage1Config: max_iters must be >= 1");
  if (anderson_memory < 0) throw std::invalid_argument("Stage1Config: anderson_memory must be >= 0");
  if (!(balance_ratio > 1.0) || !(balance_factor > 1.0)) {
    throw std::invalid_argument("Stage1Config: balance_ratio and balance_factor must be > 1");
  }
}

Stage1Config Stage1Config::resolved(Index n) const {
  Stage1Config out = *this;
  const auto nd = static_cast<double>(n);
  if (!out.alpha) out.alpha = 1.0 / std::sqrt(nd);
  if (!out.rho0) out.rho0 = nd;
  if (!out.rho_max) out.rho_max = 1e6 * *out.rho0;
  out.validate();
  return out;
}

SpectralBounds effective_bounds(const Eigen::MatrixXd& S, const WeightMatrix& G, double alpha, double a_star,
                                double b_star) {
  if (!(alpha > 0.0)) throw std::invalid_argument("effective_bounds: alpha must be > 0");
  if (!(a_star >= 0.0) || !(b_star >= a_star) || !(b_star > 0.0)) {
    throw std::invalid_argument("effective_bounds: need 0 <= a_star <= b_star, b_star > 0");
  }
  if (!(G.g_min > 0.0)) throw std::invalid_argument("effective_bounds: G_min must be > 0");
  const auto n = static_cast<double>(S.rows());
  const bool upper_finite = std::isfinite(b_star);

  if (a_star > 0.0 && upper_finite) return {a_star, b_star};

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const double spectral_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  const double scale = spectral_norm + alpha * G.G.norm();

  SpectralBounds out;
  if (a_star == 0.0 && upper_finite) {
    out = {std::min(b_star, 1.0 / scale), b_star};
  } else if (a_star > 0.0) {
    out = {a_star, n * a_star / (alpha * G.g_min) * std::max(scale, 1.0 / a_star)};
  } else {
    out = {1.0 / scale, n / (alpha * G.g_min)};
  }
  if (!(out.a > 0.0) || !(out.a <= out.b)) {
    throw std::invalid_argument("effective_bounds: inconsistent bounds (need 0 < a <= b)");
  }
  return out;
}

Eigen::MatrixXd prox_psi(const Eigen::MatrixXd& p_bar, const Eigen::MatrixXd& S, double rho, double a, double b) {
  if (!(rho > 0.0)) throw std::invalid_argument("prox_psi: rho must be > 0");
  if (!(a > 0.0) || !(a <= b)) throw std::invalid_argument("prox_psi: need 0 < a <= b");
  SymmetricEigen eig = symmetric_eigen(symmetrized(rho * p_bar - S));
  Eigen::VectorXd lambda(eig.values.size());
  for (Index i = 0; i < lambda.size(); ++i) {
    lambda[i] = std::clamp(log_barrier_root(eig.values[i], rho), a, b);
  }
  // lambda > 0, so V diag(lambda) V^T = B B^T with B = V diag(sqrt(lambda)).
  eig.vectors *= lambda.cwiseSqrt().asDiagonal();
  return gram(eig.vectors);
}

Eigen::MatrixXd prox_phi(const Eigen::MatrixXd& p_bar, const WeightMatrix& G, double alpha, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("prox_phi: rho must be > 0");
  const double step = alpha / rho;
  const Index n = p_bar.rows();
  Eigen::MatrixXd out(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double v = p_bar(i, j);
      const double t = step * G.G(i, j);
      if (i == j) {
        out(i, j) = std::max(v - t, 0.0);
      } else {
        const double shrunk = std::max(std::abs(v) - t, 0.0);
        out(i, j) = v < 0.0 ? -shrunk : shrunk;
      }
    }
  }
  return out;
}

double stage1_objective(const Eigen::MatrixXd& P, const Eigen::MatrixXd& S, const WeightMatrix& G, double alpha) {
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return (S.array() * P.array()).sum() - logdet + alpha * (G.G.array() * P.array().abs()).sum();
}

PrecisionEstimate solve_stage1(const Eigen::MatrixXd& S, const WeightMatrix& G, const Stage1Config& config) {
  const Index n = S.rows();
  if (S.cols() != n || G.G.rows() != n || G.G.cols() != n || n == 0) {
    throw std::invalid_argument("solve_stage1: S and G must be square of the same size");
  }
  const Stage1Config cfg = config.resolved(n);
  const double alpha = *cfg.alpha;
  const SpectralBounds bounds = effective_bounds(S, G, alpha, cfg.a_star, cfg.b_star);
  const double tol_primal = cfg.eps_primal * static_cast<double>(n);
  const double tol_dual = cfg.eps_dual * static_cast<double>(n);

  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    Z(i, i) = std::clamp(1.0 / (S(i, i) + alpha * G.G(i, i)), bounds.a, bounds.b);
  }
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  double rho = *cfg.rho0;
  const double rho_min = *cfg.rho0 * (*cfg.rho0 / *cfg.rho_max);

  PrecisionEstimate est;
  est.a_eff = bounds.a;
  est.b_eff = bounds.b;

  // With u = Z + W/rho (the prox_phi input), one sweep is the map
  // u -> P + W/rho, and Z = prox_phi(u) holds after every plain sweep.
  // Anderson steps extrapolate u; a step whose fixed-point residual grows is
  // undone and the history cleared.
  const double per_slot = 16.0 * static_cast<double>(n) * static_cast<double>(n);
  const int memory = std::min(cfg.anderson_memory, static_cast<int>(256e6 / per_slot));
  const bool accelerate = memory > 0;
  Anderson anderson(std::max(memory, 1));
  bool on_map = false;
  bool extrapolated = false;
  Eigen::MatrixXd Z_safe;
  Eigen::MatrixXd W_safe;
  double f_safe = 0.0;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const Eigen::MatrixXd P = prox_psi(Z - W / rho, S, rho, bounds.a, bounds.b);
    Eigen::MatrixXd Z_next = symmetrized(prox_phi(P + W / rho, G, alpha, rho));
    Eigen::MatrixXd W_next = symmetrized(W + rho * (P - Z_next));

    est.primal_residual = (P - Z_next).norm();
    est.dual_residual = rho * (Z_next - Z).norm();
    est.iterations = it;
    const double f_norm = (P - Z).norm();
    if (cfg.record_history) {
      est.history.push_back({it, est.primal_residual, est.dual_residual, rho, stage1_objective(Z_next, S, G, alpha)});
    }
    if (est.primal_residual <= tol_primal && est.dual_residual <= tol_dual) {
      Z = std::move(Z_next);
      est.converged = true;
      break;
    }
    if (extrapolated && f_norm > f_safe) {
      Z = std::move(Z_safe);
      W = std::move(W_safe);
      anderson.reset();
      extrapolated = false;
      continue;
    }

    const double rho_prev = rho;
    if (cfg.schedule == PenaltySchedule::Geometric) {
      rho = std::min(rho * cfg.rho_growth, *cfg.rho_max);
    } else if (est.primal_residual > cfg.balance_ratio * est.dual_residual) {
      rho = std::min(rho * cfg.balance_factor, *cfg.rho_max);
    } else if (est.dual_residual > cfg.balance_ratio * est.primal_residual) {
      rho = std::max(rho / cfg.balance_factor, rho_min);
    }

    if (!accelerate || !on_map || rho != rho_prev) {
      if (accelerate) anderson.reset();
      on_map = true;
      extrapolated = false;
      Z = std::move(Z_next);
      W = std::move(W_next);
      continue;
    }
    const Eigen::MatrixXd u = Z + W / rho;
    const Eigen::VectorXd u_next = anderson.step(flatten(u), flatten(P - Z));
    const Eigen::MatrixXd u_acc = symmetrized(Eigen::Map<const Eigen::MatrixXd>(u_next.data(), n, n));
    Z_safe = std::move(Z_next);
    W_safe = std::move(W_next);
    f_safe = f_norm;
    Z = symmetrized(prox_phi(u_acc, G, alpha, rho));
    W = rho * (u_acc - Z);
    extrapolated = true;
  }

  const SymmetricEigen eig = symmetric_eigen(Z);
  const double slack = 1e-9;
  if (eig.values.minCoeff() < bounds.a - slack || eig.values.maxCoeff() > bounds.b + slack * std::max(1.0, bounds.b)) {
    Z = clip_spectrum(Z, bounds.a, bounds.b);
  }
  est.p_hat = std::move(Z);
  est.objective = stage1_objective(est.p_hat, S, G, alpha);
  return est;
}

}  // namespace sps
