#include "sps/stage2_lsq.hpp"

#include "sps/linalg.hpp"
#include "sps/parallel.hpp"
#include "sps/rng.hpp"
#include "sps/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sps {

namespace {

void check_block(const BlockView& block) {
  if (block.c_hat.rows() != block.locs.size() || block.c_hat.cols() != block.locs.size()) {
    throw std::invalid_argument("stage2: C_hat must be n x n for its block");
  }
}

InnerProducts accumulate_products(std::span<const BlockView> blocks, const KernelFamily& family,
                                  const Eigen::VectorXd& theta_rho) {
  InnerProducts ip;
  for (const BlockView& block : blocks) {
    const Points& X = block.locs.coords();
    const Index n = block.locs.size();
    const Index d = block.locs.dim();
    for (Index j = 0; j < n; ++j) {
      ip.rc += block.c_hat(j, j);
      ip.rr += 1.0;
      ip.dc += block.c_hat(j, j);
      for (Index i = j + 1; i < n; ++i) {
        const double r = correlation_unchecked(family.tag, X.row(i).data(), X.row(j).data(), d, theta_rho.data());
        ip.rc += r * (block.c_hat(i, j) + block.c_hat(j, i));
        ip.rr += 2.0 * r * r;
      }
    }
    ip.n += static_cast<double>(n);
  }
  return ip;
}

double residual_norm2(std::span<const BlockView> blocks, const KernelFamily& family, const Eigen::VectorXd& theta_rho,
                      const InnerSolution& inner) {
  double acc = 0.0;
  for (const BlockView& block : blocks) {
    const Points& X = block.locs.coords();
    const Index n = block.locs.size();
    const Index d = block.locs.dim();
    for (Index j = 0; j < n; ++j) {
      const double diag = inner.theta_v + inner.theta_0 - block.c_hat(j, j);
      acc += diag * diag;
      for (Index i = j + 1; i < n; ++i) {
        const double fitted =
            inner.theta_v * correlation_unchecked(family.tag, X.row(i).data(), X.row(j).data(), d, theta_rho.data());
        const double e1 = fitted - block.c_hat(i, j);
        const double e2 = fitted - block.c_hat(j, i);
        acc += e1 * e1 + e2 * e2;
      }
    }
  }
  return acc;
}

struct Candidate {
  Eigen::VectorXd theta_rho;
  double value = std::numeric_limits<double>::infinity();
};

}  // namespace

LongVectors LongVectors::build(const Eigen::MatrixXd& C_hat, const LocationSet& locs, const KernelFamily& family,
                               const Eigen::VectorXd& theta_rho) {
  const Index n = locs.size();
  if (C_hat.rows() != n || C_hat.cols() != n) throw std::invalid_argument("LongVectors: C_hat must be n x n");
  const Eigen::MatrixXd R = correlation_matrix(locs, family, theta_rho);
  LongVectors lv;
  lv.c_hat = C_hat.reshaped();
  lv.r_vec = R.reshaped();
  lv.d_vec = Eigen::MatrixXd::Identity(n, n).reshaped();
  return lv;
}

InnerProducts inner_products(const LongVectors& lv) {
  return {lv.r_vec.dot(lv.c_hat), lv.r_vec.squaredNorm(), lv.d_vec.dot(lv.c_hat), lv.d_vec.squaredNorm()};
}

InnerSolution inner_solution(const InnerProducts& ip) {
  if (ip.rc <= ip.dc) return {0.0, std::max(0.0, ip.dc / ip.n), InnerCase::NuggetOnly};
  if (ip.rc >= ip.dc * ip.rr / ip.n) return {std::max(0.0, ip.rc / ip.rr), 0.0, InnerCase::VarianceOnly};
  const double denom = ip.rr - ip.n;
  return {(ip.rc - ip.dc) / denom, (ip.dc * ip.rr / ip.n - ip.rc) / denom, InnerCase::Interior};
}

InnerSolution inner_solution(const LongVectors& lv) { return inner_solution(inner_products(lv)); }

double inner_solution_no_nugget(const InnerProducts& ip) { return std::max(0.0, ip.rc / ip.rr); }

double inner_solution_no_nugget(const LongVectors& lv) { return inner_solution_no_nugget(inner_products(lv)); }

OuterEvaluation evaluate_outer(std::span<const BlockView> blocks, const KernelFamily& family,
                               const Eigen::VectorXd& theta_rho, bool nugget_enabled) {
  if (blocks.empty()) throw std::invalid_argument("evaluate_outer: no blocks");
  if (theta_rho.size() != family.q) throw std::invalid_argument("evaluate_outer: theta_rho length mismatch");
  for (Index k = 0; k < theta_rho.size(); ++k) {
    if (!(theta_rho[k] > 0.0)) throw std::invalid_argument("evaluate_outer: theta_rho must be > 0");
  }
  for (const BlockView& b : blocks) {
    check_block(b);
    family.validate(b.locs.dim());
  }
  const InnerProducts ip = accumulate_products(blocks, family, theta_rho);
  OuterEvaluation out;
  if (nugget_enabled) {
    out.inner = inner_solution(ip);
  } else {
    out.inner = {inner_solution_no_nugget(ip), 0.0, InnerCase::VarianceOnly};
  }
  out.objective = 0.5 * residual_norm2(blocks, family, theta_rho, out.inner);
  return out;
}

double outer_objective(const Eigen::VectorXd& theta_rho, const Eigen::MatrixXd& C_hat, const LocationSet& locs,
                       const KernelFamily& family, bool nugget_enabled) {
  const BlockView block{locs, C_hat};
  return evaluate_outer(std::span<const BlockView>(&block, 1), family, theta_rho, nugget_enabled).objective;
}

Eigen::MatrixXd invert_precision(const PrecisionEstimate& est) { return spd_inverse(est.p_hat); }

Eigen::MatrixXd outer_hessian(std::span<const BlockView> blocks, const KernelFamily& family,
                              const Eigen::VectorXd& theta_rho, bool nugget_enabled, double rel_step) {
  const Index q = theta_rho.size();
  auto f = [&](const Eigen::VectorXd& t) { return evaluate_outer(blocks, family, t, nugget_enabled).objective; };
  const Eigen::VectorXd h = rel_step * theta_rho;
  const double f0 = f(theta_rho);
  Eigen::MatrixXd H(q, q);
  for (Index k = 0; k < q; ++k) {
    Eigen::VectorXd up = theta_rho;
    Eigen::VectorXd down = theta_rho;
    up[k] += h[k];
    down[k] -= h[k];
    H(k, k) = (f(up) - 2.0 * f0 + f(down)) / (h[k] * h[k]);
    for (Index l = 0; l < k; ++l) {
      Eigen::VectorXd pp = theta_rho, pm = theta_rho, mp = theta_rho, mm = theta_rho;
      pp[k] += h[k], pp[l] += h[l];
      pm[k] += h[k], pm[l] -= h[l];
      mp[k] -= h[k], mp[l] += h[l];
      mm[k] -= h[k], mm[l] -= h[l];
      H(k, l) = H(l, k) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h[k] * h[l]);
    }
  }
  return H;
}

Stage2Result fit_stage2(const Eigen::MatrixXd& C_hat, const LocationSet& locs, const KernelFamily& family,
                        bool nugget_enabled, const Stage2Options& opts) {
  const BlockView block{locs, C_hat};
  return fit_stage2_blocks(std::span<const BlockView>(&block, 1), family, nugget_enabled, opts);
}

Stage2Result fit_stage2_blocks(std::span<const BlockView> blocks, const KernelFamily& family, bool nugget_enabled,
                               const Stage2Options& opts) {
  if (blocks.empty()) throw std::invalid_argument("fit_stage2: no blocks");
  double d_max = 0.0;
  for (const BlockView& b : blocks) {
    check_block(b);
    family.validate(b.locs.dim());
    d_max = std::max(d_max, b.locs.diameter());
  }
  if (!(d_max > 0.0)) throw std::invalid_argument("fit_stage2: every block has a single location");
  const double theta_lo = 1e-6 * d_max;
  const double eps = opts.eps_rel * d_max;

  Stage2Result result;
  result.d_max = d_max;
  int evaluations = 0;
  auto f = [&](const Eigen::VectorXd& t) {
    ++evaluations;
    return evaluate_outer(blocks, family, t, nugget_enabled).objective;
  };

  Candidate best;
  if (family.q == 1) {
    const int m = std::max(opts.grid_points, 3);
    std::vector<double> grid(static_cast<std::size_t>(m));
    std::vector<double> values(grid.size());
    const double log_lo = std::log(theta_lo);
    const double log_hi = std::log(d_max);
    for (int k = 0; k < m; ++k) {
      grid[static_cast<std::size_t>(k)] =
          k == m - 1 ? d_max : std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(k) / (m - 1));
      values[static_cast<std::size_t>(k)] = f(Eigen::VectorXd::Constant(1, grid[static_cast<std::size_t>(k)]));
    }
    const auto k_best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    best = {Eigen::VectorXd::Constant(1, grid[k_best]), values[k_best]};

    // Golden-section search inside the bracketing probes.
    constexpr double kInvPhi = 0.6180339887498949;
    double lo = grid[k_best == 0 ? 0 : k_best - 1];
    double hi = grid[std::min(k_best + 1, grid.size() - 1)];
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = f(Eigen::VectorXd::Constant(1, x1));
    double f2 = f(Eigen::VectorXd::Constant(1, x2));
    auto consider = [&](double x, double v) {
      if (v < best.value) best = {Eigen::VectorXd::Constant(1, x), v};
    };
    consider(x1, f1);
    consider(x2, f2);
    while (hi - lo > eps) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - kInvPhi * (hi - lo);
        f1 = f(Eigen::VectorXd::Constant(1, x1));
        consider(x1, f1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + kInvPhi * (hi - lo);
        f2 = f(Eigen::VectorXd::Constant(1, x2));
        consider(x2, f2);
      }
    }
    const double t = best.theta_rho[0];
    result.flagged = (t <= grid.front() * (1.0 + 1e-12)) || (t >= grid.back() * (1.0 - 1e-12));
  } else {
    const Index q = family.q;
    const int n_starts = std::max(1, opts.n_starts);
    Rng rng(opts.seed);
    std::vector<Eigen::VectorXd> starts;
    const double log_lo = std::log(theta_lo);
    const double log_hi = std::log(d_max);
    for (int s = 0; s < n_starts; ++s) {
      Eigen::VectorXd u(q);
      for (Index k = 0; k < q; ++k) u[k] = rng.uniform(log_lo, log_hi);
      starts.push_back(u);
    }
    std::vector<Candidate> finals(starts.size());
    std::vector<double> probes(starts.size());
    std::vector<int> evals(starts.size(), 0);
    parallel_for(starts.size(), [&](std::size_t s) {
      auto g = [&](const Eigen::VectorXd& u) {
        return evaluate_outer(blocks, family, u.array().exp().matrix(), nugget_enabled).objective;
      };
      probes[s] = g(starts[s]);
      SimplexOptions so;
      so.max_evals = opts.max_evals_per_start;
      const SimplexResult sr = nelder_mead(g, starts[s], so);
      finals[s] = {sr.x.array().exp().matrix(), sr.f};
      evals[s] = sr.evaluations + 1;
    });
    for (int e : evals) evaluations += e;
    double best_probe = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < finals.size(); ++s) {
      best_probe = std::min(best_probe, probes[s]);
      if (finals[s].value < best.value) best = finals[s];
    }
    result.flagged = !(best.value < best_probe) && best_probe > 0.0;

    // Pattern polish: stop once the centre beats all +-eps, +-2eps axis probes.
    for (int move = 0; move < 1000; ++move) {
      Candidate step = best;
      for (Index k = 0; k < q; ++k) {
        for (double delta : {-2.0 * eps, -eps, eps, 2.0 * eps}) {
          Eigen::VectorXd t = best.theta_rho;
          t[k] += delta;
          if (!(t[k] > 0.0)) continue;
          const double v = f(t);
          if (v < step.value) step = {t, v};
        }
      }
      if (!(step.value < best.value)) break;
      best = step;
    }
  }

  const OuterEvaluation final_eval = evaluate_outer(blocks, family, best.theta_rho, nugget_enabled);
  ++evaluations;
  result.theta_hat = CovarianceParams{family, best.theta_rho, final_eval.inner.theta_v, final_eval.inner.theta_0};
  result.objective = final_eval.objective;
  result.active_case = final_eval.inner.active_case;

  const Eigen::MatrixXd H = outer_hessian(blocks, family, best.theta_rho, nugget_enabled);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  result.curvature_ok = H.allFinite() && es.eigenvalues().minCoeff() > 0.0;
  result.evaluations = evaluations;
  return result;
}

}  // namespace sps
