#include "fixtures.hpp"
#include "oracles.hpp"

#include "sps/linalg.hpp"
#include "sps/stage1_admm.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

using namespace sps;
using fixture::random_instance;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

WeightMatrix scalar_weight(double g) { return WeightMatrix::from_matrix(Eigen::MatrixXd::Constant(1, 1, g)); }

Stage1Config tight(double alpha, int max_iters = 200000) {
  Stage1Config c;
  c.alpha = alpha;
  c.eps_primal = 1e-11;
  c.eps_dual = 1e-11;
  c.max_iters = max_iters;
  return c;
}

double max_abs(const Eigen::MatrixXd& A) { return A.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("stage1") {
  TEST_CASE("effective bounds: the four branches") {
    const Eigen::MatrixXd S = Eigen::MatrixXd::Constant(1, 1, 2.0);
    const auto G = scalar_weight(1.0);

    auto pass = effective_bounds(S, G, 1.0, 0.5, 2.0);
    CHECK(pass.a == 0.5);
    CHECK(pass.b == 2.0);

    auto open = effective_bounds(S, G, 1.0, 0.0, kInf);
    CHECK(open.a == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(open.b == doctest::Approx(1.0).epsilon(1e-15));

    auto upper = effective_bounds(S, G, 1.0, 0.0, 0.2);
    CHECK(upper.a == doctest::Approx(0.2));
    CHECK(upper.b == 0.2);

    auto lower = effective_bounds(S, G, 1.0, 0.1, kInf);
    CHECK(lower.a == 0.1);
    CHECK(lower.b == doctest::Approx(1.0 * 0.1 / 1.0 * std::max(3.0, 10.0)));
  }

  TEST_CASE("effective bounds agree with an SVD recomputation") {
    Rng rng(5);
    for (int t = 0; t < 10; ++t) {
      const auto inst = random_instance(6, 8, 100 + t);
      const double alpha = rng.uniform(0.05, 1.0);
      const std::pair<double, double> cases[] = {{0.3, 4.0}, {0.0, 4.0}, {0.02, kInf}, {0.0, kInf}};
      for (const auto& [as, bs] : cases) {
        const auto got = effective_bounds(inst.S, inst.G, alpha, as, bs);
        const auto want = oracle::bounds(inst.S, inst.G.G, alpha, as, bs);
        CHECK(got.a == doctest::Approx(want.first).epsilon(1e-10));
        CHECK(got.b == doctest::Approx(want.second).epsilon(1e-10));
        CHECK(got.a > 0.0);
        CHECK(got.a <= got.b);
      }
    }
  }

  TEST_CASE("effective bounds reject bad inputs") {
    const Eigen::MatrixXd S = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd g(2, 2);
    g << 0.0, 1.0, 1.0, 0.0;
    CHECK_THROWS_AS(effective_bounds(S, WeightMatrix::from_matrix(g), 1.0, 0.0, kInf), std::invalid_argument);
    const auto G = WeightMatrix::from_matrix(Eigen::MatrixXd::Ones(2, 2));
    CHECK_THROWS_AS(effective_bounds(S, G, 1.0, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(effective_bounds(S, G, 0.0, 0.0, kInf), std::invalid_argument);
  }

  TEST_CASE("prox_psi closed forms") {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(3, 3);
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    CHECK(max_abs(prox_psi(I, Z, 1.0, 0.1, 10.0) - golden * I) <= 1e-12);
    CHECK(max_abs(prox_psi(I, Z, 1.0, 0.1, 1.2) - 1.2 * I) <= 1e-12);
    // scalar oracle: min -log t + (rho/2)(t - 1)^2 at rho = 2 is (1 + sqrt(3)) / 2
    CHECK(max_abs(prox_psi(I, Z, 2.0, 0.1, 10.0) - 0.5 * (1.0 + std::sqrt(3.0)) * I) <= 1e-12);
  }

  TEST_CASE("prox_psi matches projected gradient at rho = 2") {
    Rng rng(11);
    for (int t = 0; t < 10; ++t) {
      const Eigen::MatrixXd p_bar = Eigen::MatrixXd::Identity(4, 4) + fixture::random_symmetric(4, rng, 0.4);
      const Eigen::MatrixXd A = fixture::random_matrix(4, 4, rng);
      const Eigen::MatrixXd S = 0.3 * A * A.transpose();
      const auto got = prox_psi(p_bar, S, 2.0, 0.05, 1e3);
      const auto want = oracle::prox_psi(p_bar, S, 2.0, 0.05, 1e3);
      CHECK(max_abs(got - want) <= 1e-6);
    }
  }

  TEST_CASE("prox_psi output is symmetric and inside the bounds") {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
      const Eigen::MatrixXd p_bar = fixture::random_symmetric(5, rng, 3.0);
      const Eigen::MatrixXd S = fixture::random_symmetric(5, rng);
      const auto P = prox_psi(p_bar, S, rng.uniform(0.1, 10.0), 0.2, 1.5);
      CHECK(max_abs(P - P.transpose()) <= 1e-14);
      CHECK(min_eigenvalue(P) >= 0.2 - 1e-10);
      CHECK(max_eigenvalue(P) <= 1.5 + 1e-10);
    }
  }

  TEST_CASE("prox_phi soft thresholding") {
    Eigen::MatrixXd p_bar(3, 3);
    p_bar << -0.5, 5.0, -1.0, 5.0, 3.0, 2.5, -1.0, 2.5, 1.0;
    const auto G = WeightMatrix::from_matrix(Eigen::MatrixXd::Constant(3, 3, 2.0));
    const auto Z = prox_phi(p_bar, G, 1.0, 1.0);
    CHECK(Z(0, 1) == 3.0);
    CHECK(Z(0, 2) == 0.0);
    CHECK(Z(1, 2) == 0.5);
    CHECK(Z(0, 0) == 0.0);
    CHECK(Z(1, 1) == 1.0);
    CHECK(Z(2, 2) == 0.0);
    Eigen::MatrixXd neg = p_bar;
    neg(0, 1) = neg(1, 0) = -5.0;
    CHECK(prox_phi(neg, G, 1.0, 1.0)(0, 1) == -3.0);
  }

  TEST_CASE("prox_phi matches entrywise golden section") {
    Rng rng(13);
    for (int t = 0; t < 10; ++t) {
      const auto inst = random_instance(5, 3, 200 + t);
      const Eigen::MatrixXd p_bar = fixture::random_symmetric(5, rng, 4.0);
      const double alpha = rng.uniform(0.1, 2.0);
      const double rho = rng.uniform(0.5, 5.0);
      CHECK(max_abs(prox_phi(p_bar, inst.G, alpha, rho) - oracle::prox_phi(p_bar, inst.G.G, alpha, rho)) <= 1e-6);
    }
  }

  TEST_CASE("scalar instance converges to 1/(s + alpha g)") {
    const auto est = solve_stage1(Eigen::MatrixXd::Constant(1, 1, 2.0), scalar_weight(1.0), tight(1.0));
    CHECK(est.converged);
    CHECK(est.p_hat(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
  }

  TEST_CASE("vanishing alpha recovers the inverse sample covariance") {
    const auto inst = random_instance(3, 20, 31);
    const auto est = solve_stage1(inst.S, inst.G, tight(1e-9));
    CHECK(est.converged);
    const Eigen::MatrixXd Sinv = inst.S.inverse();
    CHECK(max_abs(est.p_hat - Sinv) <= 1e-4 * std::max(1.0, max_abs(Sinv)));
  }

  TEST_CASE("matches the dual oracle on a random n=5 instance") {
    const auto inst = random_instance(5, 12, 41);
    const double alpha = 0.3;
    const auto est = solve_stage1(inst.S, inst.G, tight(alpha));
    const auto ref = oracle::stage1_dual(inst.S, inst.G.G, alpha, est.a_eff, est.b_eff, 200000, 1e-12);
    CHECK(est.converged);
    CHECK(max_abs(est.p_hat - ref.P) <= 1e-4);
    CHECK(est.objective <= oracle::stage1_objective(ref.P, inst.S, inst.G.G, alpha) + 1e-8);
  }

  TEST_CASE("KKT certificate and spectral feasibility at default tolerances") {
    for (int t = 0; t < 10; ++t) {
      const auto inst = random_instance(6, 10, 300 + t);
      Stage1Config cfg;
      cfg.max_iters = 20000;
      const auto est = solve_stage1(inst.S, inst.G, cfg);
      REQUIRE(est.converged);
      const double alpha = 1.0 / std::sqrt(6.0);
      const double tol = 1e-5 * 6.0;
      const Eigen::MatrixXd C = spd_inverse(est.p_hat);
      for (Index i = 0; i < 6; ++i) {
        for (Index j = 0; j < 6; ++j) {
          if (i == j) continue;
          const double g = inst.G.G(i, j);
          const double p = est.p_hat(i, j);
          if (p != 0.0) {
            CHECK(std::abs(inst.S(i, j) - C(i, j) + alpha * g * (p > 0 ? 1.0 : -1.0)) <= 10.0 * tol);
          } else {
            CHECK(std::abs(inst.S(i, j) - C(i, j)) <= alpha * g + 10.0 * tol);
          }
        }
      }
      CHECK(min_eigenvalue(est.p_hat) >= est.a_eff - 1e-8);
      CHECK(max_eigenvalue(est.p_hat) <= est.b_eff + 1e-8);
    }
  }

  TEST_CASE("residuals shrink under a constant penalty") {
    for (int t = 0; t < 5; ++t) {
      const auto inst = random_instance(6, 10, 400 + t);
      Stage1Config cfg;
      cfg.schedule = PenaltySchedule::Geometric;
      cfg.rho_growth = 1.0;
      cfg.rho0 = 1.0;
      cfg.eps_primal = cfg.eps_dual = 1e-300;
      cfg.max_iters = 200;
      cfg.record_history = true;
      const auto est = solve_stage1(inst.S, inst.G, cfg);
      const auto combined = [&](int it) {
        const auto& h = est.history[static_cast<std::size_t>(it - 1)];
        return std::max(h.primal_residual, h.dual_residual);
      };
      // Once at round-off the residuals just jitter.
      for (int l = 10; 2 * l <= 200 && combined(l) > 1e-12; l += 10) CHECK(combined(2 * l) < combined(l));
    }
  }

  TEST_CASE("a larger weight never enlarges the matching entry (2x2)") {
    Eigen::Matrix2d S;
    S << 1.0, 0.6, 0.6, 1.0;
    double prev = kInf;
    for (double g = 0.1; g <= 3.0; g += 0.1) {
      Eigen::Matrix2d G;
      G << 1.0, g, g, 1.0;
      const auto est = solve_stage1(S, WeightMatrix::from_matrix(G), tight(0.3));
      const double now = std::abs(est.p_hat(0, 1));
      CHECK(now <= prev + 1e-9);
      prev = now;
    }
    CHECK(prev == 0.0);
  }

  TEST_CASE("hitting max_iters is flagged") {
    const auto inst = random_instance(5, 10, 51);
    Stage1Config cfg;
    cfg.max_iters = 2;
    const auto est = solve_stage1(inst.S, inst.G, cfg);
    CHECK_FALSE(est.converged);
    CHECK(est.iterations == 2);
    CHECK(min_eigenvalue(est.p_hat) >= est.a_eff - 1e-8);
  }

  TEST_CASE("geometric and balanced schedules reach the same optimum") {
    const auto inst = random_instance(5, 12, 61);
    Stage1Config g = tight(0.4, 5000);
    g.schedule = PenaltySchedule::Geometric;
    g.rho0 = 1.0;
    g.eps_primal = g.eps_dual = 1e-9;
    const auto a = solve_stage1(inst.S, inst.G, g);
    const auto b = solve_stage1(inst.S, inst.G, tight(0.4));
    CHECK(max_abs(a.p_hat - b.p_hat) <= 1e-5);
  }

  TEST_CASE("configuration validation") {
    Stage1Config c;
    c.alpha = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.a_star = 2.0;
    c.b_star = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.max_iters = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.balance_ratio = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    const auto r = Stage1Config{}.resolved(16);
    CHECK(*r.alpha == 0.25);
    CHECK(*r.rho0 == 16.0);
    CHECK(*r.rho_max == 16e6);
  }
}
