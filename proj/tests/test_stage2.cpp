#include "fixtures.hpp"
#include "oracles.hpp"

#include "sps/linalg.hpp"
#include "sps/stage2_lsq.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace sps;
using fixture::se;

namespace {

double max_abs(const Eigen::MatrixXd& A) { return A.cwiseAbs().maxCoeff(); }

LongVectors vectors_for(const Eigen::MatrixXd& C_hat, const LocationSet& locs, double theta_rho) {
  return LongVectors::build(C_hat, locs, se(theta_rho, 1.0, 0.0).family, Eigen::VectorXd::Constant(1, theta_rho));
}

// Gradient of h(v, z) = 0.5 |v r + z d - c|^2.
std::pair<double, double> inner_gradient(const InnerProducts& ip, double v, double z) {
  return {v * ip.rr + z * ip.n - ip.rc, v * ip.n + z * ip.n - ip.dc};
}

// Random inner-product tuples with rr > n (distinct locations); c is arbitrary.
InnerProducts random_products(Rng& rng) {
  InnerProducts ip;
  ip.n = static_cast<double>(2 + rng.below(50));
  ip.rr = ip.n * (1.0 + rng.uniform(1e-3, 20.0));
  const double scale = std::pow(10.0, rng.uniform(-3.0, 3.0));
  ip.rc = scale * rng.uniform(-1.0, 1.0) * std::sqrt(ip.rr);
  ip.dc = scale * rng.uniform(-1.0, 1.0) * std::sqrt(ip.n);
  return ip;
}

}  // namespace

TEST_SUITE("stage2") {
  TEST_CASE("long vector invariants") {
    const auto locs = uniform_locations(7, 2, 0.0, 5.0, 3);
    const auto lv = vectors_for(Eigen::MatrixXd::Identity(7, 7), locs, 1.2);
    CHECK(lv.d_vec.squaredNorm() == 7.0);
    CHECK(lv.d_vec.dot(lv.r_vec) == doctest::Approx(7.0).epsilon(1e-15));
    CHECK(lv.r_vec.squaredNorm() > 7.0);
    CHECK(lv.c_hat.size() == 49);
  }

  TEST_CASE("invert_precision") {
    PrecisionEstimate est;
    est.p_hat = 2.0 * Eigen::MatrixXd::Identity(3, 3);
    CHECK(max_abs(invert_precision(est) - 0.5 * Eigen::MatrixXd::Identity(3, 3)) <= 1e-15);

    Rng rng(4);
    for (int t = 0; t < 10; ++t) {
      const Eigen::MatrixXd A = fixture::random_matrix(6, 6, rng);
      est.p_hat = A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(6, 6);
      CHECK(max_abs(est.p_hat * invert_precision(est) - Eigen::MatrixXd::Identity(6, 6)) <= 1e-8);
    }

    const auto inst = fixture::random_instance(4, 8, 9);
    const auto solved = solve_stage1(inst.S, inst.G, Stage1Config{});
    const Eigen::MatrixXd C = invert_precision(solved);
    CHECK(max_abs(C - oracle::inverse_by_solve(solved.p_hat)) <= 1e-8);
    CHECK(min_eigenvalue(C) >= 1.0 / solved.b_eff - 1e-8);
    CHECK(C == C.transpose());

    est.p_hat = -Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(invert_precision(est), std::runtime_error);
  }

  TEST_CASE("inner solution directional cases") {
    const auto locs = uniform_locations(3, 2, 0.0, 3.0, 5);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd R = correlation_matrix(locs, se(1.0, 1.0, 0.0).family, Eigen::VectorXd::Constant(1, 1.0));

    auto nugget = inner_solution(vectors_for(I, locs, 1.0));
    CHECK(nugget.theta_v == 0.0);
    CHECK(nugget.theta_0 == 1.0);
    CHECK(nugget.active_case == InnerCase::NuggetOnly);

    auto variance = inner_solution(vectors_for(R, locs, 1.0));
    CHECK(variance.theta_v == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(variance.theta_0 == 0.0);
    CHECK(variance.active_case == InnerCase::VarianceOnly);

    const auto lv = vectors_for(2.0 * R + 3.0 * I, locs, 1.0);
    auto interior = inner_solution(lv);
    CHECK(interior.active_case == InnerCase::Interior);
    CHECK(interior.theta_v == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(interior.theta_0 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK((interior.theta_v * lv.r_vec + interior.theta_0 * lv.d_vec - lv.c_hat).norm() <= 1e-12);
  }

  TEST_CASE("inner solution matches the brute-force grid (n=3)") {
    Rng rng(21);
    const auto locs = uniform_locations(3, 2, 0.0, 3.0, 6);
    for (int t = 0; t < 3; ++t) {
      const Eigen::MatrixXd R = correlation_matrix(locs, se(1.0, 1.0, 0.0).family, Eigen::VectorXd::Constant(1, 1.3));
      const Eigen::MatrixXd noise = fixture::random_symmetric(3, rng, 0.5);
      const Eigen::MatrixXd C = rng.uniform(1.0, 5.0) * R + rng.uniform(0.5, 4.0) * Eigen::MatrixXd::Identity(3, 3) + noise;
      const auto ip = inner_products(vectors_for(C, locs, 1.3));
      const auto got = inner_solution(ip);
      const auto want = oracle::inner_grid(ip.rc, ip.rr, ip.dc, ip.n, 10.0, 1e-3);
      CHECK(std::abs(got.theta_v - want.first) <= 2e-3);
      CHECK(std::abs(got.theta_0 - want.second) <= 2e-3);
    }
  }

  TEST_CASE("case partition is exhaustive and KKT holds") {
    Rng rng(22);
    int counts[3] = {0, 0, 0};
    for (int t = 0; t < 10000; ++t) {
      const auto ip = random_products(rng);
      const auto s = inner_solution(ip);
      ++counts[static_cast<int>(s.active_case)];
      REQUIRE(s.theta_v >= 0.0);
      REQUIRE(s.theta_0 >= 0.0);
      const auto [gv, gz] = inner_gradient(ip, s.theta_v, s.theta_0);
      const double tol = 1e-8 * std::max({1.0, std::abs(ip.rc), std::abs(ip.dc)});
      CHECK(gv >= -tol);
      CHECK(gz >= -tol);
      if (s.theta_v > 0.0) CHECK(std::abs(gv) <= tol);
      if (s.theta_0 > 0.0) CHECK(std::abs(gz) <= tol);
    }
    CHECK(counts[0] > 0);
    CHECK(counts[1] > 0);
    CHECK(counts[2] > 0);
  }

  TEST_CASE("boundary ties resolve to the adjacent closed form") {
    InnerProducts ip{0.0, 20.0, 0.0, 5.0};
    ip.dc = 4.0;
    ip.rc = 4.0;  // rc == dc
    auto s = inner_solution(ip);
    CHECK(s.active_case == InnerCase::NuggetOnly);
    CHECK(s.theta_0 == doctest::Approx(0.8));
    ip.rc = ip.dc * ip.rr / ip.n;  // rc == dc |r|^2 / n
    s = inner_solution(ip);
    CHECK(s.active_case == InnerCase::VarianceOnly);
    CHECK(s.theta_v == doctest::Approx(0.8));
    CHECK(s.theta_0 == 0.0);
  }

  TEST_CASE("inner optimum dominates a 100x100 grid") {
    Rng rng(23);
    for (int t = 0; t < 200; ++t) {
      const auto ip = random_products(rng);
      const auto s = inner_solution(ip);
      const double best = oracle::inner_objective(s.theta_v, s.theta_0, ip.rc, ip.rr, ip.dc, ip.n);
      const double hi = 2.0 * std::max(1.0, std::abs(ip.dc) / ip.n);
      double grid_min = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 100; ++i) {
        for (int j = 0; j < 100; ++j) {
          grid_min = std::min(grid_min, oracle::inner_objective(hi * i / 99.0, hi * j / 99.0, ip.rc, ip.rr, ip.dc, ip.n));
        }
      }
      CHECK(best <= grid_min + 1e-9 * std::max(1.0, std::abs(grid_min)));
    }
  }

  TEST_CASE("inner solution is scale equivariant") {
    Rng rng(24);
    for (int t = 0; t < 200; ++t) {
      auto ip = random_products(rng);
      const auto s = inner_solution(ip);
      const double kappa = rng.uniform(0.01, 100.0);
      ip.rc *= kappa;
      ip.dc *= kappa;
      const auto k = inner_solution(ip);
      CHECK(std::abs(k.theta_v - kappa * s.theta_v) <= 1e-10 * std::max(1.0, kappa * s.theta_v));
      CHECK(std::abs(k.theta_0 - kappa * s.theta_0) <= 1e-10 * std::max(1.0, kappa * s.theta_0));
    }
  }

  TEST_CASE("no-nugget inner solution") {
    const auto locs = uniform_locations(4, 2, 0.0, 3.0, 7);
    const Eigen::MatrixXd R = correlation_matrix(locs, se(1.0, 1.0, 0.0).family, Eigen::VectorXd::Constant(1, 0.8));
    CHECK(inner_solution_no_nugget(vectors_for(5.0 * R, locs, 0.8)) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(inner_solution_no_nugget(vectors_for(-R, locs, 0.8)) == 0.0);

    Rng rng(25);
    for (int t = 0; t < 5; ++t) {
      const Eigen::MatrixXd C = rng.uniform(0.5, 3.0) * R + fixture::random_symmetric(4, rng, 0.3);
      const auto ip = inner_products(vectors_for(C, locs, 0.8));
      const double want = oracle::inner_grid_no_nugget(ip.rc, ip.rr, 5.0, 1e-7);
      CHECK(std::abs(inner_solution_no_nugget(ip) - want) <= 1e-6);
    }
  }

  TEST_CASE("outer objective on noiseless SE") {
    const auto locs = uniform_locations(40, 2, 0.0, 30.0, 8);
    const auto truth = se(4.0, 8.0, 4.0);
    const Eigen::MatrixXd C = covariance_matrix(locs, truth);
    auto f = [&](double t) { return outer_objective(Eigen::VectorXd::Constant(1, t), C, locs, truth.family, true); };
    CHECK(std::abs(f(4.0)) <= 1e-12 * C.squaredNorm());
    CHECK(f(2.0) > 0.0);
    CHECK(f(8.0) > 0.0);
    CHECK(outer_objective(Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Zero(40, 40), locs, truth.family, true) ==
          0.0);

    // Independent evaluation through the enumerated NNLS.
    for (double t : {1.0, 3.0, 6.0, 12.0}) {
      const Eigen::MatrixXd R = correlation_matrix(locs, truth.family, Eigen::VectorXd::Constant(1, t));
      CHECK(f(t) == doctest::Approx(oracle::nnls2(C, R).value).epsilon(1e-9));
      const double no_nugget = outer_objective(Eigen::VectorXd::Constant(1, t), C, locs, truth.family, false);
      CHECK(no_nugget == doctest::Approx(oracle::nnls2(C, R, false).value).epsilon(1e-9));
    }
  }

  TEST_CASE("noiseless recovery for the isotropic families") {
    const auto locs = uniform_locations(50, 2, 0.0, 30.0, 10);
    for (auto tag : {KernelTag::SquaredExponential, KernelTag::Matern32, KernelTag::Exponential}) {
      const auto truth = fixture::iso(tag, 4.0, 8.0, 4.0);
      const auto r = fit_stage2(covariance_matrix(locs, truth), locs, truth.family, true);
      CHECK(std::abs(r.theta_hat.theta_rho[0] - 4.0) <= 1e-3);
      CHECK(std::abs(r.theta_hat.theta_v - 8.0) <= 1e-3);
      CHECK(std::abs(r.theta_hat.theta_0 - 4.0) <= 1e-3);
      CHECK(r.objective < 1e-8);
      CHECK(r.curvature_ok);
      CHECK_FALSE(r.flagged);
      CHECK(r.active_case == InnerCase::Interior);
      CHECK(r.objective == doctest::Approx(outer_objective(r.theta_hat.theta_rho, covariance_matrix(locs, truth), locs,
                                                           truth.family, true))
                               .epsilon(1e-10));
    }
  }

  TEST_CASE("noiseless recovery without a nugget") {
    const auto locs = uniform_locations(40, 2, 0.0, 20.0, 12);
    const auto truth = fixture::iso(KernelTag::Matern32, 3.0, 2.0, 0.0);
    const auto r = fit_stage2(covariance_matrix(locs, truth), locs, truth.family, false);
    CHECK(std::abs(r.theta_hat.theta_rho[0] - 3.0) <= 1e-3);
    CHECK(std::abs(r.theta_hat.theta_v - 2.0) <= 1e-3);
    CHECK(r.theta_hat.theta_0 == 0.0);
  }

  TEST_CASE("anisotropic q=2 matches a dense grid oracle") {
    const auto locs = uniform_locations(30, 2, 0.0, 5.0, 14);
    const CovarianceParams truth{KernelFamily::anisotropic(2), Eigen::Vector2d(0.4, 1.3), 2.0, 0.5};
    const Eigen::MatrixXd C = covariance_matrix(locs, truth);
    const auto r = fit_stage2(C, locs, truth.family, true);
    CHECK(r.objective < 1e-8);
    CHECK(r.curvature_ok);

    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector2d arg;
    const Eigen::MatrixXd X = locs.coords();
    for (int i = 1; i <= 200; ++i) {
      for (int j = 1; j <= 200; ++j) {
        const Eigen::Vector2d m(0.01 * i, 0.01 * j);
        const double v = oracle::nnls2(C, oracle::aniso_correlation(X, m)).value;
        if (v < best) {
          best = v;
          arg = m;
        }
      }
    }
    CHECK(std::abs(r.theta_hat.theta_rho[0] - arg[0]) <= 2e-2);
    CHECK(std::abs(r.theta_hat.theta_rho[1] - arg[1]) <= 2e-2);
    CHECK(std::abs(r.theta_hat.theta_rho[0] - 0.4) <= 1e-3);
    CHECK(std::abs(r.theta_hat.theta_rho[1] - 1.3) <= 1e-3);
  }

  TEST_CASE("curvature at the noiseless minimizer") {
    const auto locs = uniform_locations(30, 2, 0.0, 20.0, 15);
    const std::vector<CovarianceParams> truths = {
        se(4.0, 8.0, 4.0),
        fixture::iso(KernelTag::Matern32, 3.0, 1.0, 0.5),
        fixture::iso(KernelTag::Exponential, 5.0, 2.0, 0.1),
        {KernelFamily::anisotropic(2), Eigen::Vector2d(0.05, 0.2), 1.0, 0.2},
    };
    for (const auto& t : truths) {
      const Eigen::MatrixXd C = covariance_matrix(locs, t);
      const BlockView block{locs, C};
      const Eigen::MatrixXd H = outer_hessian(std::span<const BlockView>(&block, 1), t.family, t.theta_rho, true);
      CHECK(H.allFinite());
      CHECK(min_eigenvalue(symmetrized(H)) > 0.0);
    }
  }

  TEST_CASE("block sum equals the concatenated fit") {
    const auto a = uniform_locations(20, 2, 0.0, 10.0, 16);
    const auto b = uniform_locations(25, 2, 20.0, 30.0, 17);
    const auto truth = se(2.0, 3.0, 1.0);
    const Eigen::MatrixXd Ca = covariance_matrix(a, truth);
    const Eigen::MatrixXd Cb = covariance_matrix(b, truth);
    const BlockView blocks[] = {{a, Ca}, {b, Cb}};
    const auto r = fit_stage2_blocks(blocks, truth.family, true);
    CHECK(std::abs(r.theta_hat.theta_rho[0] - 2.0) <= 1e-3);
    CHECK(std::abs(r.theta_hat.theta_v - 3.0) <= 1e-3);
    CHECK(std::abs(r.theta_hat.theta_0 - 1.0) <= 1e-3);
    const Eigen::VectorXd t = Eigen::VectorXd::Constant(1, 2.7);
    const double joint = evaluate_outer(blocks, truth.family, t, true).objective;
    const double fa = outer_objective(t, Ca, a, truth.family, true);
    CHECK(joint >= fa);  // fa uses its own optimal (v, z)
  }
}
