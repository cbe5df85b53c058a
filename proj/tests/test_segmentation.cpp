#include "fixtures.hpp"
#include "oracles.hpp"

#include "sps/pipeline.hpp"
#include "sps/segmentation.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <stdexcept>

using namespace sps;

namespace {

std::vector<std::size_t> sizes(const SegmentationPlan& plan) {
  std::vector<std::size_t> out;
  for (const auto& b : plan.blocks) out.push_back(b.size());
  return out;
}

}  // namespace

TEST_SUITE("segmentation") {
  TEST_CASE("spatial cells at the corners of the unit square") {
    Points X(4, 2);
    X << 0, 0, 1, 0, 0, 1, 1, 1;
    const LocationSet locs(X);
    const int dims[] = {2, 2};
    const auto plan = spatial_segments(locs, dims);
    CHECK(plan.block_count() == 4);
    for (const auto& b : plan.blocks) CHECK(b.size() == 1);
    plan.validate(4);

    const int one[] = {1, 1};
    const auto single = spatial_segments(locs, one);
    REQUIRE(single.block_count() == 1);
    CHECK(single.blocks[0] == std::vector<Index>{0, 1, 2, 3});
  }

  TEST_CASE("spatial blocks of 900 uniform points") {
    const auto locs = uniform_locations(900, 2, 0.0, 100.0, 3);
    const int dims[] = {3, 3};
    const auto plan = spatial_segments(locs, dims);
    plan.validate(900);
    CHECK(plan.block_count() == 9);
    for (auto s : sizes(plan)) {
      CHECK(s >= 60);
      CHECK(s <= 140);
    }
    // every point sits in the cell grid_cell reports for it
    const auto assign = plan.assignment(900);
    for (Index i = 0; i < 900; ++i) {
      CHECK(plan.block_of_cell[static_cast<std::size_t>(grid_cell(plan, locs.point(i)))] == assign[static_cast<std::size_t>(i)]);
    }
  }

  TEST_CASE("small cells merge into the nearest block") {
    Points X(7, 1);
    X << 0.0, 0.1, 0.2, 0.3, 5.0, 9.8, 10.0;
    const LocationSet locs(X);
    const int dims[] = {3};
    const auto raw = spatial_segments(locs, dims);
    CHECK(sizes(raw) == std::vector<std::size_t>{4, 1, 2});
    const auto merged = spatial_segments(locs, dims, 2);
    merged.validate(7);
    CHECK(merged.block_count() == 2);
    for (const auto& b : merged.blocks) CHECK(b.size() >= 2);
  }

  TEST_CASE("random segments") {
    const auto plan = random_segments(10, 3, 5);
    CHECK(sizes(plan) == std::vector<std::size_t>{3, 3, 4});
    plan.validate(10);
    CHECK(plan.scheme == SegmentScheme::Random);
    CHECK(plan.seed == 5u);

    const auto singles = random_segments(6, 6, 1);
    for (const auto& b : singles.blocks) CHECK(b.size() == 1);

    CHECK(random_segments(50, 7, 9).blocks == random_segments(50, 7, 9).blocks);
    CHECK(random_segments(50, 7, 9).blocks != random_segments(50, 7, 10).blocks);
    CHECK_THROWS_AS(random_segments(3, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(random_segments(3, 0, 1), std::invalid_argument);
  }

  TEST_CASE("partition validity is enforced") {
    SegmentationPlan plan;
    plan.blocks = {{0, 1}, {1, 2}};
    CHECK_THROWS_AS(plan.validate(3), std::invalid_argument);
    plan.blocks = {{0, 1}};
    CHECK_THROWS_AS(plan.validate(3), std::invalid_argument);
    plan.blocks = {{0, 1}, {}, {2}};
    CHECK_THROWS_AS(plan.validate(3), std::invalid_argument);
    plan.blocks = {{0, 3}};
    CHECK_THROWS_AS(plan.validate(3), std::invalid_argument);
  }

  TEST_CASE("property: random plans are disjoint covers with floor-sized blocks") {
    Rng rng(77);
    for (int t = 0; t < 200; ++t) {
      const Index n = 1 + static_cast<Index>(rng.below(300));
      const Index K = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      const auto plan = random_segments(n, K, rng.below(1000));
      CHECK_NOTHROW(plan.validate(n));
      for (Index k = 0; k + 1 < K; ++k) CHECK(static_cast<Index>(plan.blocks[static_cast<std::size_t>(k)].size()) == n / K);
    }
  }

  TEST_CASE("property: spatial plans are disjoint covers") {
    Rng rng(78);
    for (int t = 0; t < 50; ++t) {
      const Index d = 1 + static_cast<Index>(rng.below(3));
      const auto locs = uniform_locations(20 + static_cast<Index>(rng.below(200)), d, -5.0, 5.0, rng.below(1000));
      std::vector<int> dims;
      for (Index k = 0; k < d; ++k) dims.push_back(1 + static_cast<int>(rng.below(4)));
      CHECK_NOTHROW(spatial_segments(locs, dims).validate(locs.size()));
      CHECK_NOTHROW(spatial_segments(locs, dims, 2).validate(locs.size()));
    }
  }

  TEST_CASE("block specs") {
    CHECK(parse_block_spec("none").scheme == SegmentScheme::None);
    const auto ss = parse_block_spec("ss:3x3");
    CHECK(ss.scheme == SegmentScheme::Spatial);
    CHECK(ss.grid_dims == std::vector<int>{3, 3});
    const auto rs = parse_block_spec("rs:9");
    CHECK(rs.scheme == SegmentScheme::Random);
    CHECK(rs.k == 9);
    CHECK(parse_block_spec("auto").automatic);
    for (const char* bad : {"ss:", "ss:3x", "rs:0", "rs:x", "grid", "ss:0x2"}) {
      CHECK_THROWS_AS(parse_block_spec(bad), std::invalid_argument);
    }
  }

  TEST_CASE("automatic plans respect the block ceiling") {
    const auto locs = uniform_locations(2500, 2, 0.0, 1.0, 4);
    const auto plan = make_plan(parse_block_spec("auto"), locs, 1, 1000);
    plan.validate(2500);
    CHECK(plan.block_count() >= 3);
    const auto few = make_plan(parse_block_spec("auto"), uniform_locations(500, 2, 0.0, 1.0, 4), 1, 1000);
    CHECK(few.block_count() == 1);
  }

  TEST_CASE("plan CSV round trip") {
    const auto plan = random_segments(25, 4, 3);
    const auto path = (std::filesystem::temp_directory_path() / "sps_plan_roundtrip.csv").string();
    write_plan_csv(plan, path);
    const auto back = read_plan_csv(path);
    CHECK(back.assignment(25) == plan.assignment(25));
    std::filesystem::remove(path);
  }

  TEST_CASE("one block reproduces the unsegmented pipeline") {
    const auto locs = uniform_locations(60, 2, 0.0, 10.0, 5);
    const auto ds = sample_grf(locs, fixture::se(1.5, 1.0, 0.1), 5, 6);
    const auto family = fixture::se(1.0, 1.0, 0.0).family;
    const auto whole = fit_sps(ds, family, true);
    const auto seg = fit_segmented(ds, single_segment(60), family, true, Stage1Config{});
    REQUIRE(seg.joint);
    CHECK(seg.joint->theta_hat.theta_rho[0] == whole.stage2.theta_hat.theta_rho[0]);
    CHECK(seg.joint->theta_hat.theta_v == whole.stage2.theta_hat.theta_v);
    CHECK(seg.joint->theta_hat.theta_0 == whole.stage2.theta_hat.theta_0);
    CHECK(seg.stage1[0].p_hat == whole.stage1.p_hat);
  }

  TEST_CASE("concatenated inner solution matches the grid oracle (two blocks of 3)") {
    Rng rng(31);
    const auto a = uniform_locations(3, 2, 0.0, 2.0, 7);
    const auto b = uniform_locations(3, 2, 5.0, 7.0, 8);
    const auto family = fixture::se(1.0, 1.0, 0.0).family;
    const Eigen::VectorXd t = Eigen::VectorXd::Constant(1, 1.1);
    const Eigen::MatrixXd Ra = correlation_matrix(a, family, t);
    const Eigen::MatrixXd Rb = correlation_matrix(b, family, t);
    for (int k = 0; k < 3; ++k) {
      const Eigen::MatrixXd Ca = 2.0 * Ra + Eigen::MatrixXd::Identity(3, 3) + fixture::random_symmetric(3, rng, 0.4);
      const Eigen::MatrixXd Cb = 3.0 * Rb + 2.0 * Eigen::MatrixXd::Identity(3, 3) + fixture::random_symmetric(3, rng, 0.4);
      const BlockView blocks[] = {{a, Ca}, {b, Cb}};
      const auto inner = evaluate_outer(blocks, family, t, true).inner;
      const double rc = Ra.cwiseProduct(Ca).sum() + Rb.cwiseProduct(Cb).sum();
      const double rr = Ra.squaredNorm() + Rb.squaredNorm();
      const double dc = Ca.trace() + Cb.trace();
      const auto want = oracle::inner_grid(rc, rr, dc, 6.0, 10.0, 1e-3);
      CHECK(std::abs(inner.theta_v - want.first) <= 2e-3);
      CHECK(std::abs(inner.theta_0 - want.second) <= 2e-3);
    }
  }

  TEST_CASE("segmented fits: errors, flags and per-block output") {
    const auto locs = uniform_locations(40, 2, 0.0, 10.0, 9);
    const auto ds = sample_grf(locs, fixture::se(1.5, 1.0, 0.1), 3, 10);
    const auto family = fixture::se(1.0, 1.0, 0.0).family;
    SegmentationPlan tiny;
    tiny.blocks = {{0}};
    for (Index i = 1; i < 40; ++i) tiny.blocks.push_back({i});
    CHECK_THROWS_AS(fit_segmented(ds, tiny, family, true, Stage1Config{}), std::invalid_argument);

    const auto plan = random_segments(40, 4, 2);
    const auto per_block = fit_segmented(ds, plan, family, false, Stage1Config{});
    CHECK(per_block.per_block.size() == 4);
    CHECK_FALSE(per_block.joint);

    Stage1Config starved;
    starved.max_iters = 1;
    CHECK(fit_segmented(ds, plan, family, true, starved).flagged);
  }

  TEST_CASE("blocks use alpha = 1/sqrt(n_k)") {
    const auto locs = uniform_locations(30, 2, 0.0, 10.0, 11);
    const auto ds = sample_grf(locs, fixture::se(1.5, 1.0, 0.1), 4, 12);
    const auto plan = random_segments(30, 2, 3);
    const auto fit = fit_segmented(ds, plan, fixture::se(1.0, 1.0, 0.0).family, true, Stage1Config{});
    for (std::size_t k = 0; k < 2; ++k) {
      const auto part = ds.subset(plan.blocks[k]);
      Stage1Config cfg;
      cfg.alpha = 1.0 / std::sqrt(static_cast<double>(plan.blocks[k].size()));
      cfg.rho0 = static_cast<double>(plan.blocks[k].size());
      const auto direct = solve_stage1(sample_covariance(part), distance_weights(part.locs), cfg);
      CHECK(direct.p_hat == fit.stage1[k].p_hat);
    }
  }
}
