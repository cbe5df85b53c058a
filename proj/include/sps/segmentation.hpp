#ifndef SPS_SEGMENTATION_HPP
#define SPS_SEGMENTATION_HPP

#include "sps/sampler.hpp"
#include "sps/stage1_admm.hpp"
#include "sps/stage2_lsq.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sps {

enum class SegmentScheme { Spatial, Random, None };

struct SegmentationPlan {
  SegmentScheme scheme = SegmentScheme::None;
  std::vector<std::vector<Index>> blocks;
  /// Spatial only: per-axis cell counts and the bounding box the cells tile.
  std::vector<int> grid_dims;
  Eigen::RowVectorXd box_lo;
  Eigen::RowVectorXd box_hi;
  /// Spatial only: block id of each grid cell (-1 for empty cells).
  std::vector<Index> block_of_cell;
  /// Random only.
  std::optional<std::uint64_t> seed;
  Index n_block_max = 1000;

  [[nodiscard]] Index block_count() const { return static_cast<Index>(blocks.size()); }
  /// Throws std::invalid_argument unless the blocks are a disjoint, nonempty cover of {0..n-1}.
  void validate(Index n) const;
  /// block id of every index
  [[nodiscard]] std::vector<Index> assignment(Index n) const;
};

/// Axis-aligned cells over the bounding box of the locations. Cells are half
/// open on their upper faces except the last cell per axis. Empty cells are
/// dropped; cells with fewer than min_block_size points are merged into the
/// nonempty block with the nearest centroid.
SegmentationPlan spatial_segments(const LocationSet& locs, std::span<const int> grid_dims, Index min_block_size = 1);

/// Uniformly random partition: K-1 blocks of floor(n/K) and a final remainder block.
SegmentationPlan random_segments(Index n, Index K, std::uint64_t seed);

/// Single block holding every index in order.
SegmentationPlan single_segment(Index n);

/// Grid cell (flattened, axis 0 fastest) containing x under the plan's grid.
Index grid_cell(const SegmentationPlan& plan, const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Parses "none", "ss:3x3", "rs:9" or "auto". Auto picks K = ceil(n / n_B)
/// rounded up to a d-dimensional grid.
struct BlockSpec {
  SegmentScheme scheme = SegmentScheme::None;
  std::vector<int> grid_dims;
  Index k = 1;
  bool automatic = false;
};
BlockSpec parse_block_spec(const std::string& text);
SegmentationPlan make_plan(const BlockSpec& spec, const LocationSet& locs, std::uint64_t seed,
                           Index n_block_max = 1000);

/// Plan CSV: header `index,block`.
void write_plan_csv(const SegmentationPlan& plan, const std::string& path);
SegmentationPlan read_plan_csv(const std::string& path);

struct SegmentedFit {
  std::vector<PrecisionEstimate> stage1;
  /// Stationary fit (one theta for all blocks) ...
  std::optional<Stage2Result> joint;
  /// ... or one fit per block, in block order.
  std::vector<Stage2Result> per_block;
  /// Some block's Stage I hit max_iters or a Stage II search was flagged.
  bool flagged = false;
};

/// Per-block Stage I (unset alpha / rho0 in the template resolve to
/// 1/sqrt(n_k) and n_k), then either the joint least squares over all blocks or one
/// independent Stage II fit per block.
SegmentedFit fit_segmented(const SpatialDataset& ds, const SegmentationPlan& plan, const KernelFamily& family,
                           bool stationary, const Stage1Config& stage1_template, bool nugget_enabled = true,
                           const Stage2Options& stage2 = {});

}  // namespace sps

#endif  // SPS_SEGMENTATION_HPP
