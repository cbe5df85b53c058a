#include "sps/segmentation.hpp"

#include "sps/parallel.hpp"
#include "sps/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sps {

namespace {

Eigen::RowVectorXd centroid(const LocationSet& locs, const std::vector<Index>& block) {
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(locs.dim());
  for (Index i : block) c += locs.point(i);
  return c / static_cast<double>(block.size());
}

}  // namespace

void SegmentationPlan::validate(Index n) const {
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const auto& block : blocks) {
    if (block.empty()) throw std::invalid_argument("SegmentationPlan: empty block");
    for (Index i : block) {
      if (i < 0 || i >= n) throw std::invalid_argument("SegmentationPlan: index out of range");
      if (seen[static_cast<std::size_t>(i)]) throw std::invalid_argument("SegmentationPlan: blocks overlap");
      seen[static_cast<std::size_t>(i)] = 1;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw std::invalid_argument("SegmentationPlan: blocks do not cover every index");
  }
}

std::vector<Index> SegmentationPlan::assignment(Index n) const {
  std::vector<Index> out(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    for (Index i : blocks[k]) out[static_cast<std::size_t>(i)] = static_cast<Index>(k);
  }
  return out;
}

Index grid_cell(const SegmentationPlan& plan, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  Index cell = 0;
  Index stride = 1;
  for (std::size_t k = 0; k < plan.grid_dims.size(); ++k) {
    const auto axis = static_cast<Index>(k);
    const int g = plan.grid_dims[k];
    const double width = plan.box_hi[axis] - plan.box_lo[axis];
    Index idx = 0;
    if (width > 0.0) {
      idx = static_cast<Index>(std::floor((x[axis] - plan.box_lo[axis]) / width * g));
      idx = std::clamp<Index>(idx, 0, g - 1);
    }
    cell += idx * stride;
    stride *= g;
  }
  return cell;
}

SegmentationPlan spatial_segments(const LocationSet& locs, std::span<const int> grid_dims, Index min_block_size) {
  if (static_cast<Index>(grid_dims.size()) != locs.dim()) {
    throw std::invalid_argument("spatial_segments: need one cell count per axis");
  }
  Index cells = 1;
  for (int g : grid_dims) {
    if (g < 1) throw std::invalid_argument("spatial_segments: cell counts must be >= 1");
    cells *= g;
  }
  SegmentationPlan plan;
  plan.scheme = SegmentScheme::Spatial;
  plan.grid_dims.assign(grid_dims.begin(), grid_dims.end());
  plan.box_lo = locs.coords().colwise().minCoeff();
  plan.box_hi = locs.coords().colwise().maxCoeff();

  std::vector<std::vector<Index>> by_cell(static_cast<std::size_t>(cells));
  for (Index i = 0; i < locs.size(); ++i) by_cell[static_cast<std::size_t>(grid_cell(plan, locs.point(i)))].push_back(i);

  // Each block remembers the cells it absorbed.
  std::vector<std::vector<Index>> cells_of_block;
  for (Index c = 0; c < cells; ++c) {
    if (!by_cell[static_cast<std::size_t>(c)].empty()) {
      plan.blocks.push_back(std::move(by_cell[static_cast<std::size_t>(c)]));
      cells_of_block.push_back({c});
    }
  }

  if (min_block_size > locs.size()) throw std::invalid_argument("spatial_segments: min_block_size exceeds n");
  while (plan.blocks.size() > 1) {
    std::size_t small = plan.blocks.size();
    for (std::size_t k = 0; k < plan.blocks.size(); ++k) {
      if (static_cast<Index>(plan.blocks[k].size()) < min_block_size &&
          (small == plan.blocks.size() || plan.blocks[k].size() < plan.blocks[small].size())) {
        small = k;
      }
    }
    if (small == plan.blocks.size()) break;
    const Eigen::RowVectorXd c = centroid(locs, plan.blocks[small]);
    std::size_t target = small;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < plan.blocks.size(); ++k) {
      if (k == small) continue;
      const double dist = (centroid(locs, plan.blocks[k]) - c).norm();
      if (dist < best) {
        best = dist;
        target = k;
      }
    }
    auto& dst = plan.blocks[target];
    dst.insert(dst.end(), plan.blocks[small].begin(), plan.blocks[small].end());
    std::sort(dst.begin(), dst.end());
    cells_of_block[target].insert(cells_of_block[target].end(), cells_of_block[small].begin(),
                                  cells_of_block[small].end());
    plan.blocks.erase(plan.blocks.begin() + static_cast<std::ptrdiff_t>(small));
    cells_of_block.erase(cells_of_block.begin() + static_cast<std::ptrdiff_t>(small));
  }

  plan.block_of_cell.assign(static_cast<std::size_t>(cells), -1);
  for (std::size_t k = 0; k < cells_of_block.size(); ++k) {
    for (Index c : cells_of_block[k]) plan.block_of_cell[static_cast<std::size_t>(c)] = static_cast<Index>(k);
  }
  return plan;
}

SegmentationPlan random_segments(Index n, Index K, std::uint64_t seed) {
  if (K < 1 || K > n) throw std::invalid_argument("random_segments: need 1 <= K <= n");
  Rng rng(seed);
  const std::vector<std::int64_t> perm = rng.permutation(n);
  const Index base = n / K;
  SegmentationPlan plan;
  plan.scheme = SegmentScheme::Random;
  plan.seed = seed;
  std::size_t pos = 0;
  for (Index k = 0; k < K; ++k) {
    const Index size = k + 1 < K ? base : n - (K - 1) * base;
    std::vector<Index> block;
    for (Index t = 0; t < size; ++t) block.push_back(static_cast<Index>(perm[pos++]));
    std::sort(block.begin(), block.end());  // canonical order, same as a reloaded plan
    plan.blocks.push_back(std::move(block));
  }
  return plan;
}

SegmentationPlan single_segment(Index n) {
  SegmentationPlan plan;
  plan.scheme = SegmentScheme::None;
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  plan.blocks.push_back(std::move(all));
  return plan;
}

BlockSpec parse_block_spec(const std::string& text) {
  BlockSpec spec;
  if (text == "none" || text.empty()) return spec;
  if (text == "auto") {
    spec.scheme = SegmentScheme::Spatial;
    spec.automatic = true;
    return spec;
  }
  auto bad = [&] { return std::invalid_argument("invalid block spec '" + text + "' (none|auto|ss:AxB|rs:K)"); };
  if (text.rfind("ss:", 0) == 0) {
    spec.scheme = SegmentScheme::Spatial;
    if (text.back() == 'x') throw bad();  // getline drops the empty last field
    std::stringstream ss(text.substr(3));
    std::string part;
    while (std::getline(ss, part, 'x')) {
      std::size_t used = 0;
      int g = 0;
      try {
        g = std::stoi(part, &used);
      } catch (const std::exception&) {
        throw bad();
      }
      if (used != part.size() || g < 1) throw bad();
      spec.grid_dims.push_back(g);
    }
    if (spec.grid_dims.empty()) throw bad();
    return spec;
  }
  if (text.rfind("rs:", 0) == 0) {
    spec.scheme = SegmentScheme::Random;
    std::size_t used = 0;
    try {
      spec.k = std::stoll(text.substr(3), &used);
    } catch (const std::exception&) {
      throw bad();
    }
    if (used != text.size() - 3 || spec.k < 1) throw bad();
    return spec;
  }
  throw bad();
}

SegmentationPlan make_plan(const BlockSpec& spec, const LocationSet& locs, std::uint64_t seed, Index n_block_max) {
  const Index n = locs.size();
  SegmentationPlan plan;
  switch (spec.scheme) {
    case SegmentScheme::None:
      plan = single_segment(n);
      break;
    case SegmentScheme::Random:
      plan = random_segments(n, spec.k, seed);
      break;
    case SegmentScheme::Spatial: {
      std::vector<int> dims = spec.grid_dims;
      if (spec.automatic) {
        if (n <= n_block_max) {
          plan = single_segment(n);
          break;
        }
        const double k = std::ceil(static_cast<double>(n) / static_cast<double>(n_block_max));
        const int per_axis = static_cast<int>(std::ceil(std::pow(k, 1.0 / static_cast<double>(locs.dim())) - 1e-12));
        dims.assign(static_cast<std::size_t>(locs.dim()), per_axis);
      }
      if (static_cast<Index>(dims.size()) != locs.dim()) {
        throw std::invalid_argument("make_plan: spatial grid needs one count per dimension");
      }
      plan = spatial_segments(locs, dims, 2);
      break;
    }
  }
  plan.n_block_max = n_block_max;
  return plan;
}

void write_plan_csv(const SegmentationPlan& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  Index n = 0;
  for (const auto& b : plan.blocks) n += static_cast<Index>(b.size());
  const std::vector<Index> block = plan.assignment(n);
  out << "index,block\n";
  for (Index i = 0; i < n; ++i) out << i << ',' << block[static_cast<std::size_t>(i)] << '\n';
}

SegmentationPlan read_plan_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,block", 0) != 0) {
    throw std::runtime_error(path + ": expected header 'index,block'");
  }
  std::map<Index, std::vector<Index>> blocks;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error(path + ": malformed row '" + line + "'");
    blocks[std::stoll(line.substr(comma + 1))].push_back(std::stoll(line.substr(0, comma)));
  }
  SegmentationPlan plan;
  Index n = 0;
  for (auto& [id, members] : blocks) {
    if (members.empty()) continue;
    std::sort(members.begin(), members.end());
    n += static_cast<Index>(members.size());
    plan.blocks.push_back(std::move(members));
  }
  plan.validate(n);
  return plan;
}

SegmentedFit fit_segmented(const SpatialDataset& ds, const SegmentationPlan& plan, const KernelFamily& family,
                           bool stationary, const Stage1Config& stage1_template, bool nugget_enabled,
                           const Stage2Options& stage2) {
  plan.validate(ds.size());
  for (const auto& block : plan.blocks) {
    if (block.size() < 2) throw std::invalid_argument("fit_segmented: every block needs at least two points");
  }
  const std::size_t K = plan.blocks.size();
  std::vector<SpatialDataset> parts;
  parts.reserve(K);
  for (const auto& block : plan.blocks) parts.push_back(ds.subset(block));

  SegmentedFit fit;
  fit.stage1.resize(K);
  std::vector<Eigen::MatrixXd> c_hats(K);
  parallel_for(K, [&](std::size_t k) {
    const Eigen::MatrixXd S = sample_covariance(parts[k]);
    const WeightMatrix G = distance_weights(parts[k].locs);
    fit.stage1[k] = solve_stage1(S, G, stage1_template);
    c_hats[k] = invert_precision(fit.stage1[k]);
  });
  for (const auto& est : fit.stage1) fit.flagged = fit.flagged || !est.converged;

  std::vector<BlockView> views;
  views.reserve(K);
  for (std::size_t k = 0; k < K; ++k) views.push_back(BlockView{parts[k].locs, c_hats[k]});

  if (stationary) {
    fit.joint = fit_stage2_blocks(views, family, nugget_enabled, stage2);
    fit.flagged = fit.flagged || fit.joint->flagged;
  } else {
    fit.per_block.resize(K);
    parallel_for(K, [&](std::size_t k) {
      fit.per_block[k] = fit_stage2_blocks(std::span<const BlockView>(&views[k], 1), family, nugget_enabled, stage2);
    });
    for (const auto& r : fit.per_block) fit.flagged = fit.flagged || r.flagged;
  }
  return fit;
}

}  // namespace sps
