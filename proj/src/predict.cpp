#include "sps/predict.hpp"

#include "sps/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sps {

namespace {

constexpr Index kQueryChunk = 256;

Points select_rows(const Points& X, const std::vector<Index>& rows) {
  Points out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = X.row(rows[k]);
  return out;
}

void scatter(PredictiveDistribution& out, const PredictiveDistribution& part, const std::vector<Index>& rows) {
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.mean[rows[k]] = part.mean[static_cast<Index>(k)];
    out.variance[rows[k]] = part.variance[static_cast<Index>(k)];
  }
}

// Cell of x on a grid over [lo, hi]; per-axis indices returned through `idx`.
void cell_indices(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::RowVectorXd& lo,
                  const Eigen::RowVectorXd& hi, const std::vector<int>& dims, std::vector<Index>& idx) {
  idx.resize(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const auto a = static_cast<Index>(k);
    const double width = hi[a] - lo[a];
    Index i = 0;
    if (width > 0.0) i = static_cast<Index>(std::floor((x[a] - lo[a]) / width * dims[k]));
    idx[k] = std::clamp<Index>(i, 0, dims[k] - 1);
  }
}

Index flatten(const std::vector<Index>& idx, const std::vector<int>& dims) {
  Index cell = 0;
  Index stride = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    cell += idx[k] * stride;
    stride *= dims[k];
  }
  return cell;
}

}  // namespace

KrigingSystem::KrigingSystem(const SpatialDataset& ds, const CovarianceParams& params)
    : locs_(ds.locs), params_(params) {
  params_.validate();
  llt_.compute(covariance_matrix(locs_, params_));
  if (llt_.info() != Eigen::Success) {
    throw std::runtime_error("KrigingSystem: covariance matrix is not positive definite");
  }
  weights_ = llt_.solve(ds.mean_observation());
}

PredictiveDistribution KrigingSystem::predict(const Points& queries) const {
  if (queries.cols() != locs_.dim()) throw std::invalid_argument("predict: query dimension mismatch");
  const Index m = queries.rows();
  PredictiveDistribution out;
  out.mean.resize(m);
  out.variance.resize(m);
  const std::size_t chunks = static_cast<std::size_t>((m + kQueryChunk - 1) / kQueryChunk);
  parallel_for(chunks, [&](std::size_t c) {
    const Index start = static_cast<Index>(c) * kQueryChunk;
    const Index len = std::min(kQueryChunk, m - start);
    const Points block = queries.middleRows(start, len);
    const Eigen::MatrixXd K0 = cross_covariance(block, locs_, params_);  // len x n
    out.mean.segment(start, len) = K0 * weights_;
    const Eigen::MatrixXd V = llt_.matrixL().solve(K0.transpose());
    for (Index k = 0; k < len; ++k) {
      const double var = params_.theta_v - V.col(k).squaredNorm();
      out.variance[start + k] = std::clamp(var, 0.0, params_.theta_v);
    }
  });
  return out;
}

PredictiveDistribution predictive_distribution(const SpatialDataset& ds, const CovarianceParams& params,
                                               const Points& queries) {
  return KrigingSystem(ds, params).predict(queries);
}

PredictiveDistribution predict_stationary(const SpatialDataset& ds, const CovarianceParams& params,
                                          const Points& queries, const StationaryPredictionOptions& opts) {
  const Index n = ds.size();
  const Index d = ds.locs.dim();
  if (n <= opts.full_system_max) return predictive_distribution(ds, params, queries);
  if (queries.cols() != d) throw std::invalid_argument("predict_stationary: query dimension mismatch");

  std::vector<int> dims = opts.grid_dims;
  if (dims.empty()) {
    const double per_cell = static_cast<double>(opts.full_system_max) / std::pow(3.0, static_cast<double>(d));
    const double cells = std::max(1.0, static_cast<double>(n) / per_cell);
    dims.assign(static_cast<std::size_t>(d),
                static_cast<int>(std::ceil(std::pow(cells, 1.0 / static_cast<double>(d)) - 1e-12)));
  }
  if (static_cast<Index>(dims.size()) != d) throw std::invalid_argument("predict_stationary: grid rank mismatch");
  const Eigen::RowVectorXd lo = ds.locs.coords().colwise().minCoeff();
  const Eigen::RowVectorXd hi = ds.locs.coords().colwise().maxCoeff();
  Index cells = 1;
  for (int g : dims) cells *= g;

  std::vector<std::vector<Index>> train_in(static_cast<std::size_t>(cells));
  std::vector<std::vector<Index>> query_in(static_cast<std::size_t>(cells));
  std::vector<Index> idx;
  for (Index i = 0; i < n; ++i) {
    cell_indices(ds.locs.point(i), lo, hi, dims, idx);
    train_in[static_cast<std::size_t>(flatten(idx, dims))].push_back(i);
  }
  for (Index k = 0; k < queries.rows(); ++k) {
    cell_indices(queries.row(k), lo, hi, dims, idx);
    query_in[static_cast<std::size_t>(flatten(idx, dims))].push_back(k);
  }

  PredictiveDistribution out;
  out.mean.resize(queries.rows());
  out.variance.resize(queries.rows());
  out.method = "local-neighbourhood";
  for (Index c = 0; c < cells; ++c) {
    const auto& qrows = query_in[static_cast<std::size_t>(c)];
    if (qrows.empty()) continue;
    // Decode the cell and collect its 3^d neighbourhood.
    std::vector<Index> centre(dims.size());
    Index rest = c;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      centre[k] = rest % dims[k];
      rest /= dims[k];
    }
    std::vector<Index> members;
    const auto total = static_cast<Index>(std::pow(3.0, static_cast<double>(d)));
    for (Index code = 0; code < total; ++code) {
      std::vector<Index> nb(dims.size());
      Index r = code;
      bool inside = true;
      for (std::size_t k = 0; k < dims.size(); ++k) {
        nb[k] = centre[k] + (r % 3) - 1;
        r /= 3;
        inside = inside && nb[k] >= 0 && nb[k] < dims[k];
      }
      if (!inside) continue;
      const auto& cell_members = train_in[static_cast<std::size_t>(flatten(nb, dims))];
      members.insert(members.end(), cell_members.begin(), cell_members.end());
    }
    std::sort(members.begin(), members.end());
    const PredictiveDistribution part = predictive_distribution(ds.subset(members), params, select_rows(queries, qrows));
    scatter(out, part, qrows);
  }
  return out;
}

PredictiveDistribution predict_nonstationary(const SpatialDataset& ds, const SegmentationPlan& plan,
                                             std::span<const CovarianceParams> block_params, const Points& queries) {
  plan.validate(ds.size());
  if (static_cast<Index>(block_params.size()) != plan.block_count()) {
    throw std::invalid_argument("predict_nonstationary: need one parameter set per block");
  }
  std::vector<Eigen::RowVectorXd> centroids;
  for (const auto& block : plan.blocks) {
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(ds.locs.dim());
    for (Index i : block) c += ds.locs.point(i);
    centroids.push_back(c / static_cast<double>(block.size()));
  }
  std::vector<std::vector<Index>> query_in(plan.blocks.size());
  for (Index k = 0; k < queries.rows(); ++k) {
    Index block = -1;
    if (plan.scheme == SegmentScheme::Spatial && !plan.block_of_cell.empty()) {
      block = plan.block_of_cell[static_cast<std::size_t>(grid_cell(plan, queries.row(k)))];
    }
    if (block < 0) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < centroids.size(); ++b) {
        const double dist = (queries.row(k) - centroids[b]).norm();
        if (dist < best) {
          best = dist;
          block = static_cast<Index>(b);
        }
      }
    }
    query_in[static_cast<std::size_t>(block)].push_back(k);
  }
  PredictiveDistribution out;
  out.mean.resize(queries.rows());
  out.variance.resize(queries.rows());
  out.method = "per-block";
  for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
    if (query_in[b].empty()) continue;
    const PredictiveDistribution part =
        predictive_distribution(ds.subset(plan.blocks[b]), block_params[b], select_rows(queries, query_in[b]));
    scatter(out, part, query_in[b]);
  }
  return out;
}

double mspe(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("mspe: length mismatch");
  if (y_true.size() == 0) throw std::invalid_argument("mspe: need at least one value");
  return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

}  // namespace sps
