#ifndef SPS_HARNESS_HPP
#define SPS_HARNESS_HPP

#include "sps/csv_io.hpp"
#include "sps/predict.hpp"
#include "sps/segmentation.hpp"
#include "sps/stage1_admm.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sps {

enum class MspeConvention { TrueTheta, HeldOut };

/// Experiment description, read from a JSON document. Unknown keys are rejected.
struct RunConfig {
  std::string kernel = "se";
  std::vector<double> theta_rho{1.0};
  double theta_v = 1.0;
  double theta_0 = 0.0;
  Index n = 100;
  Index dim = 2;
  double domain_lo = 0.0;
  double domain_hi = 10.0;
  Index N = 1;
  Index R = 1;
  std::uint64_t seed = 0;
  std::string method = "sps";
  int mle_starts = 10;
  std::string blocks = "none";
  Index n_block_max = 1000;
  bool nugget = true;
  bool stationary = true;
  std::optional<double> alpha;
  double eps_primal = 1e-5;
  double eps_dual = 1e-5;
  int max_iters = 500;
  double test_fraction = 0.1;
  MspeConvention mspe_convention = MspeConvention::TrueTheta;
  /// Load this dataset CSV instead of simulating; forces held-out MSPE.
  std::optional<std::string> input;
  /// Diagnostics: location counts, thresholds and a theta_rho grid.
  std::vector<Index> n_grid{10, 100};
  std::vector<double> eps_grid{0.1, 0.01, 0.001};
  std::vector<double> theta_grid;
  /// ObjectiveCurve on the exact covariance instead of a Stage I estimate.
  bool noiseless = false;
  unsigned threads = 0;

  void validate() const;
  [[nodiscard]] KernelFamily family() const;
  [[nodiscard]] CovarianceParams truth() const;

  static RunConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
};

/// What to fit and how; shared by the CLI `fit` command and the benchmark.
struct FitRequest {
  std::string method = "sps";
  KernelFamily family;
  bool nugget = true;
  std::string blocks = "none";
  bool stationary = true;
  std::optional<double> alpha;
  int mle_starts = 10;
  std::uint64_t seed = 0;
  Index n_block_max = 1000;
  Stage1Config stage1;
};

struct FitOutcome {
  /// Stationary estimate; for per-block fits, the block-size weighted mean.
  CovarianceParams params;
  /// Per-block estimates when the fit is nonstationary.
  std::vector<CovarianceParams> block_params;
  SegmentationPlan plan;
  bool flagged = false;
  nlohmann::json diagnostics;
};

FitOutcome fit_dataset(const SpatialDataset& ds, const FitRequest& req);

/// Predicts with the per-block parameters for nonstationary fits and the
/// stationary model otherwise (grid neighbourhoods follow the spatial plan).
PredictiveDistribution predict_with(const FitOutcome& fit, const SpatialDataset& train, const Points& queries);

/// params.json document and its inverse (block parameters and plan included when present).
nlohmann::json fit_to_json(const FitOutcome& fit);
FitOutcome fit_from_json(const nlohmann::json& j, Index dim);

struct ReplicateRow {
  Index replicate = 0;
  Eigen::VectorXd theta_hat;  // flat (theta_rho..., theta_v, theta_0)
  double error = 0.0;         // |theta_hat - theta*|
  double mspe = 0.0;
  bool flagged = false;
  double seconds_simulate = 0.0;
  double seconds_fit = 0.0;
  double seconds_predict = 0.0;
};

struct Summary {
  Index R = 0;
  Eigen::VectorXd theta_bar;
  /// Population standard deviation over replicates (divisor R).
  Eigen::VectorXd stdev_theta;
  Eigen::VectorXd stderr_theta;
  double error_mean = 0.0;
  double error_stdev = 0.0;
  double mspe_mean = 0.0;
  double mspe_stdev = 0.0;
  Index flagged = 0;
};

Summary summarize(const std::vector<ReplicateRow>& rows);

struct BenchmarkReport {
  RunConfig config;
  std::vector<ReplicateRow> rows;
  Summary summary;
};

/// One replicate: simulate (or load), split, fit, predict, score.
ReplicateRow run_replicate(const RunConfig& cfg, Index replicate);

/// Runs all replicates; when out_dir is non-empty writes replicates.csv,
/// summary.json and timing.json there. A failing replicate aborts the run
/// after the completed rows are written.
BenchmarkReport run_benchmark(const RunConfig& cfg, const std::string& out_dir = {});

/// Train/test split for replicate l, a pure function of (seed, l, n).
struct Split {
  std::vector<Index> train;
  std::vector<Index> test;
};
Split train_test_split(std::uint64_t seed, Index replicate, Index n, double test_fraction);

enum class DiagnosticKind { NearSparsity, PrecisionVsDistance, ObjectiveCurve };
DiagnosticKind parse_diagnostic(const std::string& token);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table diagnose(DiagnosticKind kind, const RunConfig& cfg);
void write_table_csv(const Table& table, const std::string& path);

}  // namespace sps

#endif  // SPS_HARNESS_HPP
