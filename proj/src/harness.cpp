#include "sps/harness.hpp"

#include "sps/linalg.hpp"
#include "sps/mle.hpp"
#include "sps/parallel.hpp"
#include "sps/pipeline.hpp"
#include "sps/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

namespace sps {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

std::string_view inner_case_token(InnerCase c) {
  switch (c) {
    case InnerCase::NuggetOnly: return "nugget-only";
    case InnerCase::Interior: return "interior";
    case InnerCase::VarianceOnly: return "variance-only";
  }
  return "unknown";
}

std::string_view scheme_token(SegmentScheme s) {
  switch (s) {
    case SegmentScheme::Spatial: return "ss";
    case SegmentScheme::Random: return "rs";
    case SegmentScheme::None: return "none";
  }
  return "none";
}

SegmentScheme parse_scheme(const std::string& s) {
  if (s == "ss") return SegmentScheme::Spatial;
  if (s == "rs") return SegmentScheme::Random;
  if (s == "none") return SegmentScheme::None;
  throw std::invalid_argument("unknown segmentation scheme '" + s + "'");
}

nlohmann::json stage2_json(const Stage2Result& r) {
  return {{"objective", r.objective},
          {"active_case", std::string(inner_case_token(r.active_case))},
          {"curvature_ok", r.curvature_ok},
          {"flagged", r.flagged},
          {"evaluations", r.evaluations}};
}

nlohmann::json plan_to_json(const SegmentationPlan& plan, Index n) {
  nlohmann::json j;
  j["scheme"] = std::string(scheme_token(plan.scheme));
  j["assignment"] = plan.assignment(n);
  if (plan.scheme == SegmentScheme::Spatial) {
    j["grid_dims"] = plan.grid_dims;
    j["box_lo"] = to_std(plan.box_lo.transpose());
    j["box_hi"] = to_std(plan.box_hi.transpose());
    j["block_of_cell"] = plan.block_of_cell;
  }
  return j;
}

SegmentationPlan plan_from_json(const nlohmann::json& j) {
  SegmentationPlan plan;
  plan.scheme = parse_scheme(j.at("scheme").get<std::string>());
  const auto assignment = j.at("assignment").get<std::vector<Index>>();
  Index K = 0;
  for (Index b : assignment) K = std::max(K, b + 1);
  plan.blocks.resize(static_cast<std::size_t>(K));
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] < 0) throw std::invalid_argument("plan: negative block id");
    plan.blocks[static_cast<std::size_t>(assignment[i])].push_back(static_cast<Index>(i));
  }
  if (plan.scheme == SegmentScheme::Spatial) {
    plan.grid_dims = j.at("grid_dims").get<std::vector<int>>();
    plan.box_lo = from_std(j.at("box_lo").get<std::vector<double>>()).transpose();
    plan.box_hi = from_std(j.at("box_hi").get<std::vector<double>>()).transpose();
    plan.block_of_cell = j.at("block_of_cell").get<std::vector<Index>>();
  }
  plan.validate(static_cast<Index>(assignment.size()));
  return plan;
}

Eigen::VectorXd mean_of(const Eigen::MatrixXd& Y) { return Y.rowwise().mean(); }

}  // namespace

// ---------------------------------------------------------------- RunConfig

void RunConfig::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must lie in (0, 1)");
  if (R < 1) throw std::invalid_argument("R must be >= 1");
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (!(domain_hi > domain_lo)) throw std::invalid_argument("domain must satisfy lo < hi");
  if (method != "sps" && method != "mle") throw std::invalid_argument("method must be sps or mle");
  if (mle_starts < 1) throw std::invalid_argument("mle_starts must be >= 1");
  if (n_block_max < 2) throw std::invalid_argument("n_block_max must be >= 2");
  if (alpha && !(*alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  (void)parse_block_spec(blocks);
  truth().validate();
}

KernelFamily RunConfig::family() const { return parse_kernel(kernel, dim); }

CovarianceParams RunConfig::truth() const {
  CovarianceParams p;
  p.family = family();
  p.theta_rho = from_std(theta_rho);
  p.theta_v = theta_v;
  p.theta_0 = theta_0;
  return p;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "kernel", "theta_rho", "theta_v", "theta_0", "n", "dim", "domain", "N", "R", "seed", "method", "mle_starts",
      "blocks", "n_block_max", "nugget", "stationary", "alpha", "eps_primal", "eps_dual", "max_iters",
      "test_fraction", "mspe_convention", "input", "n_grid", "eps_grid", "theta_grid", "noiseless", "threads"};
  if (!j.is_object()) throw std::invalid_argument("run config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("run config: unknown key '" + key + "'");
  }
  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  get("kernel", c.kernel);
  if (j.contains("theta_rho")) {
    const auto& t = j.at("theta_rho");
    c.theta_rho = t.is_array() ? t.get<std::vector<double>>() : std::vector<double>{t.get<double>()};
  }
  get("theta_v", c.theta_v);
  get("theta_0", c.theta_0);
  get("n", c.n);
  get("dim", c.dim);
  if (j.contains("domain")) {
    const auto& d = j.at("domain");
    if (d.is_string()) {
      const auto s = d.get<std::string>();
      const auto colon = s.find(':');
      if (colon == std::string::npos) throw std::invalid_argument("domain must be lo:hi");
      c.domain_lo = std::stod(s.substr(0, colon));
      c.domain_hi = std::stod(s.substr(colon + 1));
    } else {
      const auto v = d.get<std::vector<double>>();
      if (v.size() != 2) throw std::invalid_argument("domain must be [lo, hi]");
      c.domain_lo = v[0];
      c.domain_hi = v[1];
    }
  }
  get("N", c.N);
  get("R", c.R);
  get("seed", c.seed);
  get("method", c.method);
  get("mle_starts", c.mle_starts);
  get("blocks", c.blocks);
  get("n_block_max", c.n_block_max);
  get("nugget", c.nugget);
  get("stationary", c.stationary);
  if (j.contains("alpha")) {
    const auto& a = j.at("alpha");
    if (a.is_string()) {
      if (a.get<std::string>() != "auto") throw std::invalid_argument("alpha must be a number or \"auto\"");
      c.alpha.reset();
    } else {
      c.alpha = a.get<double>();
    }
  }
  get("eps_primal", c.eps_primal);
  get("eps_dual", c.eps_dual);
  get("max_iters", c.max_iters);
  get("test_fraction", c.test_fraction);
  if (j.contains("mspe_convention")) {
    const auto s = j.at("mspe_convention").get<std::string>();
    if (s == "true-theta") {
      c.mspe_convention = MspeConvention::TrueTheta;
    } else if (s == "held-out") {
      c.mspe_convention = MspeConvention::HeldOut;
    } else {
      throw std::invalid_argument("mspe_convention must be true-theta or held-out");
    }
  }
  if (j.contains("input")) c.input = j.at("input").get<std::string>();
  get("n_grid", c.n_grid);
  get("eps_grid", c.eps_grid);
  get("theta_grid", c.theta_grid);
  get("noiseless", c.noiseless);
  get("threads", c.threads);
  if (c.input) {
    // Geometry comes from the file.
    const SpatialDataset ds = read_dataset_csv(*c.input);
    c.n = ds.size();
    c.dim = ds.locs.dim();
    c.N = ds.realizations();
    c.mspe_convention = MspeConvention::HeldOut;
  }
  c.validate();
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["kernel"] = kernel;
  j["theta_rho"] = theta_rho;
  j["theta_v"] = theta_v;
  j["theta_0"] = theta_0;
  j["n"] = n;
  j["dim"] = dim;
  j["domain"] = std::vector<double>{domain_lo, domain_hi};
  j["N"] = N;
  j["R"] = R;
  j["seed"] = seed;
  j["method"] = method;
  j["mle_starts"] = mle_starts;
  j["blocks"] = blocks;
  j["n_block_max"] = n_block_max;
  j["nugget"] = nugget;
  j["stationary"] = stationary;
  if (alpha) {
    j["alpha"] = *alpha;
  } else {
    j["alpha"] = "auto";
  }
  j["eps_primal"] = eps_primal;
  j["eps_dual"] = eps_dual;
  j["max_iters"] = max_iters;
  j["test_fraction"] = test_fraction;
  j["mspe_convention"] = mspe_convention == MspeConvention::TrueTheta ? "true-theta" : "held-out";
  if (input) j["input"] = *input;
  j["n_grid"] = n_grid;
  j["eps_grid"] = eps_grid;
  j["theta_grid"] = theta_grid;
  j["noiseless"] = noiseless;
  j["threads"] = threads;
  return j;
}

// ---------------------------------------------------------------- fitting

FitOutcome fit_dataset(const SpatialDataset& ds, const FitRequest& req) {
  FitOutcome out;
  out.diagnostics["method"] = req.method;
  Stage1Config s1 = req.stage1;
  s1.alpha = req.alpha;

  if (req.method == "mle") {
    const MleResult r = mle_fit(ds, req.family, req.mle_starts, req.seed, req.nugget);
    out.params = r.theta_hat;
    out.flagged = r.flagged;
    out.plan = single_segment(ds.size());
    out.diagnostics["objective"] = r.objective;
    out.diagnostics["evaluations"] = r.evaluations;
    out.diagnostics["starts"] = req.mle_starts;
    out.diagnostics["flagged"] = r.flagged;
    return out;
  }
  if (req.method != "sps") throw std::invalid_argument("method must be sps or mle");

  Stage2Options s2;
  s2.seed = req.seed;
  const BlockSpec spec = parse_block_spec(req.blocks);
  out.plan = make_plan(spec, ds.locs, stream_seed(req.seed, 0, StreamTag::Segments), req.n_block_max);

  if (out.plan.block_count() == 1 && req.stationary) {
    const SpsFit fit = fit_sps(ds, req.family, req.nugget, s1, s2);
    out.params = fit.stage2.theta_hat;
    out.flagged = !fit.stage1.converged || fit.stage2.flagged;
    out.diagnostics["stage1"] = {{"iterations", fit.stage1.iterations},
                                 {"converged", fit.stage1.converged},
                                 {"primal_residual", fit.stage1.primal_residual},
                                 {"dual_residual", fit.stage1.dual_residual},
                                 {"a_eff", fit.stage1.a_eff},
                                 {"b_eff", fit.stage1.b_eff}};
    out.diagnostics["stage2"] = stage2_json(fit.stage2);
    out.diagnostics["blocks"] = 1;
    out.diagnostics["flagged"] = out.flagged;
    return out;
  }

  const SegmentedFit fit = fit_segmented(ds, out.plan, req.family, req.stationary, s1, req.nugget, s2);
  out.flagged = fit.flagged;
  int max_iters = 0;
  bool all_converged = true;
  for (const auto& est : fit.stage1) {
    max_iters = std::max(max_iters, est.iterations);
    all_converged = all_converged && est.converged;
  }
  out.diagnostics["stage1"] = {{"max_iterations", max_iters}, {"converged", all_converged}};
  out.diagnostics["blocks"] = out.plan.block_count();
  if (fit.joint) {
    out.params = fit.joint->theta_hat;
    out.diagnostics["stage2"] = stage2_json(*fit.joint);
  } else {
    nlohmann::json per_block = nlohmann::json::array();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(req.family.q + 2);
    for (std::size_t k = 0; k < fit.per_block.size(); ++k) {
      out.block_params.push_back(fit.per_block[k].theta_hat);
      per_block.push_back(stage2_json(fit.per_block[k]));
      acc += static_cast<double>(out.plan.blocks[k].size()) * fit.per_block[k].theta_hat.flat();
    }
    acc /= static_cast<double>(ds.size());
    out.params.family = req.family;
    out.params.theta_rho = acc.head(req.family.q);
    out.params.theta_v = acc[req.family.q];
    out.params.theta_0 = acc[req.family.q + 1];
    out.diagnostics["stage2"] = per_block;
  }
  out.diagnostics["flagged"] = out.flagged;
  return out;
}

PredictiveDistribution predict_with(const FitOutcome& fit, const SpatialDataset& train, const Points& queries) {
  if (!fit.block_params.empty()) return predict_nonstationary(train, fit.plan, fit.block_params, queries);
  StationaryPredictionOptions opts;
  if (fit.plan.scheme == SegmentScheme::Spatial && fit.plan.block_count() > 1) opts.grid_dims = fit.plan.grid_dims;
  return predict_stationary(train, fit.params, queries, opts);
}

nlohmann::json fit_to_json(const FitOutcome& fit) {
  nlohmann::json j = params_to_json(fit.params);
  j["diagnostics"] = fit.diagnostics;
  if (!fit.block_params.empty()) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& p : fit.block_params) blocks.push_back(params_to_json(p));
    j["block_params"] = blocks;
    Index n = 0;
    for (const auto& b : fit.plan.blocks) n += static_cast<Index>(b.size());
    j["plan"] = plan_to_json(fit.plan, n);
  } else if (fit.plan.scheme == SegmentScheme::Spatial && fit.plan.block_count() > 1) {
    Index n = 0;
    for (const auto& b : fit.plan.blocks) n += static_cast<Index>(b.size());
    j["plan"] = plan_to_json(fit.plan, n);
  }
  return j;
}

FitOutcome fit_from_json(const nlohmann::json& j, Index dim) {
  FitOutcome fit;
  fit.params = params_from_json(j, dim);
  if (j.contains("diagnostics")) fit.diagnostics = j.at("diagnostics");
  if (j.contains("block_params")) {
    for (const auto& b : j.at("block_params")) fit.block_params.push_back(params_from_json(b, dim));
  }
  if (j.contains("plan")) {
    fit.plan = plan_from_json(j.at("plan"));
    if (!fit.block_params.empty() && static_cast<Index>(fit.block_params.size()) != fit.plan.block_count()) {
      throw std::invalid_argument("params: block_params and plan disagree on the block count");
    }
  } else if (!fit.block_params.empty()) {
    throw std::invalid_argument("params: block_params need a plan");
  }
  return fit;
}

// ---------------------------------------------------------------- benchmark

Split train_test_split(std::uint64_t seed, Index replicate, Index n, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must lie in (0, 1)");
  const Index m = std::clamp<Index>(static_cast<Index>(std::llround(test_fraction * static_cast<double>(n))), 1, n - 2);
  if (m < 1) throw std::invalid_argument("train_test_split: need at least 3 locations");
  Rng rng(stream_seed(seed, static_cast<std::uint64_t>(replicate), StreamTag::Split));
  const auto perm = rng.permutation(n);
  Split s;
  s.test.assign(perm.begin(), perm.begin() + m);
  s.train.assign(perm.begin() + m, perm.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

ReplicateRow run_replicate(const RunConfig& cfg, Index replicate) {
  ReplicateRow row;
  row.replicate = replicate;
  const auto l = static_cast<std::uint64_t>(replicate);
  const CovarianceParams truth = cfg.truth();

  auto t0 = Clock::now();
  SpatialDataset ds;
  if (cfg.input) {
    ds = read_dataset_csv(*cfg.input);
  } else {
    const LocationSet locs = uniform_locations(cfg.n, cfg.dim, cfg.domain_lo, cfg.domain_hi,
                                               stream_seed(cfg.seed, l, StreamTag::Locations));
    ds = sample_grf(locs, truth, cfg.N, stream_seed(cfg.seed, l, StreamTag::Field));
  }
  const Split split = train_test_split(cfg.seed, replicate, ds.size(), cfg.test_fraction);
  const SpatialDataset train = ds.subset(split.train);
  const SpatialDataset test = ds.subset(split.test);
  row.seconds_simulate = seconds_since(t0);

  t0 = Clock::now();
  FitRequest req;
  req.method = cfg.method;
  req.family = cfg.family();
  req.nugget = cfg.nugget;
  req.blocks = cfg.blocks;
  req.stationary = cfg.stationary;
  req.alpha = cfg.alpha;
  req.mle_starts = cfg.mle_starts;
  req.seed = stream_seed(cfg.seed, l, StreamTag::Starts);
  req.n_block_max = cfg.n_block_max;
  req.stage1.eps_primal = cfg.eps_primal;
  req.stage1.eps_dual = cfg.eps_dual;
  req.stage1.max_iters = cfg.max_iters;
  const FitOutcome fit = fit_dataset(train, req);
  row.seconds_fit = seconds_since(t0);
  row.theta_hat = fit.params.flat();
  row.flagged = fit.flagged;
  if (!cfg.input) row.error = (row.theta_hat - truth.flat()).norm();

  t0 = Clock::now();
  const Points& queries = test.locs.coords();
  const PredictiveDistribution pred = predict_with(fit, train, queries);
  Eigen::VectorXd reference;
  if (cfg.mspe_convention == MspeConvention::TrueTheta && !cfg.input) {
    FitOutcome oracle;
    oracle.params = truth;
    oracle.plan = fit.plan;
    reference = predict_with(oracle, train, queries).mean;
  } else {
    reference = mean_of(test.Y);
  }
  row.mspe = mspe(reference, pred.mean);
  row.seconds_predict = seconds_since(t0);
  return row;
}

Summary summarize(const std::vector<ReplicateRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("summarize: no rows");
  Summary s;
  s.R = static_cast<Index>(rows.size());
  const double R = static_cast<double>(s.R);
  const Index p = rows.front().theta_hat.size();
  s.theta_bar = Eigen::VectorXd::Zero(p);
  for (const auto& r : rows) {
    s.theta_bar += r.theta_hat;
    s.error_mean += r.error;
    s.mspe_mean += r.mspe;
    s.flagged += r.flagged ? 1 : 0;
  }
  s.theta_bar /= R;
  s.error_mean /= R;
  s.mspe_mean /= R;
  s.stdev_theta = Eigen::VectorXd::Zero(p);
  for (const auto& r : rows) {
    s.stdev_theta += (r.theta_hat - s.theta_bar).array().square().matrix();
    s.error_stdev += (r.error - s.error_mean) * (r.error - s.error_mean);
    s.mspe_stdev += (r.mspe - s.mspe_mean) * (r.mspe - s.mspe_mean);
  }
  s.stdev_theta = (s.stdev_theta / R).array().sqrt();
  s.error_stdev = std::sqrt(s.error_stdev / R);
  s.mspe_stdev = std::sqrt(s.mspe_stdev / R);
  s.stderr_theta = s.stdev_theta / std::sqrt(R);
  return s;
}

namespace {

void write_replicates_csv(const std::vector<ReplicateRow>& rows, Index q, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "replicate";
  for (Index k = 0; k < q; ++k) out << ",theta_rho_" << (k + 1);
  out << ",theta_v,theta_0,error,mspe,flagged\n";
  for (const auto& r : rows) {
    out << r.replicate;
    for (Index k = 0; k < r.theta_hat.size(); ++k) out << ',' << format_double(r.theta_hat[k]);
    out << ',' << format_double(r.error) << ',' << format_double(r.mspe) << ',' << (r.flagged ? 1 : 0) << '\n';
  }
}

nlohmann::json summary_json(const RunConfig& cfg, const Summary& s, bool complete, const std::string& error) {
  nlohmann::json j;
  j["config"] = cfg.to_json();
  j["complete"] = complete;
  if (!error.empty()) j["error"] = error;
  j["R"] = s.R;
  j["theta_bar"] = to_std(s.theta_bar);
  j["stdev_theta"] = to_std(s.stdev_theta);
  j["stderr_theta"] = to_std(s.stderr_theta);
  j["error_mean"] = s.error_mean;
  j["error_stdev"] = s.error_stdev;
  j["mspe_mean"] = s.mspe_mean;
  j["mspe_stdev"] = s.mspe_stdev;
  j["flagged"] = s.flagged;
  return j;
}

void persist(const RunConfig& cfg, const std::vector<ReplicateRow>& rows, const std::string& dir, bool complete,
             const std::string& error) {
  std::filesystem::create_directories(dir);
  const Index q = cfg.family().q;
  write_replicates_csv(rows, q, dir + "/replicates.csv");
  Summary s;
  if (!rows.empty()) s = summarize(rows);
  write_json(summary_json(cfg, s, complete, error), dir + "/summary.json");
  nlohmann::json timing = nlohmann::json::array();
  for (const auto& r : rows) {
    timing.push_back({{"replicate", r.replicate},
                      {"simulate", r.seconds_simulate},
                      {"fit", r.seconds_fit},
                      {"predict", r.seconds_predict}});
  }
  write_json(timing, dir + "/timing.json");
}

}  // namespace

BenchmarkReport run_benchmark(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const auto R = static_cast<std::size_t>(cfg.R);
  std::vector<ReplicateRow> slots(R);
  std::vector<std::string> errors(R);
  std::vector<char> done(R, 0);
  parallel_for(
      R,
      [&](std::size_t l) {
        try {
          slots[l] = run_replicate(cfg, static_cast<Index>(l));
          done[l] = 1;
        } catch (const std::exception& e) {
          errors[l] = e.what();
        }
      },
      cfg.threads);

  BenchmarkReport report;
  report.config = cfg;
  std::string first_error;
  for (std::size_t l = 0; l < R; ++l) {
    if (done[l]) {
      report.rows.push_back(slots[l]);
    } else if (first_error.empty()) {
      first_error = "replicate " + std::to_string(l) + ": " + errors[l];
    }
  }
  if (!first_error.empty()) {
    if (!out_dir.empty()) persist(cfg, report.rows, out_dir, false, first_error);
    throw std::runtime_error(first_error);
  }
  report.summary = summarize(report.rows);
  if (!out_dir.empty()) persist(cfg, report.rows, out_dir, true, {});
  return report;
}

// ---------------------------------------------------------------- diagnostics

DiagnosticKind parse_diagnostic(const std::string& token) {
  if (token == "near-sparsity") return DiagnosticKind::NearSparsity;
  if (token == "precision-vs-distance") return DiagnosticKind::PrecisionVsDistance;
  if (token == "objective-curve") return DiagnosticKind::ObjectiveCurve;
  throw std::invalid_argument("unknown diagnostic '" + token + "'");
}

Table diagnose(DiagnosticKind kind, const RunConfig& cfg) {
  cfg.validate();
  const CovarianceParams truth = cfg.truth();
  Table t;
  switch (kind) {
    case DiagnosticKind::NearSparsity: {
      t.header = {"n", "eps", "precision_fraction", "covariance_fraction"};
      for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) {
        const Index n = cfg.n_grid[k];
        const LocationSet locs = uniform_locations(n, cfg.dim, cfg.domain_lo, cfg.domain_hi,
                                                   stream_seed(cfg.seed, k, StreamTag::Diagnostic));
        const Eigen::MatrixXd C = covariance_matrix(locs, truth);
        const Eigen::MatrixXd P = spd_inverse(C);
        for (double eps : cfg.eps_grid) {
          t.rows.push_back({static_cast<double>(n), eps, near_sparsity_fraction(P, eps), near_sparsity_fraction(C, eps)});
        }
      }
      break;
    }
    case DiagnosticKind::PrecisionVsDistance: {
      t.header = {"distance", "abs_precision"};
      const LocationSet locs = uniform_locations(cfg.n, cfg.dim, cfg.domain_lo, cfg.domain_hi,
                                                 stream_seed(cfg.seed, 0, StreamTag::Diagnostic));
      const Eigen::MatrixXd P = spd_inverse(covariance_matrix(locs, truth));
      for (Index i = 0; i < locs.size(); ++i) {
        for (Index j = i + 1; j < locs.size(); ++j) {
          t.rows.push_back({distance(locs.point(i), locs.point(j)), std::abs(P(i, j))});
        }
      }
      break;
    }
    case DiagnosticKind::ObjectiveCurve: {
      if (cfg.theta_grid.empty()) throw std::invalid_argument("objective-curve needs a non-empty theta_grid");
      t.header = {"theta_rho", "f"};
      const LocationSet locs = uniform_locations(cfg.n, cfg.dim, cfg.domain_lo, cfg.domain_hi,
                                                 stream_seed(cfg.seed, 0, StreamTag::Locations));
      Eigen::MatrixXd c_hat;
      if (cfg.noiseless) {
        c_hat = covariance_matrix(locs, truth);
      } else {
        const SpatialDataset ds = sample_grf(locs, truth, cfg.N, stream_seed(cfg.seed, 0, StreamTag::Field));
        Stage1Config s1;
        s1.alpha = cfg.alpha;
        s1.eps_primal = cfg.eps_primal;
        s1.eps_dual = cfg.eps_dual;
        s1.max_iters = cfg.max_iters;
        c_hat = invert_precision(solve_stage1(sample_covariance(ds), distance_weights(locs), s1));
      }
      const KernelFamily fam = cfg.family();
      for (double theta : cfg.theta_grid) {
        const Eigen::VectorXd rho = Eigen::VectorXd::Constant(fam.q, theta);
        t.rows.push_back({theta, outer_objective(rho, c_hat, locs, fam, cfg.nugget)});
      }
      break;
    }
  }
  return t;
}

void write_table_csv(const Table& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t k = 0; k < table.header.size(); ++k) out << (k ? "," : "") << table.header[k];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_double(row[k]);
    out << '\n';
  }
}

}  // namespace sps
