// Command-line front end: simulate, fit, predict, benchmark, diagnose.
#include "sps/csv_io.hpp"
#include "sps/harness.hpp"
#include "sps/rng.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFlagged = 2;

struct SimulateArgs {
  std::string kernel = "se";
  std::vector<double> theta_rho{1.0};
  double theta_v = 1.0;
  double theta_0 = 0.0;
  long long n = 100;
  long long dim = 2;
  std::string domain = "0:10";
  long long N = 1;
  std::uint64_t seed = 0;
  std::string out;
};

struct FitArgs {
  std::string method = "sps";
  std::string input;
  std::string kernel = "se";
  std::string alpha = "auto";
  std::string blocks = "none";
  std::string nugget = "on";
  bool nonstationary = false;
  int mle_starts = 10;
  std::uint64_t seed = 0;
  std::string out;
};

struct PredictArgs {
  std::string params;
  std::string train;
  std::string query;
  std::string out;
};

struct BenchmarkArgs {
  std::string config;
  std::string out;
};

struct DiagnoseArgs {
  std::string kind;
  std::string config;
  std::string out;
};

std::pair<double, double> parse_domain(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("--domain must be lo:hi");
  return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
}

int run_simulate(const SimulateArgs& a) {
  const auto [lo, hi] = parse_domain(a.domain);
  sps::CovarianceParams p;
  p.family = sps::parse_kernel(a.kernel, a.dim);
  p.theta_rho = Eigen::Map<const Eigen::VectorXd>(a.theta_rho.data(), static_cast<sps::Index>(a.theta_rho.size()));
  p.theta_v = a.theta_v;
  p.theta_0 = a.theta_0;
  p.validate();
  const auto locs = sps::uniform_locations(a.n, a.dim, lo, hi, sps::stream_seed(a.seed, 0, sps::StreamTag::Locations));
  const auto ds = sps::sample_grf(locs, p, a.N, sps::stream_seed(a.seed, 0, sps::StreamTag::Field));
  sps::write_dataset_csv(ds, a.out);
  return kExitOk;
}

int run_fit(const FitArgs& a) {
  const auto ds = sps::read_dataset_csv(a.input);
  sps::FitRequest req;
  req.method = a.method;
  req.family = sps::parse_kernel(a.kernel, ds.locs.dim());
  req.nugget = a.nugget == "on";
  req.blocks = a.blocks;
  req.stationary = !a.nonstationary;
  if (a.alpha != "auto") req.alpha = std::stod(a.alpha);
  req.mle_starts = a.mle_starts;
  req.seed = a.seed;
  const auto fit = sps::fit_dataset(ds, req);
  sps::write_json(sps::fit_to_json(fit), a.out);
  if (fit.flagged) {
    std::cerr << "warning: fit did not converge cleanly (see diagnostics in " << a.out << ")\n";
    return kExitFlagged;
  }
  return kExitOk;
}

int run_predict(const PredictArgs& a) {
  const auto train = sps::read_dataset_csv(a.train);
  const auto fit = sps::fit_from_json(sps::read_json(a.params), train.locs.dim());
  const sps::Points queries = sps::read_query_csv(a.query);
  const auto pred = sps::predict_with(fit, train, queries);
  sps::write_prediction_csv(queries, pred, a.out);
  if (pred.method != "exact") std::cerr << "note: prediction method " << pred.method << '\n';
  return kExitOk;
}

int run_benchmark(const BenchmarkArgs& a) {
  const auto cfg = sps::RunConfig::from_json(sps::read_json(a.config));
  const auto report = sps::run_benchmark(cfg, a.out);
  std::cout << "R=" << report.summary.R << " error_mean=" << report.summary.error_mean
            << " mspe_mean=" << report.summary.mspe_mean << " flagged=" << report.summary.flagged << '\n';
  return report.summary.flagged > 0 ? kExitFlagged : kExitOk;
}

int run_diagnose(const DiagnoseArgs& a) {
  const auto cfg = sps::RunConfig::from_json(sps::read_json(a.config));
  sps::write_table_csv(sps::diagnose(sps::parse_diagnostic(a.kind), cfg), a.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse precision selection for Gaussian random fields"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Draw a GRF dataset at uniform random locations");
  c_sim->add_option("--kernel", sim.kernel, "se | matern32 | exponential | aniso-exp")->capture_default_str();
  c_sim->add_option("--theta-rho", sim.theta_rho, "range parameter(s)")->expected(1, -1)->capture_default_str();
  c_sim->add_option("--theta-v", sim.theta_v)->capture_default_str();
  c_sim->add_option("--theta-0", sim.theta_0)->capture_default_str();
  c_sim->add_option("--n", sim.n)->capture_default_str();
  c_sim->add_option("--dim", sim.dim)->capture_default_str();
  c_sim->add_option("--domain", sim.domain, "lo:hi")->capture_default_str();
  c_sim->add_option("--N", sim.N, "realizations")->capture_default_str();
  c_sim->add_option("--seed", sim.seed)->capture_default_str();
  c_sim->add_option("--out", sim.out)->required();

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Estimate covariance parameters");
  c_fit->add_option("--method", fit.method)->check(CLI::IsMember({"sps", "mle"}))->capture_default_str();
  c_fit->add_option("--input", fit.input)->required();
  c_fit->add_option("--kernel", fit.kernel)->capture_default_str();
  c_fit->add_option("--alpha", fit.alpha, "number or auto")->capture_default_str();
  c_fit->add_option("--blocks", fit.blocks, "none | auto | ss:AxB | rs:K")->capture_default_str();
  c_fit->add_option("--nugget", fit.nugget)->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  c_fit->add_flag("--nonstationary", fit.nonstationary, "one parameter set per block");
  c_fit->add_option("--mle-starts", fit.mle_starts)->capture_default_str();
  c_fit->add_option("--seed", fit.seed)->capture_default_str();
  c_fit->add_option("--out", fit.out)->required();

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Kriging mean and variance at query locations");
  c_pred->add_option("--params", pred.params)->required();
  c_pred->add_option("--train", pred.train)->required();
  c_pred->add_option("--query", pred.query)->required();
  c_pred->add_option("--out", pred.out)->required();

  BenchmarkArgs bench;
  auto* c_bench = app.add_subcommand("benchmark", "Replicated simulation study");
  c_bench->add_option("--config", bench.config)->required();
  c_bench->add_option("--out", bench.out, "report directory")->required();

  DiagnoseArgs diag;
  auto* c_diag = app.add_subcommand("diagnose", "near-sparsity | precision-vs-distance | objective-curve");
  c_diag->add_option("kind", diag.kind)
      ->required()
      ->check(CLI::IsMember({"near-sparsity", "precision-vs-distance", "objective-curve"}));
  c_diag->add_option("--config", diag.config)->required();
  c_diag->add_option("--out", diag.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_sim) return run_simulate(sim);
    if (*c_fit) return run_fit(fit);
    if (*c_pred) return run_predict(pred);
    if (*c_bench) return run_benchmark(bench);
    if (*c_diag) return run_diagnose(diag);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
