// bayesdens: command-line front end.
//
//   bayesdens fit      --input data.txt --output est.csv [options]
//   bayesdens accuracy --mixture mw8 --n 1000 --reps 50 --output acc.csv
//   bayesdens coverage --mixture mw8 --n 1000 --reps 100 --output cov.csv
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bayesdens/bayesdens.hpp"

namespace {

using namespace bayesdens;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CliConfig {
  std::string input;
  std::string output;
  std::string method = "slice";
  std::size_t grid_size = kDefaultGridSize;
  std::size_t num_basis = kDefaultNumBasis;
  std::size_t eval_points = 0;
  double sigma_beta = 1000.0;
  double s_sigma = 1000.0;
  int warmup = -1;
  int samples = 1000;
  std::uint64_t seed = 1;
  double level = kDefaultLevel;
  bool log_transform = false;
  double padding = kDefaultPadding;
  double target_accept = FitConfig{}.nuts_target_accept;
  std::string mixture;
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sds;
  std::size_t n = 1000;
  std::size_t reps = 100;
  unsigned threads = 1;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_model_options(CLI::App& app, CliConfig& c) {
  app.add_option("--method", c.method, "Inference engine: slice or nuts")
      ->check(CLI::IsMember({"slice", "nuts"}));
  app.add_option("--grid-size", c.grid_size, "Binning grid size M")->check(CLI::Range(11, 1000000));
  app.add_option("--num-basis", c.num_basis, "Number of canonical spline functions K")
      ->check(CLI::Range(5, 100000));
  app.add_option("--eval-points", c.eval_points, "Output grid size (0 = grid size)");
  app.add_option("--sigma-beta", c.sigma_beta, "Prior s.d. of the linear coefficients")
      ->check(CLI::PositiveNumber);
  app.add_option("--s-sigma", c.s_sigma, "Half-Cauchy scale of sigma")->check(CLI::PositiveNumber);
  app.add_option("--warmup", c.warmup, "Warm-up iterations (default 100 slice, 1000 nuts)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--samples", c.samples, "Retained draws")->check(CLI::Range(100, 100000000));
  app.add_option("--seed", c.seed, "Random seed");
  app.add_option("--level", c.level, "Credible level")->check(CLI::Range(0.5, 1.0));
  app.add_flag("--log-transform", c.log_transform, "Log-transform the data before fitting");
  app.add_option("--padding", c.padding, "Fraction of the range added on each side")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--target-accept", c.target_accept, "NUTS step-size adaptation target")
      ->check(CLI::Range(0.05, 0.99));
}

void add_simulation_options(CLI::App& app, CliConfig& c) {
  app.add_option("--mixture", c.mixture, "Mixture preset (mw8)");
  app.add_option("--weights", c.weights, "Mixture weights")->delimiter(',');
  app.add_option("--means", c.means, "Mixture means")->delimiter(',');
  app.add_option("--sds", c.sds, "Mixture standard deviations")->delimiter(',');
  app.add_option("--n", c.n, "Sample size per replication")->check(CLI::Range(10, 100000000));
  app.add_option("--reps", c.reps, "Number of replications")->check(CLI::PositiveNumber);
  app.add_option("--threads", c.threads, "Worker threads for replications")
      ->check(CLI::PositiveNumber);
}

EstimateOptions to_options(const CliConfig& c) {
  EstimateOptions o;
  o.fit.method = parse_method(c.method);
  o.fit.warmup = c.warmup;
  o.fit.retained = c.samples;
  o.fit.seed = c.seed;
  o.fit.nuts_target_accept = c.target_accept;
  o.hyper = {c.sigma_beta, c.s_sigma};
  o.grid_size = c.grid_size;
  o.num_basis = c.num_basis;
  o.eval_points = c.eval_points;
  o.padding = c.padding;
  o.log_transform = c.log_transform;
  o.level = c.level;
  if (!(c.level > 0.5 && c.level < 1.0)) throw UsageError("--level must lie in (0.5, 1)");
  if (c.num_basis + 2 > c.grid_size) throw UsageError("--num-basis must be at most --grid-size - 2");
  if (c.eval_points != 0 && c.eval_points < 2) throw UsageError("--eval-points must be 0 or >= 2");
  return o;
}

NormalMixture to_mixture(const CliConfig& c) {
  if (!c.mixture.empty()) {
    if (c.mixture != "mw8") throw UsageError("unknown mixture preset '" + c.mixture + "'");
    if (!c.weights.empty() || !c.means.empty() || !c.sds.empty()) {
      throw UsageError("--mixture cannot be combined with --weights/--means/--sds");
    }
    return mw8();
  }
  if (c.weights.empty()) throw UsageError("give --mixture or --weights/--means/--sds");
  NormalMixture mix{c.weights, c.means, c.sds};
  try {
    mix.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return mix;
}

nlohmann::ordered_json config_echo(const std::string& subcommand, const CliConfig& c) {
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand;
  j["input"] = c.input;
  j["output"] = c.output;
  j["method"] = c.method;
  j["grid_size"] = c.grid_size;
  j["num_basis"] = c.num_basis;
  j["eval_points"] = c.eval_points;
  j["sigma_beta"] = c.sigma_beta;
  j["s_sigma"] = c.s_sigma;
  j["warmup"] = c.warmup < 0 ? FitConfig::default_warmup(parse_method(c.method)) : c.warmup;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["level"] = c.level;
  j["log_transform"] = c.log_transform;
  j["padding"] = c.padding;
  j["target_accept"] = c.target_accept;
  if (subcommand != "fit") {
    j["mixture"] = c.mixture;
    j["weights"] = c.weights;
    j["means"] = c.means;
    j["sds"] = c.sds;
    j["n"] = c.n;
    j["reps"] = c.reps;
    j["threads"] = c.threads;
  }
  return j;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::ParseError, "cannot open output file '" + path + "'");
  return out;
}

int run_fit(const CliConfig& c) {
  const EstimateOptions opt = to_options(c);
  std::ifstream in(c.input);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open input file '" + c.input + "'");
  const std::vector<double> data = read_values(in);

  const FittedDensity fit(data, opt);
  const DensityEstimate est = fit.summary();

  auto csv = open_output(c.output);
  write_estimate_csv(csv, est);

  nlohmann::ordered_json sidecar = estimate_json(est, c.seed, data.size());
  sidecar["config"] = config_echo("fit", c);
  nlohmann::ordered_json diag;
  for (const auto& [k, v] : fit.samples().diagnostics) {
    if (k != "seconds") diag[k] = v;
  }
  sidecar["diagnostics"] = diag;
  sidecar["transform"] = {{"lower", est.transform.lower},
                          {"scale", est.transform.scale},
                          {"log_applied", est.transform.log_applied}};
  auto json = open_output(c.output + ".json");
  json << sidecar.dump(2) << '\n';
  return kExitOk;
}

int run_accuracy(const CliConfig& c) {
  const EstimateOptions opt = to_options(c);
  const NormalMixture mix = to_mixture(c);
  const auto rows = accuracy_experiment(mix, c.n, c.reps, c.seed, opt, c.threads);
  auto out = open_output(c.output);
  write_accuracy_csv(out, rows);
  return kExitOk;
}

int run_coverage(const CliConfig& c) {
  const EstimateOptions opt = to_options(c);
  const NormalMixture mix = to_mixture(c);
  if (c.reps < 50) throw UsageError("--reps must be at least 50 for coverage");
  const CoverageTable table = coverage_experiment(mix, c.n, c.reps, c.seed, opt, c.threads);
  auto out = open_output(c.output);
  write_coverage_csv(out, table);
  if (table.failures > 0) {
    std::cerr << "bayesdens: " << table.failures << " of " << table.replications
              << " replications failed and were excluded\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian density estimation with penalized-spline Poisson models"};
  app.require_subcommand(1);
  CliConfig cfg;

  auto* fit = app.add_subcommand("fit", "Estimate a density from one value per line");
  fit->add_option("--input", cfg.input, "Input data file")->required();
  fit->add_option("--output", cfg.output, "Output CSV (a .json sidecar is written next to it)")
      ->required();
  add_model_options(*fit, cfg);

  auto* acc = app.add_subcommand("accuracy", "L1 accuracy study on a normal mixture");
  acc->add_option("--output", cfg.output, "Output CSV")->required();
  add_model_options(*acc, cfg);
  add_simulation_options(*acc, cfg);

  auto* cov = app.add_subcommand("coverage", "Decile credible-interval coverage study");
  cov->add_option("--output", cfg.output, "Output CSV")->required();
  add_model_options(*cov, cfg);
  add_simulation_options(*cov, cfg);

  auto usage = [&](const std::string& reason) {
    std::cerr << "bayesdens: " << reason << '\n' << app.help();
    return kExitUsage;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage(e.what());
  }

  try {
    if (*fit) return run_fit(cfg);
    if (*acc) return run_accuracy(cfg);
    return run_coverage(cfg);
  } catch (const UsageError& e) {
    return usage(e.what());
  } catch (const Error& e) {
    std::cerr << "bayesdens: " << e.what() << '\n';
    if (e.kind() == ErrorKind::BadConfig) return kExitUsage;
    return is_numeric_failure(e.kind()) ? kExitNumeric : kExitData;
  }
}
