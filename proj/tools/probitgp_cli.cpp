// probitgp: simulate data, fit alpha, estimate marginal likelihoods and predict with the
// tile-low-rank ratio estimator or the mean-field variational estimator.
//
// Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "probitgp/errors.hpp"
#include "probitgp/harness.hpp"
#include "probitgp/io.hpp"
#include "probitgp/probit_model.hpp"

namespace {

using namespace probitgp;

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

// RunConfig flags shared by the model subcommands. Values given on the command line override
// the config file, which overrides the defaults.
struct RunFlags {
  std::string config_path;
  std::optional<std::string> method;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<bool> antithetic;
  std::optional<std::size_t> block_size;
  std::optional<double> trunc_tol;
  std::optional<double> alpha;
  std::optional<double> alpha_min;
  std::optional<double> alpha_max;
  std::optional<std::size_t> alpha_count;
  std::optional<double> cavi_tol;
  std::optional<std::size_t> cavi_max_iter;

  void attach(CLI::App& app, bool with_method) {
    app.add_option("--config", config_path, "Flat JSON run configuration");
    if (with_method) app.add_option("--method", method, "Estimator: tlr or vb");
    app.add_option("--samples", samples, "Monte Carlo sample count R");
    app.add_option("--seed", seed, "64-bit seed");
    app.add_option("--antithetic", antithetic, "Antithetic SOV sampling (true/false)");
    app.add_option("--block-size", block_size, "TLR block size (0 = ceil(sqrt(n)))");
    app.add_option("--trunc-tol", trunc_tol, "TLR truncation tolerance");
    app.add_option("--alpha", alpha, "Kernel alpha; when omitted the alpha grid is searched");
    app.add_option("--alpha-min", alpha_min, "Alpha grid minimum");
    app.add_option("--alpha-max", alpha_max, "Alpha grid maximum");
    app.add_option("--alpha-count", alpha_count, "Alpha grid size");
    app.add_option("--cavi-tol", cavi_tol, "CAVI convergence tolerance");
    app.add_option("--cavi-max-iter", cavi_max_iter, "CAVI sweep limit");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) apply_config_json(config_path, cfg);
    if (method) cfg.method = parse_method(*method);
    if (samples) cfg.samples = *samples;
    if (seed) cfg.seed = *seed;
    if (antithetic) cfg.antithetic = *antithetic;
    if (block_size) cfg.block_size = *block_size;
    if (trunc_tol) cfg.trunc_tol = *trunc_tol;
    if (alpha) cfg.alpha = *alpha;
    if (alpha_min) cfg.grid.min = *alpha_min;
    if (alpha_max) cfg.grid.max = *alpha_max;
    if (alpha_count) cfg.grid.count = *alpha_count;
    if (cavi_tol) cfg.cavi_tol = *cavi_tol;
    if (cavi_max_iter) cfg.cavi_max_iter = *cavi_max_iter;
    cfg.validate();
    return cfg;
  }
};

HoldoutScheme parse_scheme(const std::string& s) {
  if (s == "random") return HoldoutScheme::kRandom;
  if (s == "grid") return HoldoutScheme::kGrid;
  throw ValidationError("unknown holdout scheme '" + s + "' (expected random or grid)");
}

double resolve_alpha(const Dataset& data, const RunConfig& cfg, std::ostream& log) {
  if (cfg.alpha) return *cfg.alpha;
  const AlphaFit fit = estimate_alpha(data, cfg.grid, cfg);
  log << "fitted alpha " << format_double(fit.alpha_hat) << "\n";
  return fit.alpha_hat;
}

int run(int argc, char** argv) {
  CLI::App app{"Probit Gaussian-process predictive probabilities"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a gridded probit GP dataset with holdout points");
  std::size_t grid_size = 16;
  double sim_alpha = 30.0;
  std::uint64_t sim_seed = 0;
  std::string scheme = "random";
  std::size_t holdout_count = 100;
  std::string train_out;
  std::string holdout_out;
  sim->add_option("--grid-size", grid_size, "Points per axis")->capture_default_str();
  sim->add_option("--alpha", sim_alpha, "True kernel alpha")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Seed")->capture_default_str();
  sim->add_option("--holdout", scheme, "Holdout layout: random or grid")->capture_default_str();
  sim->add_option("--holdout-count", holdout_count, "Number of holdout points")->capture_default_str();
  sim->add_option("--train-out", train_out, "Training CSV output")->required();
  sim->add_option("--holdout-out", holdout_out, "Holdout CSV output")->required();

  // loglik
  auto* ll = app.add_subcommand("loglik", "Estimate the marginal likelihood at one alpha");
  RunFlags ll_flags;
  std::string ll_train;
  std::string ll_path = "tlr";
  std::string ll_out;
  ll_flags.attach(*ll, false);
  ll->add_option("--train", ll_train, "Training CSV")->required();
  ll->add_option("--path", ll_path, "MVN path: dense or tlr")->capture_default_str();
  ll->add_option("--out", ll_out, "Output JSON")->required();

  // fit-alpha
  auto* fa = app.add_subcommand("fit-alpha", "Grid search of alpha by marginal likelihood");
  RunFlags fa_flags;
  std::string fa_train;
  std::string fa_out;
  fa_flags.attach(*fa, false);
  fa->add_option("--train", fa_train, "Training CSV")->required();
  fa->add_option("--out", fa_out, "Output JSON")->required();

  // predict
  auto* pr = app.add_subcommand("predict", "Predict holdout probabilities");
  RunFlags pr_flags;
  std::string pr_train;
  std::string pr_holdout;
  std::string pr_predictions;
  std::string pr_metrics;
  std::string pr_timing;
  pr_flags.attach(*pr, true);
  pr->add_option("--train", pr_train, "Training CSV")->required();
  pr->add_option("--holdout", pr_holdout, "Holdout CSV")->required();
  pr->add_option("--predictions-out", pr_predictions, "Predictions CSV")->required();
  pr->add_option("--metrics-out", pr_metrics, "Metrics JSON")->required();
  pr->add_option("--timing-out", pr_timing, "Wall-clock timing JSON");

  // benchmark
  auto* bm = app.add_subcommand("benchmark", "Simulate a dataset and time both estimators on it");
  RunFlags bm_flags;
  std::size_t bm_grid = 16;
  double bm_true_alpha = 30.0;
  std::size_t bm_holdout = 100;
  std::string bm_prefix;
  bm_flags.attach(*bm, false);
  bm->add_option("--grid-size", bm_grid, "Points per axis")->capture_default_str();
  bm->add_option("--true-alpha", bm_true_alpha, "Alpha used to simulate")->capture_default_str();
  bm->add_option("--holdout-count", bm_holdout, "Number of random holdout points")->capture_default_str();
  bm->add_option("--out-prefix", bm_prefix, "Prefix for <prefix>{tlr,vb}_{metrics,timing}.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  if (sim->parsed()) {
    const Dataset data = simulate_dataset(grid_size, sim_alpha, sim_seed, parse_scheme(scheme), holdout_count);
    write_training_csv(train_out, data);
    write_holdout_csv(holdout_out, data.holdout);
  } else if (ll->parsed()) {
    const RunConfig cfg = ll_flags.resolve();
    if (!cfg.alpha) throw ValidationError("loglik needs --alpha (or alpha in the config)");
    if (ll_path != "dense" && ll_path != "tlr") throw ValidationError("--path must be dense or tlr");
    const Dataset data = read_training_csv(ll_train);
    const ProbitGpModel model(data.locs, data.y, KernelSpec{KernelFamily::kSquaredExponential, *cfg.alpha});
    const auto method = ll_path == "dense" ? EvidenceMethod::kDense : EvidenceMethod::kTlr;
    const ProbEstimate est = marginal_likelihood(model, cfg.mc(), method, TlrSettings{cfg.block_size, cfg.trunc_tol});
    write_loglik_json(ll_out, *cfg.alpha, est, model.size(), cfg, ll_path);
  } else if (fa->parsed()) {
    const RunConfig cfg = fa_flags.resolve();
    const Dataset data = read_training_csv(fa_train);
    write_alpha_fit_json(fa_out, estimate_alpha(data, cfg.grid, cfg), data.locs.size(), cfg);
  } else if (pr->parsed()) {
    const RunConfig cfg = pr_flags.resolve();
    Dataset data = read_training_csv(pr_train);
    data.holdout = read_holdout_csv(pr_holdout, data.locs.dim());
    const double alpha = resolve_alpha(data, cfg, std::cerr);
    const BatchResult result = predict_batch(data, alpha, cfg);
    write_predictions_csv(pr_predictions, result.predictions);
    write_metrics_json(pr_metrics, result.metrics);
    if (!pr_timing.empty()) write_timing_json(pr_timing, result.metrics);
  } else if (bm->parsed()) {
    RunConfig cfg = bm_flags.resolve();
    const Dataset data = simulate_dataset(bm_grid, bm_true_alpha, cfg.seed, HoldoutScheme::kRandom, bm_holdout);
    const double alpha = resolve_alpha(data, cfg, std::cerr);
    for (const Method m : {Method::kTlr, Method::kVb}) {
      cfg.method = m;
      const BatchResult result = predict_batch(data, alpha, cfg);
      write_metrics_json(bm_prefix + to_string(m) + "_metrics.json", result.metrics);
      write_timing_json(bm_prefix + to_string(m) + "_timing.json", result.metrics);
      std::cout << to_string(m) << ": n=" << result.metrics.n
                << " per_prediction_seconds=" << format_double(result.metrics.per_prediction_seconds) << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const probitgp::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}
