#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hst/cli.hpp"
#include "hst/io.hpp"

namespace {

using hst::ExperimentConfig;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitIo = 3;

hst::ThresholdSpec parse_policy_flag(const std::string& flag) {
  hst::ThresholdSpec spec;
  if (flag == "midpoint") {
    spec.policy = hst::ThresholdPolicy::midpoint;
  } else if (flag == "n1-balance") {
    spec.policy = hst::ThresholdPolicy::n1_balance;
  } else if (flag.rfind("fixed:", 0) == 0) {
    spec.policy = hst::ThresholdPolicy::fixed;
    spec.value = std::stod(flag.substr(6));
  } else {
    throw hst::InputError(
        "--threshold-policy must be midpoint, n1-balance or fixed:<T>");
  }
  return spec;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string policy_flag;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

ExperimentConfig resolve_config(const CommonFlags& flags) {
  ExperimentConfig cfg = hst::load_experiment_config(flags.config_path);
  if (flags.seed_set) {
    cfg.seed = flags.seed;
    cfg.sweep.seed = flags.seed;
  }
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (!flags.policy_flag.empty()) {
    cfg.threshold = parse_policy_flag(flags.policy_flag);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Score-based hypothesis testing and error-exponent toolkit"};
  app.require_subcommand(1);

  // check
  auto* check = app.add_subcommand(
      "check", "Verify a model file's analytic derivatives at probe points");
  std::string check_model;
  std::uint64_t check_seed = 1;
  int check_probes = 20;
  double check_tol = 1e-4;
  check->add_option("--model", check_model, "Model JSON file")->required();
  check->add_option("--seed", check_seed, "Probe seed");
  check->add_option("--probes", check_probes, "Number of probe points");
  check->add_option("--tol", check_tol, "Relative error tolerance");

  // shared experiment flags
  CommonFlags exp_flags, sweep_flags;
  auto add_common = [](CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Experiment config JSON")
        ->required();
    cmd->add_option("--out", flags.out_dir, "Output directory");
    cmd->add_option("--threshold-policy", flags.policy_flag,
                    "midpoint | n1-balance | fixed:<T>");
    auto* seed_opt = cmd->add_option("--seed", flags.seed, "Master seed");
    cmd->parse_complete_callback(
        [seed_opt, &flags] { flags.seed_set = seed_opt->count() > 0; });
  };

  auto* exponent = app.add_subcommand(
      "exponent", "Estimate type-I/II error exponents for a model pair");
  add_common(exponent, exp_flags);
  int exp_m = 0;
  exponent->add_option("--m", exp_m, "Monte Carlo sample count");

  auto* sweep = app.add_subcommand(
      "sweep", "Empirical error-rate sweep across sample sizes");
  add_common(sweep, sweep_flags);
  std::vector<int> sweep_n_list;
  int sweep_trials = 0, sweep_pool = 0, sweep_runs = 0, sweep_train_n = -1;
  sweep->add_option("--n-list", sweep_n_list, "Sample sizes")->delimiter(',');
  sweep->add_option("--trials", sweep_trials, "Trials per sample size");
  sweep->add_option("--pool-size", sweep_pool, "Pool size per hypothesis");
  sweep->add_option("--runs", sweep_runs, "Independent runs");
  sweep->add_option("--train-n", sweep_train_n,
                    "Training-set size recorded in metadata");

  auto* train = app.add_subcommand("train-rbm",
                                   "Fit an RBM by score matching");
  hst::TrainOptions train_opts;
  std::string train_out;
  train->add_option("--data", train_opts.data_path, "Sample-dump CSV")
      ->required();
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--d-h", train_opts.hidden_dim, "Hidden units");
  train->add_option("--epochs", train_opts.train.epochs, "Epochs");
  train->add_option("--batch", train_opts.train.batch_size, "Batch size");
  train->add_option("--lr", train_opts.train.learning_rate, "Learning rate");
  train->add_option("--train-n", train_opts.train.sample_count,
                    "Subsample this many training rows (0 = all)");
  train->add_option("--cold-start", train_opts.cold_start_path,
                    "Initialize from this RBM model file");
  train->add_option("--seed", train_opts.seed, "Seed");

  auto* ingest = app.add_subcommand(
      "ingest", "Partition a labeled CSV into hypothesis splits");
  hst::IngestOptions ingest_opts;
  std::string ingest_out;
  ingest->add_option("--data", ingest_opts.data_path, "Input CSV")->required();
  ingest->add_option("--schema", ingest_opts.schema_path, "Schema JSON")
      ->required();
  ingest->add_option("--out", ingest_out, "Output directory")->required();
  ingest->add_option("--null-label", ingest_opts.null_label,
                     "Label treated as the null hypothesis");
  ingest->add_option("--named-attacks", ingest_opts.named_attacks,
                     "Labels given their own split")
      ->delimiter(',');
  ingest->add_option("--unknown-max", ingest_opts.unknown_max_count,
                     "Max rows for a label to pool into the unknown split");
  ingest->add_flag("!--no-null-stats", ingest_opts.stats_from_null,
                   "Standardize with whole-dataset stats instead of null-only");

  auto* perturb = app.add_subcommand(
      "perturb", "Write a perturbed copy of a model file");
  std::string perturb_model, perturb_target, perturb_out;
  double perturb_sigma = 0.01;
  std::uint64_t perturb_seed = 1;
  perturb->add_option("--model", perturb_model, "Model JSON file")->required();
  perturb->add_option("--target", perturb_target, "mean | cov | rbm_w | tau")
      ->required();
  perturb->add_option("--out", perturb_out, "Output directory")->required();
  perturb->add_option("--sigma-ptb", perturb_sigma, "Perturbation scale");
  perturb->add_option("--seed", perturb_seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) {
      const hst::ModelSpec spec = hst::load_model_spec(check_model);
      const hst::CheckReport report =
          hst::run_check(spec, check_seed, check_probes, check_tol);
      std::cout << "probes: " << report.probes.size()
                << "\nmax_rel_error_grad: " << report.max_rel_error_grad
                << "\nmax_rel_error_laplacian: "
                << report.max_rel_error_laplacian << "\nresult: "
                << (report.pass ? "pass" : "fail") << std::endl;
      return report.pass ? kExitOk : kExitNumeric;
    }
    if (exponent->parsed()) {
      ExperimentConfig cfg = resolve_config(exp_flags);
      if (exp_m > 0) cfg.m = exp_m;
      const nlohmann::json report = hst::run_exponent(cfg);
      if (cfg.out_dir.empty()) std::cout << report.dump(2) << std::endl;
      return kExitOk;
    }
    if (sweep->parsed()) {
      ExperimentConfig cfg = resolve_config(sweep_flags);
      if (!sweep_n_list.empty()) cfg.sweep.n_list = sweep_n_list;
      if (sweep_trials > 0) cfg.sweep.trials_per_n = sweep_trials;
      if (sweep_pool > 0) cfg.sweep.pool_size = sweep_pool;
      if (sweep_runs > 0) cfg.sweep.runs = sweep_runs;
      if (sweep_train_n >= 0) cfg.train_n = sweep_train_n;
      const hst::SweepOutput out = hst::run_sweep(cfg);
      if (cfg.out_dir.empty()) std::cout << out.table.to_csv();
      return kExitOk;
    }
    if (train->parsed()) {
      const hst::TrainOutput out = hst::run_train_rbm(train_opts);
      hst::write_train_output(out, train_out);
      std::cout << "initial objective: " << out.curve.front()
                << "\nfinal objective: " << out.curve.back() << std::endl;
      return kExitOk;
    }
    if (ingest->parsed()) {
      const hst::IngestOutput out = hst::run_ingest(ingest_opts);
      hst::write_ingest_output(out, ingest_out);
      std::cout << out.report.dump(2) << std::endl;
      return kExitOk;
    }
    if (perturb->parsed()) {
      const hst::ModelSpec spec = hst::load_model_spec(perturb_model);
      hst::ExperimentConfig cfg;
      cfg.seed = perturb_seed;
      cfg.null_model = spec;
      cfg.alt_perturb = hst::PerturbSpec{perturb_target, perturb_sigma};
      const hst::ModelSpec out = hst::resolve_alt_model(cfg);
      std::filesystem::create_directories(perturb_out);
      hst::save_model_spec(out, perturb_out + "/perturbed.json");
      return kExitOk;
    }
  } catch (const hst::InputError& e) {
    std::cerr << "validation error: " << e.what() << std::endl;
    return kExitValidation;
  } catch (const hst::CapabilityError& e) {
    std::cerr << "validation error: " << e.what() << std::endl;
    return kExitValidation;
  } catch (const hst::IoError& e) {
    std::cerr << "io error: " << e.what() << std::endl;
    return kExitIo;
  } catch (const hst::TrainingError& e) {
    std::cerr << "training error: " << e.what() << std::endl;
    return kExitNumeric;
  } catch (const hst::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << std::endl;
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitNumeric;
  }
  return kExitOk;
}
