#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hst/data.hpp"
#include "hst/models.hpp"
#include "hst/samplers.hpp"
#include "hst/testing.hpp"
#include "hst/train.hpp"

namespace hst {

/// How to draw samples from a model. "auto" picks the conventional sampler
/// per family: exact for Gaussian, HMC for the quartic family, Gibbs for
/// RBMs. With tune set, MALA/HMC step sizes are adapted by a pre-run.
struct SamplerSpec {
  std::string kind = "auto";  // auto | exact | mala | hmc | gibbs
  int burn_in = -1;           // -1: per-sampler default
  int thinning = 1;
  double step = 0.0;  // 0: tune (mala/hmc) or default
  int leapfrog_steps = 20;
  bool tune = true;
};

struct ThresholdSpec {
  ThresholdPolicy policy = ThresholdPolicy::midpoint;
  double value = 0.0;
};

/// Alternative model source: explicit spec, or a perturbation of the null.
struct PerturbSpec {
  std::string target;  // mean | cov | rbm_w
  double sigma_ptb = 0.01;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir;
  ModelSpec null_model;
  std::optional<ModelSpec> alt_model;
  std::optional<PerturbSpec> alt_perturb;
  SamplerSpec sampler;
  int m = 0;  // 0: family default (1e6 exact Gaussian, 1e5 MCMC)
  ThresholdSpec threshold;
  SweepConfig sweep;
  struct Pools {
    std::string source = "sampler";  // sampler | file
    std::string null_path;
    std::string alt_path;
  } pools;
  int train_n = 0;  // recorded in sweep metadata when positive
  bool report_neghalf_closed_form = false;

  /// The fully resolved configuration, embedded in every output artifact.
  nlohmann::json resolved() const;
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& json_text);

/// Resolves the alternative model: explicit spec wins, otherwise the
/// configured perturbation of the null (seeded from the master seed).
ModelSpec resolve_alt_model(const ExperimentConfig& cfg);

/// Draws n points from the model with the configured sampler; deterministic
/// in (seed, stream_tag).
Eigen::MatrixXd draw_samples(const ModelSpec& spec, const SamplerSpec& sampler,
                             int n, std::uint64_t seed,
                             std::uint64_t stream_tag);

struct CheckReport {
  std::vector<DerivativeReport> probes;
  double max_rel_error_grad = 0.0;
  double max_rel_error_laplacian = 0.0;
  bool pass = false;
};

/// Derivative verification at random probe points around the model's mode
/// proxy; passes at 1e-4 relative.
CheckReport run_check(const ModelSpec& spec, std::uint64_t seed,
                      int probes = 20, double tol = 1e-4);

/// Samples both hypotheses, builds difference pools, and reports type-I/II
/// exponents, the admissible threshold interval, and (for equal-covariance
/// Gaussian pairs) the closed forms.
nlohmann::json run_exponent(const ExperimentConfig& cfg);

struct SweepOutput {
  ErrorSweepTable table;
  nlohmann::json metadata;
};

/// Error-rate sweep across sample sizes. Pool source "sampler" draws fresh
/// pools per run; "file" reuses the given sample dumps for every run. The
/// threshold policy is applied per run on that run's pools.
SweepOutput run_sweep(const ExperimentConfig& cfg);

struct TrainOptions {
  std::string data_path;
  int hidden_dim = 2;
  TrainConfig train;
  std::string cold_start_path;  // optional null-model file
  std::uint64_t seed = 0;
};

struct TrainOutput {
  RbmParams params;
  std::vector<double> curve;
  nlohmann::json metadata;
};

TrainOutput run_train_rbm(const TrainOptions& opts);

struct IngestOptions {
  std::string data_path;
  std::string schema_path;
  std::string null_label = "normal";
  std::vector<std::string> named_attacks;
  long unknown_max_count = 100;
  bool stats_from_null = true;
};

struct IngestOutput {
  Partition partition;
  nlohmann::json report;
};

IngestOutput run_ingest(const IngestOptions& opts);

/// Writers used by the CLI; exposed so pipelines can reuse them.
void write_sweep_output(const SweepOutput& out, const std::string& dir);
void write_train_output(const TrainOutput& out, const std::string& dir);
void write_ingest_output(const IngestOutput& out, const std::string& dir);

}  // namespace hst
