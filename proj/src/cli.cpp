#include "hst/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "hst/io.hpp"
#include "hst/rng.hpp"

namespace hst {

namespace {

using nlohmann::json;

ModelSpec parse_model_ref(const json& j, const char* which) {
  if (j.is_object() && j.contains("file")) {
    return load_model_spec(j.at("file").get<std::string>());
  }
  if (j.is_object() && j.contains("type")) {
    return parse_model_spec(j.dump());
  }
  throw InputError(std::string("config: ") + which +
                   " must be a model object or {\"file\": path}");
}

ThresholdPolicy policy_from_string(const std::string& s) {
  if (s == "midpoint") return ThresholdPolicy::midpoint;
  if (s == "n1-balance") return ThresholdPolicy::n1_balance;
  if (s == "fixed") return ThresholdPolicy::fixed;
  throw InputError("config: unknown threshold policy \"" + s + "\"");
}

const char* policy_to_string(ThresholdPolicy p) {
  switch (p) {
    case ThresholdPolicy::midpoint:
      return "midpoint";
    case ThresholdPolicy::n1_balance:
      return "n1-balance";
    case ThresholdPolicy::fixed:
      return "fixed";
  }
  return "?";
}

Eigen::VectorXd mode_proxy(const ModelSpec& spec) {
  if (const auto* g = std::get_if<GaussianParams>(&spec)) return g->mean();
  if (const auto* r = std::get_if<RbmParams>(&spec)) return r->b;
  return Eigen::VectorXd::Zero(spec_dimension(spec));
}

bool is_gaussian_pair_equal_cov(const ModelSpec& null_spec,
                                const ModelSpec& alt_spec) {
  const auto* g0 = std::get_if<GaussianParams>(&null_spec);
  const auto* g1 = std::get_if<GaussianParams>(&alt_spec);
  if (!g0 || !g1 || g0->dim() != g1->dim()) return false;
  return (g0->cov() - g1->cov()).cwiseAbs().maxCoeff() <= 1e-12;
}

json exponent_result_json(const ExponentResult& r, Eigen::Index m) {
  return json::parse(r.to_json(m));
}

}  // namespace

json ExperimentConfig::resolved() const {
  json j;
  j["seed"] = seed;
  j["null_model"] = json::parse(model_spec_to_json(null_model));
  j["alt_model"] = json::parse(model_spec_to_json(resolve_alt_model(*this)));
  j["sampler"] = {{"kind", sampler.kind},
                  {"burn_in", sampler.burn_in},
                  {"thinning", sampler.thinning},
                  {"step", sampler.step},
                  {"leapfrog", sampler.leapfrog_steps},
                  {"tune", sampler.tune}};
  j["m"] = m;
  j["threshold"] = {{"policy", policy_to_string(threshold.policy)},
                    {"value", threshold.value}};
  j["sweep"] = {{"n_list", sweep.n_list},
                {"trials_per_n", sweep.trials_per_n},
                {"pool_size", sweep.pool_size},
                {"runs", sweep.runs}};
  j["pools"] = {{"source", pools.source},
                {"null", pools.null_path},
                {"alt", pools.alt_path}};
  if (train_n > 0) j["train_n"] = train_n;
  return j;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("null_model")) {
    throw InputError("config: missing \"null_model\"");
  }

  ExperimentConfig cfg;
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.out_dir = j.value("out", std::string{});
  cfg.null_model = parse_model_ref(j.at("null_model"), "null_model");

  if (j.contains("alt_model")) {
    const json& a = j.at("alt_model");
    if (a.is_object() && a.contains("perturb")) {
      PerturbSpec p;
      p.target = a.at("perturb").at("target").get<std::string>();
      p.sigma_ptb = a.at("perturb").value("sigma_ptb", 0.01);
      cfg.alt_perturb = p;
    } else {
      cfg.alt_model = parse_model_ref(a, "alt_model");
    }
  }

  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    cfg.sampler.kind = s.value("kind", std::string("auto"));
    cfg.sampler.burn_in = s.value("burn_in", -1);
    cfg.sampler.thinning = s.value("thinning", 1);
    cfg.sampler.step = s.value("step", 0.0);
    cfg.sampler.leapfrog_steps = s.value("leapfrog", 20);
    cfg.sampler.tune = s.value("tune", true);
  }

  cfg.m = j.value("m", 0);

  if (j.contains("threshold")) {
    const json& t = j.at("threshold");
    cfg.threshold.policy =
        policy_from_string(t.value("policy", std::string("midpoint")));
    cfg.threshold.value = t.value("value", 0.0);
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (s.contains("n_list")) {
      cfg.sweep.n_list = s.at("n_list").get<std::vector<int>>();
    }
    cfg.sweep.trials_per_n = s.value("trials_per_n", cfg.sweep.trials_per_n);
    cfg.sweep.pool_size = s.value("pool_size", cfg.sweep.pool_size);
    cfg.sweep.runs = s.value("runs", cfg.sweep.runs);
  }
  cfg.sweep.seed = cfg.seed;

  if (j.contains("pools")) {
    const json& p = j.at("pools");
    cfg.pools.source = p.value("source", std::string("sampler"));
    cfg.pools.null_path = p.value("null", std::string{});
    cfg.pools.alt_path = p.value("alt", std::string{});
    if (cfg.pools.source != "sampler" && cfg.pools.source != "file") {
      throw InputError("config: pools.source must be \"sampler\" or \"file\"");
    }
  }

  cfg.train_n = j.value("train_n", 0);
  cfg.report_neghalf_closed_form = j.value("report_neghalf_closed_form", false);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_text_file(path));
}

ModelSpec resolve_alt_model(const ExperimentConfig& cfg) {
  if (cfg.alt_model.has_value()) return *cfg.alt_model;
  if (!cfg.alt_perturb.has_value()) {
    throw InputError("config: no alternative model or perturbation given");
  }
  const PerturbSpec& p = *cfg.alt_perturb;
  const std::uint64_t seed = substream_seed(cfg.seed, {0xa17eu});
  if (p.target == "mean") {
    const auto* g = std::get_if<GaussianParams>(&cfg.null_model);
    if (!g) throw InputError("perturb target \"mean\" needs a gaussian null");
    return perturb_gaussian_mean(*g, p.sigma_ptb, seed);
  }
  if (p.target == "cov") {
    const auto* g = std::get_if<GaussianParams>(&cfg.null_model);
    if (!g) throw InputError("perturb target \"cov\" needs a gaussian null");
    return perturb_gaussian_cov_diag(*g, p.sigma_ptb, seed);
  }
  if (p.target == "rbm_w") {
    const auto* r = std::get_if<RbmParams>(&cfg.null_model);
    if (!r) throw InputError("perturb target \"rbm_w\" needs an rbm null");
    return perturb_rbm_weights(*r, p.sigma_ptb, seed);
  }
  if (p.target == "tau") {
    const auto* q = std::get_if<QuarticParams>(&cfg.null_model);
    if (!q) throw InputError("perturb target \"tau\" needs a quartic null");
    return QuarticParams(q->tau + p.sigma_ptb, q->dim);
  }
  throw InputError("config: unknown perturb target \"" + p.target + "\"");
}

Eigen::MatrixXd draw_samples(const ModelSpec& spec, const SamplerSpec& sampler,
                             int n, std::uint64_t seed,
                             std::uint64_t stream_tag) {
  std::string kind = sampler.kind;
  if (kind == "auto") {
    if (std::holds_alternative<GaussianParams>(spec)) {
      kind = "exact";
    } else if (std::holds_alternative<QuarticParams>(spec)) {
      kind = "hmc";
    } else {
      kind = "gibbs";
    }
  }
  const std::uint64_t stream = substream_seed(seed, {0xd4a1u, stream_tag});

  if (kind == "exact") {
    const auto* g = std::get_if<GaussianParams>(&spec);
    if (!g) throw InputError("sampler \"exact\" supports gaussian models only");
    return sample_gaussian_exact(*g, n, stream);
  }
  if (kind == "gibbs") {
    const auto* r = std::get_if<RbmParams>(&spec);
    if (!r) throw InputError("sampler \"gibbs\" supports rbm models only");
    ChainConfig cfg = ChainConfig::gibbs_defaults(stream);
    if (sampler.burn_in >= 0) cfg.burn_in = sampler.burn_in;
    cfg.thinning = sampler.thinning;
    return rbm_gibbs_chain(*r, r->b, cfg, n);
  }

  const ScoreModel model = spec_to_model(spec);
  const Eigen::VectorXd init = mode_proxy(spec);
  ChainConfig cfg;
  cfg.burn_in = sampler.burn_in >= 0 ? sampler.burn_in : 5000;
  cfg.thinning = sampler.thinning;
  cfg.leapfrog_steps = sampler.leapfrog_steps;
  cfg.seed = stream;

  if (kind == "mala") {
    cfg.step = sampler.step > 0.0 ? sampler.step : 0.5;
    if (sampler.step <= 0.0 && sampler.tune) {
      cfg.step = tune_mala_step(model, init,
                                substream_seed(stream, {0x701eu}), cfg.step);
    }
    return mala_chain(model, init, cfg, n).samples;
  }
  if (kind == "hmc") {
    cfg.step = sampler.step > 0.0 ? sampler.step : 0.1;
    if (sampler.step <= 0.0 && sampler.tune) {
      cfg.step = tune_hmc_step(model, init, substream_seed(stream, {0x701eu}),
                               cfg.step, cfg.leapfrog_steps);
    }
    return hmc_chain(model, init, cfg, n).samples;
  }
  throw InputError("config: unknown sampler kind \"" + sampler.kind + "\"");
}

CheckReport run_check(const ModelSpec& spec, std::uint64_t seed, int probes,
                      double tol) {
  const ScoreModel model = spec_to_model(spec);
  const Eigen::VectorXd center = mode_proxy(spec);
  std::mt19937_64 rng = make_engine(seed, {0xc8ecu});
  std::normal_distribution<double> normal(0.0, 1.0);

  CheckReport report;
  for (int p = 0; p < probes; ++p) {
    Eigen::VectorXd x = center;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += normal(rng);
    const DerivativeReport r = check_model_derivatives(model, x);
    report.max_rel_error_grad =
        std::max(report.max_rel_error_grad, r.max_rel_error_grad);
    report.max_rel_error_laplacian =
        std::max(report.max_rel_error_laplacian, r.max_rel_error_laplacian);
    report.probes.push_back(r);
  }
  report.pass = report.max_rel_error_grad <= tol &&
                report.max_rel_error_laplacian <= tol;
  return report;
}

namespace {

int default_m(const ExperimentConfig& cfg, const ModelSpec& alt) {
  if (cfg.m > 0) return cfg.m;
  const bool exact = (cfg.sampler.kind == "exact") ||
                     (cfg.sampler.kind == "auto" &&
                      std::holds_alternative<GaussianParams>(cfg.null_model) &&
                      std::holds_alternative<GaussianParams>(alt));
  return exact ? 1000000 : 100000;
}

}  // namespace

json run_exponent(const ExperimentConfig& cfg) {
  const ModelSpec alt_spec = resolve_alt_model(cfg);
  const ScoreModel null_model = spec_to_model(cfg.null_model);
  const ScoreModel alt_model = spec_to_model(alt_spec);
  const int m = default_m(cfg, alt_spec);

  const Eigen::MatrixXd null_samples =
      draw_samples(cfg.null_model, cfg.sampler, m, cfg.seed, 1);
  const Eigen::MatrixXd alt_samples =
      draw_samples(alt_spec, cfg.sampler, m, cfg.seed, 2);

  const DifferenceSample null_diffs = score_differences(
      null_model, alt_model, null_samples, Hypothesis::null_hypothesis);
  const DifferenceSample alt_diffs = score_differences(
      null_model, alt_model, alt_samples, Hypothesis::alternative);

  const ChosenThreshold thr = choose_threshold(
      null_diffs, alt_diffs, cfg.threshold.policy, cfg.threshold.value);
  const double T = thr.value;

  const ExponentResult type1 = type1_exponent_empirical(null_diffs, T);
  const DifferenceSample alt_flipped =
      DifferenceSample::make(-alt_diffs.values, Hypothesis::alternative);
  const ExponentResult type2 = type2_exponent_empirical(alt_flipped, T);
  const ThresholdRange range = threshold_range_from_diffs(null_diffs, alt_diffs);

  json report;
  report["seed"] = cfg.seed;
  report["m"] = m;
  report["threshold"] = {{"policy", policy_to_string(cfg.threshold.policy)},
                         {"value", T},
                         {"gap", thr.gap}};
  report["threshold_range"] = {
      {"lo", range.lo}, {"hi", range.hi}, {"degenerate", range.degenerate}};
  report["type1"] = exponent_result_json(type1, null_diffs.size());
  report["type2"] = exponent_result_json(type2, alt_diffs.size());

  if (is_gaussian_pair_equal_cov(cfg.null_model, alt_spec)) {
    const auto& g0 = std::get<GaussianParams>(cfg.null_model);
    const auto& g1 = std::get<GaussianParams>(alt_spec);
    json closed;
    closed["type1"] = gaussian_type1_exponent(g0, g1.mean(), T);
    closed["type2"] = gaussian_type2_exponent(g0, g1.mean(), T);
    closed["fisher_divergence"] = gaussian_fisher_divergence(g0, g1.mean());
    if (cfg.report_neghalf_closed_form) {
      closed["type1_neghalf_stat"] =
          gaussian_type1_exponent_neghalf_stat(g0, g1.mean(), T);
    }
    report["closed_form"] = closed;
  }
  report["config"] = cfg.resolved();

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_text_file(cfg.out_dir + "/exponent.json", report.dump(2) + "\n");
  }
  return report;
}

SweepOutput run_sweep(const ExperimentConfig& cfg) {
  cfg.sweep.validate();
  const ModelSpec alt_spec = resolve_alt_model(cfg);
  const ScoreModel null_model = spec_to_model(cfg.null_model);
  const ScoreModel alt_model = spec_to_model(alt_spec);

  SweepOutput out;
  json thresholds = json::array();
  json theo_closed = json::array();

  SweepConfig sweep = cfg.sweep;
  sweep.seed = cfg.seed;

  // File-backed pools are fixed across runs; sampled pools are fresh per
  // run (each run produces its own datasets).
  DifferenceSample file_null_diffs, file_alt_diffs;
  if (cfg.pools.source == "file") {
    if (cfg.pools.null_path.empty() || cfg.pools.alt_path.empty()) {
      throw InputError("config: pools.source=file requires null and alt paths");
    }
    const Eigen::MatrixXd null_pool = read_samples_csv(cfg.pools.null_path);
    const Eigen::MatrixXd alt_pool = read_samples_csv(cfg.pools.alt_path);
    sweep.pool_size = static_cast<int>(
        std::min<Eigen::Index>(sweep.pool_size,
                               std::min(null_pool.rows(), alt_pool.rows())));
    file_null_diffs = score_differences(null_model, alt_model, null_pool,
                                        Hypothesis::null_hypothesis);
    file_alt_diffs = score_differences(null_model, alt_model, alt_pool,
                                       Hypothesis::alternative);
  }

  for (int run = 0; run < cfg.sweep.runs; ++run) {
    DifferenceSample null_diffs, alt_diffs;
    if (cfg.pools.source == "file") {
      null_diffs = file_null_diffs;
      alt_diffs = file_alt_diffs;
    } else {
      const auto tag = static_cast<std::uint64_t>(run);
      const Eigen::MatrixXd null_pool =
          draw_samples(cfg.null_model, cfg.sampler, sweep.pool_size, cfg.seed,
                       0x100u + 2 * tag);
      const Eigen::MatrixXd alt_pool =
          draw_samples(alt_spec, cfg.sampler, sweep.pool_size, cfg.seed,
                       0x101u + 2 * tag);
      null_diffs = score_differences(null_model, alt_model, null_pool,
                                     Hypothesis::null_hypothesis);
      alt_diffs = score_differences(null_model, alt_model, alt_pool,
                                    Hypothesis::alternative);
    }

    const ChosenThreshold thr = choose_threshold(
        null_diffs, alt_diffs, cfg.threshold.policy, cfg.threshold.value);
    thresholds.push_back(thr.value);

    SweepConfig run_cfg = sweep;
    run_cfg.threshold = thr.value;
    run_cfg.runs = 1;
    const ErrorSweepTable rows =
        empirical_error_sweep_from_diffs(null_diffs, alt_diffs, run_cfg, run);
    out.table.rows.insert(out.table.rows.end(), rows.rows.begin(),
                          rows.rows.end());

    if (is_gaussian_pair_equal_cov(cfg.null_model, alt_spec)) {
      const auto& g0 = std::get<GaussianParams>(cfg.null_model);
      const auto& g1 = std::get<GaussianParams>(alt_spec);
      theo_closed.push_back(
          json{{"type1", gaussian_type1_exponent(g0, g1.mean(), thr.value)},
               {"type2", gaussian_type2_exponent(g0, g1.mean(), thr.value)}});
    }
  }

  out.metadata["seed"] = cfg.seed;
  out.metadata["threshold_policy"] = policy_to_string(cfg.threshold.policy);
  out.metadata["thresholds"] = thresholds;
  out.metadata["pool_size"] = sweep.pool_size;
  out.metadata["trials_per_n"] = sweep.trials_per_n;
  out.metadata["n_list"] = sweep.n_list;
  out.metadata["runs"] = cfg.sweep.runs;
  out.metadata["smoothing"] = "add_one";
  if (cfg.train_n > 0) out.metadata["train_n"] = cfg.train_n;
  if (!theo_closed.empty()) out.metadata["closed_form"] = theo_closed;
  out.metadata["config"] = cfg.resolved();

  if (!cfg.out_dir.empty()) write_sweep_output(out, cfg.out_dir);
  return out;
}

TrainOutput run_train_rbm(const TrainOptions& opts) {
  const Eigen::MatrixXd data = read_samples_csv(opts.data_path);
  const int dx = static_cast<int>(data.cols());

  RbmParams init;
  if (!opts.cold_start_path.empty()) {
    const ModelSpec spec = load_model_spec(opts.cold_start_path);
    const auto* r = std::get_if<RbmParams>(&spec);
    if (!r) throw InputError("cold-start model must be an rbm");
    if (r->visible_dim() != dx) {
      throw InputError("cold-start model dimension does not match data");
    }
    init = *r;
  } else {
    std::mt19937_64 rng = make_engine(opts.seed, {0x11217u});
    std::normal_distribution<double> normal(0.0, 0.01);
    init.W.resize(dx, opts.hidden_dim);
    for (Eigen::Index r = 0; r < init.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < init.W.cols(); ++c) init.W(r, c) = normal(rng);
    }
    init.b = data.colwise().mean();
    init.c = Eigen::VectorXd::Zero(opts.hidden_dim);
  }

  TrainConfig train = opts.train;
  train.seed = opts.seed;
  const FitResult fit = score_matching_fit(data, init, train);

  TrainOutput out;
  out.params = fit.params;
  out.curve = fit.curve;
  out.metadata["seed"] = opts.seed;
  out.metadata["data"] = opts.data_path;
  out.metadata["rows"] = data.rows();
  out.metadata["hidden_dim"] = out.params.hidden_dim();
  out.metadata["epochs"] = train.epochs;
  out.metadata["batch_size"] = train.batch_size;
  out.metadata["learning_rate"] = train.learning_rate;
  out.metadata["train_n"] = train.sample_count;
  out.metadata["cold_start"] = opts.cold_start_path;
  out.metadata["initial_objective"] = fit.curve.front();
  out.metadata["final_objective"] = fit.curve.back();
  out.metadata["best_objective"] =
      *std::min_element(fit.curve.begin(), fit.curve.end());
  return out;
}

IngestOutput run_ingest(const IngestOptions& opts) {
  const CsvSchema schema = CsvSchema::load(opts.schema_path);
  const IngestResult ingest = ingest_csv(opts.data_path, schema);

  PartitionSpec pspec;
  pspec.named_attacks = opts.named_attacks;
  pspec.unknown_max_count = opts.unknown_max_count;

  IngestOutput out;
  json report;
  report["data"] = opts.data_path;
  report["rows"] = ingest.dataset.n();
  report["row_errors"] = json::array();
  for (const auto& e : ingest.row_errors) {
    report["row_errors"].push_back({{"row", e.row}, {"message", e.message}});
  }
  report["label_counts"] = json::object();
  for (const auto& [label, count] : ingest.label_counts) {
    report["label_counts"][label] = count;
  }

  if (opts.stats_from_null) {
    // The null model must not see attack data: fit the transform on the
    // null split, then apply it everywhere.
    Partition raw = partition_by_label(ingest.dataset, opts.null_label, pspec);
    const StandardizeResult null_std = standardize(raw.null_split);
    report["dropped_features"] = null_std.dropped_features;
    const Standardization stats = *null_std.dataset.stats;
    out.partition.null_split = null_std.dataset;
    for (const auto& [label, split] : raw.attacks) {
      out.partition.attacks.emplace(label, standardize(split, stats).dataset);
    }
    if (raw.unknown.n() > 0) {
      out.partition.unknown = standardize(raw.unknown, stats).dataset;
    }
    out.partition.dropped_labels = raw.dropped_labels;
  } else {
    const StandardizeResult all_std = standardize(ingest.dataset);
    report["dropped_features"] = all_std.dropped_features;
    out.partition =
        partition_by_label(all_std.dataset, opts.null_label, pspec);
  }

  report["null_label"] = opts.null_label;
  report["null_rows"] = out.partition.null_split.n();
  report["unknown_rows"] = out.partition.unknown.n();
  report["dropped_labels"] = out.partition.dropped_labels;
  json attack_rows = json::object();
  for (const auto& [label, split] : out.partition.attacks) {
    attack_rows[label] = split.n();
  }
  report["attack_rows"] = attack_rows;
  out.report = report;
  return out;
}

void write_sweep_output(const SweepOutput& out, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/sweep.csv", out.table.to_csv());
  write_text_file(dir + "/sweep_meta.json", out.metadata.dump(2) + "\n");
}

void write_train_output(const TrainOutput& out, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_model_spec(ModelSpec{out.params}, dir + "/rbm.json");
  std::string curve = "epoch,objective\n";
  char buf[64];
  for (std::size_t i = 0; i < out.curve.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, out.curve[i]);
    curve += buf;
  }
  write_text_file(dir + "/loss.csv", curve);
  write_text_file(dir + "/train_meta.json", out.metadata.dump(2) + "\n");
}

void write_ingest_output(const IngestOutput& out, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_samples_csv(dir + "/null.csv", out.partition.null_split.features);
  for (const auto& [label, split] : out.partition.attacks) {
    write_samples_csv(dir + "/attack_" + label + ".csv", split.features);
  }
  if (out.partition.unknown.n() > 0) {
    write_samples_csv(dir + "/unknown.csv", out.partition.unknown.features);
  }
  if (out.partition.null_split.stats.has_value()) {
    write_text_file(dir + "/standardization.json",
                    out.partition.null_split.stats->to_json() + "\n");
  }
  write_text_file(dir + "/ingest_report.json", out.report.dump(2) + "\n");
}

}  // namespace hst
