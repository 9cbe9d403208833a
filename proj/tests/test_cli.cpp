#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "hst/cli.hpp"
#include "hst/io.hpp"
#include "support.hpp"

using namespace hst;

namespace {

std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "hst_cli_tests" / name;
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string gaussian_pair_config(int m, const std::string& extra = "") {
  return std::string(R"({
    "seed": 21,
    "null_model": {"type": "gaussian", "mean": [0, 0],
                   "cov": [[1, 0], [0, 1]]},
    "alt_model": {"type": "gaussian", "mean": [1, 0],
                  "cov": [[1, 0], [0, 1]]},
    "threshold": {"policy": "fixed", "value": 0.0},
    "m": )") + std::to_string(m) + extra + "}";
}

}  // namespace

TEST_CASE("experiment config parsing and overrides") {
  const ExperimentConfig cfg = parse_experiment_config(gaussian_pair_config(
      5000, R"(, "sweep": {"n_list": [1, 2], "trials_per_n": 50,
                "pool_size": 100, "runs": 2})"));
  CHECK(cfg.seed == 21);
  CHECK(cfg.m == 5000);
  CHECK(cfg.threshold.policy == ThresholdPolicy::fixed);
  CHECK(cfg.sweep.n_list == std::vector<int>{1, 2});
  CHECK(cfg.sweep.runs == 2);
  CHECK(spec_type_name(cfg.null_model) == "gaussian");

  CHECK_THROWS_AS(parse_experiment_config("{}"), InputError);
  CHECK_THROWS_AS(parse_experiment_config("nope"), InputError);
  CHECK_THROWS_AS(
      parse_experiment_config(
          R"({"null_model": {"type": "gaussian", "mean": [0],
              "cov": [[1]]}, "pools": {"source": "weird"}})"),
      InputError);
}

TEST_CASE("alternative resolution by perturbation is seeded") {
  ExperimentConfig cfg = parse_experiment_config(R"({
    "seed": 5,
    "null_model": {"type": "gaussian", "mean": [0, 0],
                   "cov": [[1, 0.7], [0.7, 1]]},
    "alt_model": {"perturb": {"target": "mean", "sigma_ptb": 0.01}}
  })");
  const ModelSpec a = resolve_alt_model(cfg);
  const ModelSpec b = resolve_alt_model(cfg);
  CHECK(std::get<GaussianParams>(a).mean() ==
        std::get<GaussianParams>(b).mean());
  CHECK((std::get<GaussianParams>(a).mean() -
         std::get<GaussianParams>(cfg.null_model).mean())
            .norm() > 0.0);

  cfg.alt_perturb = PerturbSpec{"rbm_w", 0.01};
  cfg.alt_model.reset();
  CHECK_THROWS_AS(resolve_alt_model(cfg), InputError);
}

TEST_CASE("derivative check command on the bundled models") {
  for (const char* name :
       {"gaussian_example.json", "quartic_example.json", "rbm_example.json"}) {
    const CheckReport report =
        run_check(load_model_spec(testsupport::fixture(name)), 7);
    CAPTURE(name);
    CHECK(report.pass);
    CHECK(report.probes.size() == 20);
  }
  CHECK_THROWS_AS(load_model_spec(testsupport::fixture("rbm_bad_shape.json")),
                  InputError);
}

TEST_CASE("exponent command on a gaussian pair") {
  ExperimentConfig cfg = parse_experiment_config(gaussian_pair_config(200000));
  const nlohmann::json report = run_exponent(cfg);

  CHECK(report.at("m") == 200000);
  CHECK(report.at("seed") == 21);
  CHECK(report.at("threshold").at("value") == 0.0);
  CHECK(report.at("closed_form").at("type1") == doctest::Approx(0.125));
  CHECK(report.at("closed_form").at("type2") == doctest::Approx(0.125));
  const double type1 = report.at("type1").at("exponent").get<double>();
  CHECK(type1 == doctest::Approx(0.125).epsilon(0.1));
  CHECK(report.at("type1").at("error_kind") == "type1");
  CHECK(report.at("threshold_range").at("lo").get<double>() < 0.0);
  CHECK(report.at("threshold_range").at("hi").get<double>() > 0.0);
  CHECK(report.contains("config"));
  CHECK_FALSE(report.at("closed_form").contains("type1_neghalf_stat"));

  cfg.report_neghalf_closed_form = true;
  const nlohmann::json with_alt = run_exponent(cfg);
  CHECK(with_alt.at("closed_form").contains("type1_neghalf_stat"));
}

TEST_CASE("exponent command flags identical models as degenerate") {
  ExperimentConfig cfg = parse_experiment_config(R"({
    "seed": 3,
    "null_model": {"type": "gaussian", "mean": [0, 0],
                   "cov": [[1, 0], [0, 1]]},
    "alt_model": {"type": "gaussian", "mean": [0, 0],
                  "cov": [[1, 0], [0, 1]]},
    "threshold": {"policy": "fixed", "value": 0.0},
    "m": 2000
  })");
  const nlohmann::json report = run_exponent(cfg);
  CHECK(report.at("threshold_range").at("degenerate") == true);
  CHECK(report.at("type1").at("exponent") == doctest::Approx(0.0));
  CHECK(report.at("type2").at("exponent") == doctest::Approx(0.0));
}

TEST_CASE("sweep command determinism and metadata") {
  const std::string out_a = temp_dir("sweep_a");
  const std::string out_b = temp_dir("sweep_b");
  ExperimentConfig cfg = parse_experiment_config(gaussian_pair_config(
      0, R"(, "sweep": {"n_list": [1, 4, 16], "trials_per_n": 400,
             "pool_size": 500, "runs": 3})"));
  cfg.out_dir = out_a;
  const SweepOutput a = run_sweep(cfg);
  cfg.out_dir = out_b;
  const SweepOutput b = run_sweep(cfg);

  CHECK(read_text_file(out_a + "/sweep.csv") ==
        read_text_file(out_b + "/sweep.csv"));
  CHECK(read_text_file(out_a + "/sweep_meta.json") ==
        read_text_file(out_b + "/sweep_meta.json"));
  CHECK(a.table.rows.size() == 9);
  CHECK(a.metadata.at("thresholds").size() == 3);
  CHECK(a.metadata.at("smoothing") == "add_one");
  CHECK(a.metadata.at("config").at("seed") == 21);
  // distinct run labels
  CHECK(a.table.rows.front().run == 0);
  CHECK(a.table.rows.back().run == 2);
  // fresh pools per run give distinct thresholds under the fixed policy? no:
  // fixed policy pins them
  for (const auto& t : a.metadata.at("thresholds")) {
    CHECK(t.get<double>() == 0.0);
  }
}

TEST_CASE("sweep with file pools and train_n metadata") {
  const std::string dir = temp_dir("file_pools");
  const GaussianParams null_p(Eigen::VectorXd::Zero(2),
                              Eigen::MatrixXd::Identity(2, 2));
  Eigen::VectorXd mu(2);
  mu << 1.0, 0.0;
  const GaussianParams alt_p(mu, Eigen::MatrixXd::Identity(2, 2));
  write_samples_csv(dir + "/null.csv", sample_gaussian_exact(null_p, 400, 71));
  write_samples_csv(dir + "/alt.csv", sample_gaussian_exact(alt_p, 400, 72));

  ExperimentConfig cfg = parse_experiment_config(std::string(R"({
    "seed": 9,
    "null_model": {"type": "gaussian", "mean": [0, 0],
                   "cov": [[1, 0], [0, 1]]},
    "alt_model": {"type": "gaussian", "mean": [1, 0],
                  "cov": [[1, 0], [0, 1]]},
    "threshold": {"policy": "midpoint"},
    "train_n": 10,
    "pools": {"source": "file", "null": ")") + dir + R"(/null.csv",
              "alt": ")" + dir + R"(/alt.csv"},
    "sweep": {"n_list": [1, 2], "trials_per_n": 100, "pool_size": 1000,
              "runs": 2}
  })");
  const SweepOutput out = run_sweep(cfg);
  CHECK(out.metadata.at("pool_size") == 400);  // clamped to the file size
  CHECK(out.metadata.at("train_n") == 10);
  CHECK(out.table.rows.size() == 4);
  // midpoint threshold of the symmetric pair sits near zero
  CHECK(std::abs(out.metadata.at("thresholds")[0].get<double>()) <= 0.1);
}

TEST_CASE("train command fits the fixture rbm data") {
  const std::string dir = temp_dir("train");
  const auto rbm = std::get<RbmParams>(
      load_model_spec(testsupport::fixture("rbm_example.json")));
  // n=200, d=3-style fixture data: draw from a 4-visible rbm
  const Eigen::MatrixXd data = [&] {
    ChainConfig cfg = ChainConfig::gibbs_defaults(73);
    return rbm_gibbs_chain(rbm, rbm.b, cfg, 200);
  }();
  write_samples_csv(dir + "/data.csv", data);

  TrainOptions opts;
  opts.data_path = dir + "/data.csv";
  opts.hidden_dim = 2;
  opts.train.epochs = 15;
  opts.train.batch_size = 32;
  opts.train.learning_rate = 1e-3;
  opts.seed = 74;
  const TrainOutput out = run_train_rbm(opts);
  CHECK(out.params.W.allFinite());
  CHECK(out.params.hidden_dim() == 2);
  CHECK(out.curve.size() == 16);
  CHECK(out.curve.back() <= out.curve.front() + 1e-9);

  write_train_output(out, dir);
  CHECK(std::filesystem::exists(dir + "/rbm.json"));
  CHECK(std::filesystem::exists(dir + "/loss.csv"));
  const std::string loss = read_text_file(dir + "/loss.csv");
  CHECK(loss.rfind("epoch,objective\n", 0) == 0);

  // cold start initializes from the stored model exactly
  TrainOptions cold = opts;
  cold.cold_start_path = testsupport::fixture("rbm_example.json");
  cold.train.epochs = 1;
  const TrainOutput cold_out = run_train_rbm(cold);
  CHECK(cold_out.curve.front() ==
        doctest::Approx(sm_objective(rbm, data)).epsilon(1e-12));

  // train_n subsampling is deterministic in the seed
  TrainOptions sub = opts;
  sub.train.sample_count = 50;
  const TrainOutput s1 = run_train_rbm(sub);
  const TrainOutput s2 = run_train_rbm(sub);
  CHECK(s1.params.W == s2.params.W);
  CHECK(s1.metadata.at("train_n") == 50);
}

TEST_CASE("ingest command splits and standardizes the synthetic fixture") {
  const std::string dir = temp_dir("ingest");
  IngestOptions opts;
  opts.data_path = testsupport::fixture("traffic_synth.csv");
  opts.schema_path = testsupport::fixture("traffic_synth_schema.json");
  opts.null_label = "normal";
  opts.named_attacks = {"back", "ipsweep", "neptune"};
  const IngestOutput out = run_ingest(opts);
  write_ingest_output(out, dir);

  CHECK(out.report.at("null_rows") == 320);
  CHECK(out.report.at("attack_rows").at("back") == 60);
  CHECK(out.report.at("unknown_rows") == 30);

  const Eigen::MatrixXd null_split = read_samples_csv(dir + "/null.csv");
  CHECK(null_split.rows() == 320);
  CHECK(null_split.cols() == 3);
  // null-only standardization: the null split is centered, attacks are not
  for (Eigen::Index j = 0; j < 3; ++j) {
    CHECK(std::abs(null_split.col(j).mean()) <= 1e-10);
  }
  const Eigen::MatrixXd back = read_samples_csv(dir + "/attack_back.csv");
  CHECK(back.rows() == 60);
  CHECK(back.col(0).mean() > 0.5);
  CHECK(std::filesystem::exists(dir + "/standardization.json"));
  CHECK(std::filesystem::exists(dir + "/unknown.csv"));
}
