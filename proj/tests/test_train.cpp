#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "hst/rng.hpp"
#include "hst/samplers.hpp"
#include "hst/score.hpp"
#include "hst/train.hpp"
#include "support.hpp"

using namespace hst;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

RbmParams random_rbm(int dx, int dh, std::uint64_t seed, double scale = 0.4) {
  std::mt19937_64 rng = make_engine(seed, {0x1234u});
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd W(dx, dh);
  Eigen::VectorXd b(dx), c(dh);
  for (int i = 0; i < dx; ++i) {
    for (int j = 0; j < dh; ++j) W(i, j) = normal(rng);
  }
  for (int i = 0; i < dx; ++i) b[i] = normal(rng);
  for (int j = 0; j < dh; ++j) c[j] = normal(rng);
  return RbmParams(W, b, c);
}

Eigen::MatrixXd gibbs_data(const RbmParams& rbm, int n, std::uint64_t seed) {
  ChainConfig cfg = ChainConfig::gibbs_defaults(seed);
  return rbm_gibbs_chain(rbm, rbm.b, cfg, n);
}

/// Finite-difference gradient of sm_objective over every parameter entry.
RbmGradient fd_sm_gradient(const RbmParams& params, const Eigen::MatrixXd& batch,
                           double h) {
  RbmGradient g;
  g.dW.resize(params.W.rows(), params.W.cols());
  g.db.resize(params.b.size());
  g.dc.resize(params.c.size());
  RbmParams p = params;
  for (Eigen::Index i = 0; i < p.W.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.W.cols(); ++j) {
      p.W(i, j) = params.W(i, j) + h;
      const double up = sm_objective(p, batch);
      p.W(i, j) = params.W(i, j) - h;
      const double dn = sm_objective(p, batch);
      p.W(i, j) = params.W(i, j);
      g.dW(i, j) = (up - dn) / (2.0 * h);
    }
  }
  for (Eigen::Index i = 0; i < p.b.size(); ++i) {
    p.b[i] = params.b[i] + h;
    const double up = sm_objective(p, batch);
    p.b[i] = params.b[i] - h;
    const double dn = sm_objective(p, batch);
    p.b[i] = params.b[i];
    g.db[i] = (up - dn) / (2.0 * h);
  }
  for (Eigen::Index j = 0; j < p.c.size(); ++j) {
    p.c[j] = params.c[j] + h;
    const double up = sm_objective(p, batch);
    p.c[j] = params.c[j] - h;
    const double dn = sm_objective(p, batch);
    p.c[j] = params.c[j];
    g.dc[j] = (up - dn) / (2.0 * h);
  }
  return g;
}

double max_rel_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) /
                                  std::max(1.0, std::abs(b(i, j))));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("training objective ties to the generic score identity") {
  const RbmParams rbm = random_rbm(4, 3, 100);
  const Eigen::MatrixXd batch = gibbs_data(rbm, 64, 101);
  const ScoreModel model = rbm_model(rbm);

  double generic = 0.0;
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    generic += hyvarinen_score_point(model, batch.row(i).transpose());
  }
  generic /= static_cast<double>(batch.rows());
  CHECK(sm_objective(rbm, batch) == doctest::Approx(generic).epsilon(1e-12));

  Eigen::MatrixXd doubled(batch.rows() * 2, batch.cols());
  doubled << batch, batch;
  CHECK(sm_objective(rbm, doubled) ==
        doctest::Approx(sm_objective(rbm, batch)).epsilon(1e-13));
}

TEST_CASE("decoupled objective is minimized at the batch mean") {
  const Eigen::MatrixXd batch = gibbs_data(
      RbmParams(Eigen::MatrixXd::Zero(3, 2), vec({0.4, -0.2, 0.9}),
                Eigen::VectorXd::Zero(2)),
      512, 102);
  const Eigen::VectorXd mean = batch.colwise().mean();

  RbmParams probe(Eigen::MatrixXd::Zero(3, 2), mean, Eigen::VectorXd::Zero(2));
  const double at_mean = sm_objective(probe, batch);
  for (double delta : {-0.5, -0.1, 0.1, 0.5}) {
    probe.b = mean;
    probe.b[0] = mean[0] + delta;
    CHECK(sm_objective(probe, batch) > at_mean);
  }
}

TEST_CASE("analytic training gradient matches finite differences") {
  const RbmParams rbm = random_rbm(4, 3, 103);
  const Eigen::MatrixXd batch = gibbs_data(rbm, 32, 104);

  const RbmGradient got = sm_gradient(rbm, batch);
  const RbmGradient want = fd_sm_gradient(rbm, batch, 1e-5);
  CHECK(max_rel_gap(got.dW, want.dW) <= 1e-4);
  CHECK(max_rel_gap(got.db, want.db) <= 1e-4);
  CHECK(max_rel_gap(got.dc, want.dc) <= 1e-4);

  Eigen::MatrixXd doubled(batch.rows() * 2, batch.cols());
  doubled << batch, batch;
  const RbmGradient dup = sm_gradient(rbm, doubled);
  CHECK((dup.dW - got.dW).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((dup.db - got.db).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((dup.dc - got.dc).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("gradient component crosses zero at a 1-d scan minimum") {
  const RbmParams base = random_rbm(3, 2, 105);
  const Eigen::MatrixXd batch = gibbs_data(base, 128, 106);

  // scan the first visible bias around its optimum
  double best_value = std::numeric_limits<double>::infinity();
  double best_b = 0.0;
  RbmParams probe = base;
  for (double b0 = -2.0; b0 <= 2.0; b0 += 0.01) {
    probe.b[0] = b0;
    const double value = sm_objective(probe, batch);
    if (value < best_value) {
      best_value = value;
      best_b = b0;
    }
  }
  probe.b[0] = best_b - 0.05;
  const double grad_below = sm_gradient(probe, batch).db[0];
  probe.b[0] = best_b + 0.05;
  const double grad_above = sm_gradient(probe, batch).db[0];
  CHECK(grad_below < 0.0);
  CHECK(grad_above > 0.0);
}

TEST_CASE("fitting data drawn from the initial model moves little") {
  const RbmParams truth = random_rbm(3, 2, 107);
  const Eigen::MatrixXd data = gibbs_data(truth, 4000, 108);

  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 64;
  cfg.learning_rate = 1e-3;
  cfg.seed = 109;
  const FitResult fit = score_matching_fit(data, truth, cfg);
  CHECK(fit.curve.back() <= fit.curve.front() + 0.01 * std::abs(fit.curve.front()));
  CHECK(fit.params.W.allFinite());
}

TEST_CASE("fit objective decreases on synthetic data") {
  const RbmParams truth = random_rbm(3, 2, 110, 0.8);
  const Eigen::MatrixXd data = gibbs_data(truth, 2000, 111);

  // start away from the truth
  RbmParams init = truth;
  init.W.setZero();
  init.b.setZero();
  init.c.setZero();

  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 32;
  cfg.learning_rate = 5e-3;
  cfg.seed = 112;
  const FitResult fit = score_matching_fit(data, init, cfg);
  CHECK(fit.curve.size() == 31);
  // strict improvement over the first epochs
  for (int e = 1; e <= 10; ++e) {
    CHECK(fit.curve[e] < fit.curve[e - 1] + 1e-6);
  }
  CHECK(fit.curve.back() < fit.curve.front());

  const FitResult again = score_matching_fit(data, init, cfg);
  CHECK((fit.params.W - again.params.W).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("held-out objective improves with training-set size") {
  const RbmParams truth = random_rbm(3, 2, 113, 0.8);
  const Eigen::MatrixXd data = gibbs_data(truth, 3000, 114);
  const Eigen::MatrixXd held_out = gibbs_data(truth, 3000, 115);

  RbmParams init = truth;
  init.W.setZero();
  init.b.setZero();
  init.c.setZero();

  std::vector<double> held(3);
  const int sizes[3] = {10, 100, 1000};
  for (int k = 0; k < 3; ++k) {
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 10;
    cfg.learning_rate = 5e-3;
    cfg.seed = 116;
    cfg.sample_count = sizes[k];
    const FitResult fit = score_matching_fit(data, init, cfg);
    held[static_cast<std::size_t>(k)] = sm_objective(fit.params, held_out);
  }
  CHECK(held[1] <= held[0] + 0.05);
  CHECK(held[2] <= held[1] + 0.05);
  CHECK(held[2] <= held[0]);
}

TEST_CASE("population optimum: decoupled fit recovers the mean") {
  const Eigen::VectorXd target_b = vec({0.8, -0.5, 0.25});
  const Eigen::MatrixXd data = sample_gaussian_exact(
      GaussianParams(target_b, Eigen::MatrixXd::Identity(3, 3)), 100000, 117);

  RbmParams init(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3),
                 Eigen::VectorXd::Zero(2));
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 1000;
  cfg.learning_rate = 0.2;
  cfg.seed = 118;
  cfg.update_W = false;
  cfg.update_c = false;
  const FitResult fit = score_matching_fit(data, init, cfg);
  CHECK((fit.params.b - target_b).cwiseAbs().maxCoeff() <= 0.05);
  CHECK(fit.params.W.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("training divergence raises with the curve attached") {
  const RbmParams truth = random_rbm(3, 2, 119);
  const Eigen::MatrixXd data = gibbs_data(truth, 256, 120);
  RbmParams init = truth;
  init.W.array() += 2.0;

  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 16;
  cfg.learning_rate = 50.0;
  cfg.seed = 121;
  try {
    score_matching_fit(data, init, cfg);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(e.curve().size() >= 1);
  }
}

TEST_CASE("parameter perturbations") {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.7, 0.7, 1.0;
  const GaussianParams g(vec({0.0, 0.0}), cov);

  const GaussianParams gm = perturb_gaussian_mean(g, 0.01, 7);
  CHECK((gm.mean() - g.mean()).norm() > 0.0);
  CHECK((gm.mean() - g.mean()).norm() < 0.1);
  CHECK(gm.cov() == g.cov());

  const GaussianParams gc = perturb_gaussian_cov_diag(g, 0.01, 8);
  CHECK(gc.cov()(0, 1) == g.cov()(0, 1));
  CHECK(gc.cov()(0, 0) != g.cov()(0, 0));
  CHECK(std::abs(gc.cov()(0, 0) / g.cov()(0, 0) - 1.0) < 0.1);

  const RbmParams rbm = random_rbm(4, 3, 9);
  const RbmParams rp = perturb_rbm_weights(rbm, 0.01, 10);
  CHECK((rp.W - rbm.W).cwiseAbs().maxCoeff() > 0.0);
  CHECK((rp.W - rbm.W).cwiseAbs().maxCoeff() < 0.1);
  CHECK(rp.b == rbm.b);

  // determinism
  const RbmParams rp2 = perturb_rbm_weights(rbm, 0.01, 10);
  CHECK(rp.W == rp2.W);
}
