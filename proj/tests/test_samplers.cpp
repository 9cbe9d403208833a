#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hst/models.hpp"
#include "hst/samplers.hpp"
#include "support.hpp"

using namespace hst;

namespace {

GaussianParams unit_normal(int d) {
  return GaussianParams(Eigen::VectorXd::Zero(d),
                        Eigen::MatrixXd::Identity(d, d));
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

RbmParams small_rbm() {
  Eigen::MatrixXd W(3, 2);
  W << 0.6, -0.4, 0.2, 0.8, -0.5, 0.3;
  return RbmParams(W, vec({0.3, -0.2, 0.1}), vec({-0.1, 0.2}));
}

}  // namespace

TEST_CASE("exact gaussian sampler moments and determinism") {
  const int n = 100000;
  const Eigen::MatrixXd X = sample_gaussian_exact(unit_normal(2), n, 42);
  const Eigen::VectorXd mean = testsupport::sample_mean(X);
  const double bound = 4.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean[0]) <= bound);
  CHECK(std::abs(mean[1]) <= bound);

  const Eigen::MatrixXd X2 = sample_gaussian_exact(unit_normal(2), n, 42);
  CHECK(X == X2);

  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.7, 0.7, 1.0;
  const GaussianParams corr(Eigen::VectorXd::Zero(2), cov);
  const Eigen::MatrixXd Y = sample_gaussian_exact(corr, n, 43);
  CHECK((testsupport::sample_cov(Y) - cov).cwiseAbs().maxCoeff() <= 0.02);

  CHECK_THROWS_AS(sample_gaussian_exact(corr, 0, 1), InputError);
}

TEST_CASE("mala matches the exact sampler on a unit normal") {
  const ScoreModel target = gaussian_model(unit_normal(1));
  ChainConfig cfg;
  cfg.step = 0.5;
  cfg.burn_in = 5000;
  cfg.seed = 7;
  const ChainResult r = mala_chain(target, vec({0.0}), cfg, 200000);
  CHECK(r.acceptance_rate > 0.0);
  CHECK(r.acceptance_rate <= 1.0);
  CHECK(std::abs(testsupport::variance_of(r.samples.col(0)) - 1.0) <= 0.03);
}

TEST_CASE("mala acceptance approaches one as the step vanishes") {
  const ScoreModel target = gaussian_model(unit_normal(1));
  ChainConfig cfg;
  cfg.step = 1e-4;
  cfg.burn_in = 0;
  cfg.seed = 8;
  const ChainResult r = mala_chain(target, vec({0.2}), cfg, 2000);
  CHECK(r.acceptance_rate >= 0.999);
}

TEST_CASE("mala determinism and input validation") {
  const ScoreModel target = gaussian_model(unit_normal(2));
  ChainConfig cfg;
  cfg.step = 0.4;
  cfg.burn_in = 100;
  cfg.seed = 11;
  const ChainResult a = mala_chain(target, vec({0.0, 0.0}), cfg, 500);
  const ChainResult b = mala_chain(target, vec({0.0, 0.0}), cfg, 500);
  CHECK(a.samples == b.samples);
  CHECK(a.acceptance_rate == b.acceptance_rate);

  CHECK_THROWS_AS(mala_chain(target, vec({0.0}), cfg, 10), InputError);
  ChainConfig bad = cfg;
  bad.step = 0.0;
  CHECK_THROWS_AS(mala_chain(target, vec({0.0, 0.0}), bad, 10), InputError);

  ScoreModel no_density = target;
  no_density.unnorm_log_density = nullptr;
  no_density.log_density = nullptr;
  CHECK_THROWS_AS(mala_chain(no_density, vec({0.0, 0.0}), cfg, 10),
                  CapabilityError);
}

TEST_CASE("hmc matches the exact sampler on a unit normal") {
  const ScoreModel target = gaussian_model(unit_normal(1));
  ChainConfig cfg;
  cfg.step = 0.1;
  cfg.leapfrog_steps = 20;
  cfg.burn_in = 2000;
  cfg.seed = 12;
  const ChainResult r = hmc_chain(target, vec({0.0}), cfg, 100000);
  CHECK(std::abs(testsupport::variance_of(r.samples.col(0)) - 1.0) <= 0.03);
  CHECK(r.divergences == 0);
}

TEST_CASE("hmc acceptance approaches one as the energy error vanishes") {
  const ScoreModel target = gaussian_model(unit_normal(1));
  ChainConfig cfg;
  cfg.step = 1e-3;
  cfg.leapfrog_steps = 100;
  cfg.burn_in = 0;
  cfg.seed = 13;
  const ChainResult r = hmc_chain(target, vec({0.1}), cfg, 1000);
  CHECK(r.acceptance_rate >= 0.999);
}

TEST_CASE("leapfrog reversibility") {
  const ScoreModel target = quartic_model(QuarticParams(1.0, 2));
  Eigen::VectorXd q = vec({0.4, -0.3});
  Eigen::VectorXd p = vec({0.7, 0.2});
  const Eigen::VectorXd q0 = q, p0 = p;
  leapfrog_integrate(target, q, p, 0.05, 30);
  p = -p;
  leapfrog_integrate(target, q, p, 0.05, 30);
  p = -p;
  CHECK((q - q0).norm() <= 1e-8);
  CHECK((p - p0).norm() <= 1e-8);
}

TEST_CASE("mala and hmc agree on the quartic family") {
  const ScoreModel target = quartic_model(QuarticParams(1.0, 2));
  const int n = 30000;

  ChainConfig mala_cfg;
  mala_cfg.step = tune_mala_step(target, Eigen::VectorXd::Zero(2), 140);
  mala_cfg.burn_in = 3000;
  mala_cfg.thinning = 2;
  mala_cfg.seed = 14;
  const ChainResult mala = mala_chain(target, Eigen::VectorXd::Zero(2), mala_cfg, n);

  ChainConfig hmc_cfg;
  hmc_cfg.step = tune_hmc_step(target, Eigen::VectorXd::Zero(2), 150);
  hmc_cfg.leapfrog_steps = 20;
  hmc_cfg.burn_in = 1000;
  hmc_cfg.seed = 15;
  const ChainResult hmc = hmc_chain(target, Eigen::VectorXd::Zero(2), hmc_cfg, n);

  for (int col = 0; col < 2; ++col) {
    const Eigen::VectorXd m_first = mala.samples.col(col);
    const Eigen::VectorXd h_first = hmc.samples.col(col);
    const double se_first =
        std::hypot(testsupport::se_batch_means(m_first),
                   testsupport::se_batch_means(h_first));
    CHECK(std::abs(m_first.mean() - h_first.mean()) <= 3.0 * se_first);

    const Eigen::VectorXd m_second = m_first.array().square();
    const Eigen::VectorXd h_second = h_first.array().square();
    const double se_second =
        std::hypot(testsupport::se_batch_means(m_second),
                   testsupport::se_batch_means(h_second));
    CHECK(std::abs(m_second.mean() - h_second.mean()) <= 3.0 * se_second);
  }
}

TEST_CASE("gibbs chain with decoupled hiddens samples N(b, I)") {
  const Eigen::VectorXd b = vec({0.5, -0.25, 1.5});
  const RbmParams flat(Eigen::MatrixXd::Zero(3, 2), b, Eigen::VectorXd::Zero(2));
  ChainConfig cfg = ChainConfig::gibbs_defaults(16);
  const Eigen::MatrixXd X = rbm_gibbs_chain(flat, b, cfg, 100000);
  const Eigen::VectorXd mean = testsupport::sample_mean(X);
  CHECK((mean - b).cwiseAbs().maxCoeff() <= 0.02);
  const Eigen::MatrixXd cov = testsupport::sample_cov(X);
  CHECK((cov - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 0.03);
}

TEST_CASE("gibbs chain matches the exact mixture moments") {
  const RbmParams rbm = small_rbm();
  const MixtureMoments mm = rbm_exact_mixture_moments(rbm);

  ChainConfig cfg = ChainConfig::gibbs_defaults(17);
  const int n = 100000;
  const Eigen::MatrixXd X = rbm_gibbs_chain(rbm, rbm.b, cfg, n);

  for (int i = 0; i < 3; ++i) {
    const double se = testsupport::se_batch_means(X.col(i));
    CHECK(std::abs(X.col(i).mean() - mm.mean[i]) <= 4.0 * se);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const Eigen::VectorXd prod =
          (X.col(i).array() - mm.mean[i]) * (X.col(j).array() - mm.mean[j]);
      const double se = testsupport::se_batch_means(prod);
      CHECK(std::abs(prod.mean() - mm.cov(i, j)) <= 4.0 * se);
    }
  }

  const Eigen::MatrixXd X2 = rbm_gibbs_chain(rbm, rbm.b, cfg, 100);
  const Eigen::MatrixXd X3 = rbm_gibbs_chain(rbm, rbm.b, cfg, 100);
  CHECK(X2 == X3);
}

TEST_CASE("exact mixture moments") {
  const Eigen::VectorXd b = vec({0.4, -0.6});
  const RbmParams flat(Eigen::MatrixXd::Zero(2, 3), b, vec({0.1, 0.2, -0.3}));
  const MixtureMoments mm = rbm_exact_mixture_moments(flat);
  CHECK((mm.mean - b).norm() <= 1e-14);
  CHECK((mm.cov - Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-12);

  // d_h = 1, c = 0, b = 0: two components with weight ratio exp(||w||^2/2)
  Eigen::MatrixXd w(2, 1);
  w << 0.8, -0.6;
  const RbmParams two(w, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1));
  const double p1 = 1.0 / (1.0 + std::exp(-0.5 * w.col(0).squaredNorm()));
  const MixtureMoments mm2 = rbm_exact_mixture_moments(two);
  CHECK((mm2.mean - p1 * w.col(0)).norm() <= 1e-12);

  // quadrature cross-check of the d_x=1, d_h=1 marginal
  Eigen::MatrixXd w1(1, 1);
  w1 << 0.9;
  const RbmParams tiny(w1, vec({0.2}), vec({-0.4}));
  const ScoreModel tiny_model = rbm_model(tiny);
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  const int grid = 40000;
  for (int i = 0; i < grid; ++i) {
    const double x = -12.0 + 24.0 * (i + 0.5) / grid;
    const double w_cell = std::exp(tiny_model.unnorm_log_density(vec({x})));
    z += w_cell;
    m1 += w_cell * x;
    m2 += w_cell * x * x;
  }
  m1 /= z;
  m2 /= z;
  const MixtureMoments mm3 = rbm_exact_mixture_moments(tiny);
  CHECK(mm3.mean[0] == doctest::Approx(m1).epsilon(1e-8));
  CHECK(mm3.cov(0, 0) == doctest::Approx(m2 - m1 * m1).epsilon(1e-8));

  const RbmParams too_big(Eigen::MatrixXd::Zero(2, 13), Eigen::VectorXd::Zero(2),
                          Eigen::VectorXd::Zero(13));
  CHECK_THROWS_AS(rbm_exact_mixture_moments(too_big), CapabilityError);
}

TEST_CASE("detailed balance smoke test on a discretized line") {
  // Bin a stationary chain into three states; detailed balance makes the
  // transition flux between any two bins symmetric up to Monte Carlo noise.
  const ScoreModel target = gaussian_model(unit_normal(1));
  const auto bin_of = [](double x) { return x < -0.5 ? 0 : (x > 0.5 ? 2 : 1); };

  for (int use_hmc = 0; use_hmc < 2; ++use_hmc) {
    ChainConfig cfg;
    cfg.burn_in = 2000;
    cfg.seed = 18 + use_hmc;
    cfg.step = use_hmc ? 0.3 : 0.9;
    cfg.leapfrog_steps = 5;
    const ChainResult r =
        use_hmc ? hmc_chain(target, vec({0.0}), cfg, 100000)
                : mala_chain(target, vec({0.0}), cfg, 100000);
    long flux[3][3] = {};
    for (Eigen::Index i = 0; i + 1 < r.samples.rows(); ++i) {
      ++flux[bin_of(r.samples(i, 0))][bin_of(r.samples(i + 1, 0))];
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b) {
        const double total = static_cast<double>(flux[a][b] + flux[b][a]);
        CHECK(std::abs(static_cast<double>(flux[a][b] - flux[b][a])) <=
              4.0 * std::sqrt(total));
      }
    }
  }
}

TEST_CASE("step tuning lands near the target acceptance") {
  const ScoreModel target = gaussian_model(unit_normal(2));
  const double mala_step =
      tune_mala_step(target, Eigen::VectorXd::Zero(2), 19);
  ChainConfig cfg;
  cfg.step = mala_step;
  cfg.burn_in = 1000;
  cfg.seed = 20;
  const ChainResult r = mala_chain(target, Eigen::VectorXd::Zero(2), cfg, 20000);
  CHECK(r.acceptance_rate > 0.4);
  CHECK(r.acceptance_rate < 0.75);
}
