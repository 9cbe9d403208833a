#include "hst/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hst/rng.hpp"

namespace hst {

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw InputError("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) {
    throw InputError("TrainConfig: learning rate must be positive");
  }
  if (sample_count < 0) {
    throw InputError("TrainConfig: sample_count must be >= 0");
  }
}

double sm_objective(const RbmParams& params, const Eigen::MatrixXd& batch) {
  return rbm_hyvarinen_closed_form(params, batch);
}

RbmGradient sm_gradient(const RbmParams& params, const Eigen::MatrixXd& batch) {
  if (batch.rows() == 0) throw InputError("sm_gradient: empty batch");
  if (batch.cols() != params.visible_dim()) {
    throw InputError("sm_gradient: dimension mismatch");
  }
  const int dx = params.visible_dim();
  const int dh = params.hidden_dim();
  const Eigen::VectorXd col_sq = params.W.colwise().squaredNorm();

  RbmGradient g;
  g.dW = Eigen::MatrixXd::Zero(dx, dh);
  g.db = Eigen::VectorXd::Zero(dx);
  g.dc = Eigen::VectorXd::Zero(dh);

  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    const Eigen::VectorXd x = batch.row(i).transpose();
    const Eigen::VectorXd delta = rbm_hidden_means(params, x);
    const Eigen::ArrayXd gamma = delta.array() * (1.0 - delta.array());
    const Eigen::VectorXd resid = x - params.b - params.W * delta;
    const Eigen::VectorXd wt_resid = params.W.transpose() * resid;

    // d/dc_l = gamma_l * [(1 - 2 delta_l) S_l - (W'r)_l]; the W gradient
    // reuses it through the chain rule on the hidden pre-activations.
    const Eigen::VectorXd dc =
        (gamma * ((1.0 - 2.0 * delta.array()) * col_sq.array() -
                  wt_resid.array()))
            .matrix();
    g.db -= resid;
    g.dc += dc;
    g.dW += -resid * delta.transpose() + x * dc.transpose() +
            2.0 * params.W * gamma.matrix().asDiagonal();
  }
  const double inv_n = 1.0 / static_cast<double>(batch.rows());
  g.dW *= inv_n;
  g.db *= inv_n;
  g.dc *= inv_n;
  return g;
}

FitResult score_matching_fit(const Eigen::MatrixXd& data,
                             const RbmParams& init, const TrainConfig& cfg) {
  cfg.validate();
  if (data.rows() == 0) throw InputError("score_matching_fit: empty data");
  if (data.cols() != init.visible_dim()) {
    throw InputError("score_matching_fit: data/init dimension mismatch");
  }

  std::mt19937_64 rng = make_engine(cfg.seed, {0x7121u});

  // Deterministic subsample when a training-size cap is set.
  Eigen::MatrixXd train = data;
  if (cfg.sample_count > 0 && cfg.sample_count < data.rows()) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    train.resize(cfg.sample_count, data.cols());
    for (int i = 0; i < cfg.sample_count; ++i) {
      train.row(i) = data.row(order[static_cast<std::size_t>(i)]);
    }
  }

  RbmParams params = init;
  FitResult result;
  const double initial = sm_objective(params, train);
  result.curve.push_back(initial);

  RbmParams best_params = params;
  double best_objective = initial;
  int bad_epochs = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < train.rows();
         start += cfg.batch_size) {
      const Eigen::Index count =
          std::min<Eigen::Index>(cfg.batch_size, train.rows() - start);
      Eigen::MatrixXd batch(count, train.cols());
      for (Eigen::Index k = 0; k < count; ++k) {
        batch.row(k) = train.row(order[static_cast<std::size_t>(start + k)]);
      }
      const RbmGradient g = sm_gradient(params, batch);
      if (cfg.update_W) params.W -= cfg.learning_rate * g.dW;
      if (cfg.update_b) params.b -= cfg.learning_rate * g.db;
      if (cfg.update_c) params.c -= cfg.learning_rate * g.dc;
    }

    if (!params.W.allFinite() || !params.b.allFinite() ||
        !params.c.allFinite()) {
      throw TrainingError("score_matching_fit: non-finite parameters at epoch " +
                              std::to_string(epoch),
                          result.curve);
    }
    const double objective = sm_objective(params, train);
    result.curve.push_back(objective);
    if (!std::isfinite(objective)) {
      throw TrainingError("score_matching_fit: non-finite objective at epoch " +
                              std::to_string(epoch),
                          result.curve);
    }
    bad_epochs = objective > 10.0 * std::abs(initial) + 10.0 ? bad_epochs + 1 : 0;
    if (bad_epochs >= 3) {
      throw TrainingError("score_matching_fit: objective diverged", result.curve);
    }
    if (objective < best_objective) {
      best_objective = objective;
      best_params = params;
    }
  }

  result.params = best_params;
  return result;
}

GaussianParams perturb_gaussian_mean(const GaussianParams& params,
                                     double sigma, std::uint64_t seed) {
  std::mt19937_64 rng = make_engine(seed, {0x9eab1u});
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::VectorXd mean = params.mean();
  for (Eigen::Index i = 0; i < mean.size(); ++i) mean[i] += normal(rng);
  return GaussianParams(mean, params.cov());
}

GaussianParams perturb_gaussian_cov_diag(const GaussianParams& params,
                                         double sigma, std::uint64_t seed) {
  std::mt19937_64 rng = make_engine(seed, {0x9eab2u});
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::MatrixXd cov = params.cov();
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    cov(i, i) *= std::exp(normal(rng));
  }
  return GaussianParams(params.mean(), cov);
}

RbmParams perturb_rbm_weights(const RbmParams& params, double sigma,
                              std::uint64_t seed) {
  std::mt19937_64 rng = make_engine(seed, {0x9eab3u});
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::MatrixXd W = params.W;
  for (Eigen::Index r = 0; r < W.rows(); ++r) {
    for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) += normal(rng);
  }
  return RbmParams(W, params.b, params.c);
}

}  // namespace hst
