#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hst/models.hpp"

namespace hst {

/// Mini-batch gradient descent settings for score-matching RBM fits.
/// sample_count = 0 trains on all rows; a positive value subsamples that
/// many rows deterministically from the seed.
struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  int sample_count = 0;
  bool update_W = true;
  bool update_b = true;
  bool update_c = true;

  void validate() const;
};

/// Training loss: the empirical per-point score of the batch under the
/// model, rbm_hyvarinen_closed_form. Minimizing it minimizes the Fisher
/// divergence to the data distribution up to a constant.
double sm_objective(const RbmParams& params, const Eigen::MatrixXd& batch);

struct RbmGradient {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
  Eigen::VectorXd dc;
};

/// Analytic gradient of sm_objective with respect to every entry of
/// (W, b, c), averaged over the batch.
RbmGradient sm_gradient(const RbmParams& params, const Eigen::MatrixXd& batch);

struct FitResult {
  RbmParams params;
  /// Full-data objective per epoch; curve[0] is the untrained value.
  std::vector<double> curve;
};

/// Fits by mini-batch gradient descent from init. Keeps the best
/// full-data objective seen (including the initial parameters), so the
/// returned fit never scores worse than init. Throws TrainingError with
/// the curve attached when the objective exceeds 10x the initial value for
/// three consecutive epochs or turns non-finite.
FitResult score_matching_fit(const Eigen::MatrixXd& data,
                             const RbmParams& init, const TrainConfig& cfg);

/// Alternative-hypothesis constructions by parameter perturbation.
/// Mean entries get i.i.d. N(0, sigma^2) added; covariance diagonals are
/// scaled by i.i.d. log-normal factors exp(N(0, sigma^2)); RBM weights get
/// i.i.d. N(0, sigma^2) added.
GaussianParams perturb_gaussian_mean(const GaussianParams& params,
                                     double sigma, std::uint64_t seed);
GaussianParams perturb_gaussian_cov_diag(const GaussianParams& params,
                                         double sigma, std::uint64_t seed);
RbmParams perturb_rbm_weights(const RbmParams& params, double sigma,
                              std::uint64_t seed);

}  // namespace hst
