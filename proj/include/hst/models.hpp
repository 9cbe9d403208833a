#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>

#include "hst/score.hpp"

namespace hst {

/// Multivariate Gaussian N(mean, cov) with the inverse powers of the
/// covariance cached at construction; they appear in every closed-form
/// exponent evaluation.
class GaussianParams {
 public:
  /// Validates symmetry (1e-12) and positive definiteness.
  GaussianParams(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  const Eigen::MatrixXd& precision() const { return inv_; }
  const Eigen::MatrixXd& precision2() const { return inv2_; }
  const Eigen::MatrixXd& precision3() const { return inv3_; }
  /// Lower Cholesky factor of the covariance.
  const Eigen::MatrixXd& chol() const { return chol_; }
  double log_det_cov() const { return log_det_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_, inv_, inv2_, inv3_, chol_;
  double log_det_ = 0.0;
};

/// Quartic exponential family p_tau(x) proportional to exp(-tau * e(x)) with
/// e(x) = sum_i x_i^4 + sum_{i<=j} x_i^2 x_j^2 (diagonal included).
struct QuarticParams {
  double tau = 1.0;
  int dim = 1;

  QuarticParams() = default;
  QuarticParams(double tau_, int dim_);
};

/// Gauss-Bernoulli restricted Boltzmann machine. Visible units are real with
/// unit scale, hidden units binary. Convention:
///   p(x,h) proportional to exp(-0.5*||x-b||^2 + x'Wh + c'h)
/// which yields the softplus free energy and logistic hidden conditionals
/// used throughout.
struct RbmParams {
  Eigen::MatrixXd W;  // d_x by d_h
  Eigen::VectorXd b;  // visible bias, d_x
  Eigen::VectorXd c;  // hidden bias, d_h

  RbmParams() = default;
  RbmParams(Eigen::MatrixXd W_, Eigen::VectorXd b_, Eigen::VectorXd c_);
  int visible_dim() const { return static_cast<int>(b.size()); }
  int hidden_dim() const { return static_cast<int>(c.size()); }
};

/// Overflow-safe log(1 + exp(t)).
double softplus(double t);
/// Overflow-safe logistic function.
double sigmoid(double t);

ScoreModel gaussian_model(const GaussianParams& params);
ScoreModel quartic_model(const QuarticParams& params);

/// e(x) for the quartic family and its analytic derivatives.
double quartic_energy(const Eigen::VectorXd& x);
Eigen::VectorXd quartic_energy_grad(const Eigen::VectorXd& x);
double quartic_energy_laplacian(const Eigen::VectorXd& x);

/// F(x) = 0.5*sum (x_i - b_i)^2 - sum_j softplus((W'x)_j + c_j);
/// the unnormalized log density is -F(x).
double rbm_free_energy(const RbmParams& params, const Eigen::VectorXd& x);
ScoreModel rbm_model(const RbmParams& params);

/// Hidden activation probabilities sigmoid(W'x + c).
Eigen::VectorXd rbm_hidden_means(const RbmParams& params,
                                 const Eigen::VectorXd& x);

/// Mean over sample rows of the closed-form per-point score
///   sum_i [ 0.5*(x_i - b_i - (W delta)_i)^2
///           + sum_j W_ij^2 delta_j (1-delta_j) - 1 ].
/// Identical to the generic 0.5*||grad||^2 + Laplacian evaluation.
double rbm_hyvarinen_closed_form(const RbmParams& params,
                                 const Eigen::MatrixXd& X);

/// Tensor-grid quadrature spec for the quartic normalizer: [-range, range]
/// per axis with nodes_per_axis midpoint cells.
struct QuadratureSpec {
  double range = 4.0;
  int nodes_per_axis = 400;
};

struct LogPartitionResult {
  double log_z = 0.0;
  /// Set when doubling the node count still moves the estimate by more than
  /// the relative target (1e-6).
  bool converged = true;
  double refinement_delta = 0.0;
};

/// log integral of exp(-tau*e(x)) over the grid, via log-sum-exp with
/// cell-volume weights. Supports dim <= 3 only.
LogPartitionResult quartic_log_partition(const QuarticParams& params,
                                         const QuadratureSpec& quad = {});

/// Model parameter file: JSON object with "type" in {gaussian, quartic, rbm}.
using ModelSpec = std::variant<QuarticParams, GaussianParams, RbmParams>;

int spec_dimension(const ModelSpec& spec);
ScoreModel spec_to_model(const ModelSpec& spec);
std::string spec_type_name(const ModelSpec& spec);

ModelSpec parse_model_spec(const std::string& json_text);
ModelSpec load_model_spec(const std::string& path);
std::string model_spec_to_json(const ModelSpec& spec);
void save_model_spec(const ModelSpec& spec, const std::string& path);

}  // namespace hst
