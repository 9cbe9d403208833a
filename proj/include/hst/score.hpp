#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "hst/errors.hpp"

namespace hst {

/// A statistical model exposed through its score functions. Only the
/// gradient and Laplacian of log density are required; they are computable
/// for unnormalized models. Exact or unnormalized log densities are optional
/// capabilities (needed for likelihood ratios and MCMC acceptance steps).
///
/// Instances are immutable after construction and safe to share across
/// threads; all evaluation functions must be pure.
struct ScoreModel {
  int dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_log_density;
  std::function<double(const Eigen::VectorXd&)> laplacian_log_density;
  /// Exact normalized log density, when available.
  std::function<double(const Eigen::VectorXd&)> log_density;
  /// Log density up to an additive constant, when available.
  std::function<double(const Eigen::VectorXd&)> unnorm_log_density;

  bool has_log_density() const { return static_cast<bool>(log_density); }
  bool has_unnorm_log_density() const {
    return static_cast<bool>(unnorm_log_density);
  }
  /// Best available log density up to a constant; throws CapabilityError if
  /// the model exposes neither form.
  double any_unnorm_log_density(const Eigen::VectorXd& x) const;
};

enum class Hypothesis { null_hypothesis, alternative };

/// Per-point score differences S(X_i, p_null) - S(X_i, p_alt), the raw
/// material for moment generating function and exponent estimation.
struct DifferenceSample {
  Eigen::VectorXd values;
  Hypothesis source = Hypothesis::null_hypothesis;

  /// Validates: nonempty, all finite.
  static DifferenceSample make(Eigen::VectorXd values, Hypothesis source);
  Eigen::Index size() const { return values.size(); }
};

/// 0.5*||grad log q(x)||^2 + Laplacian log q(x). Computable without the
/// normalizing constant of q.
double hyvarinen_score_point(const ScoreModel& model, const Eigen::VectorXd& x);

/// Mean of hyvarinen_score_point over the rows of X (one point per row).
double hyvarinen_score_sample(const ScoreModel& model, const Eigen::MatrixXd& X);

/// hyvarinen_score_point(model0, x) - hyvarinen_score_point(model1, x).
/// Antisymmetric in (model0, model1).
double score_difference(const ScoreModel& model0, const ScoreModel& model1,
                        const Eigen::VectorXd& x);

/// score_difference evaluated at every row of X, packaged with the stated
/// source hypothesis. Non-finite values abort rather than being filtered;
/// silent filtering would bias downstream tail estimates.
DifferenceSample score_differences(const ScoreModel& model0,
                                   const ScoreModel& model1,
                                   const Eigen::MatrixXd& X, Hypothesis source);

/// Monte Carlo estimate of the Fisher divergence D_F(p||q) from samples
/// drawn under p: mean of 0.5*||grad_p(X_i) - grad_q(X_i)||^2.
double fisher_divergence_mc(const ScoreModel& model_p, const ScoreModel& model_q,
                            const Eigen::MatrixXd& samples_from_p);

/// Finite-difference verification of a model's analytic derivatives against
/// its own unnormalized log density.
struct DerivativeReport {
  double max_rel_error_grad = 0.0;
  double max_rel_error_laplacian = 0.0;
  double step = 0.0;

  bool within(double tol) const {
    return max_rel_error_grad <= tol && max_rel_error_laplacian <= tol;
  }
};

/// Central differences for the gradient, per-coordinate second central
/// differences summed for the Laplacian (only the trace is needed).
/// Relative errors use denominator max(1, |analytic|).
DerivativeReport check_model_derivatives(const ScoreModel& model,
                                         const Eigen::VectorXd& x,
                                         double h = 1e-4);

}  // namespace hst
