#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "hst/models.hpp"
#include "hst/score.hpp"

namespace hst {

enum class ErrorKind { type1, type2 };

/// Result of a Chernoff-exponent optimization phi*(T) = sup_{theta>=0}
/// [theta*T - phi(theta)].
struct ExponentResult {
  double threshold = 0.0;
  double theta_star = 0.0;
  double exponent = 0.0;
  /// Set when the objective is still increasing at the expansion cap; the
  /// true supremum is then +infinity (T at or beyond the sample maximum).
  bool unbounded = false;
  ErrorKind error_kind = ErrorKind::type1;
  struct Diagnostics {
    int iterations = 0;
    int evaluations = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
  } diagnostics;

  std::string to_json(Eigen::Index m = 0) const;
};

/// Log of the empirical moment generating function at theta:
/// log[(1/m) sum exp(theta * D_k)], log-sum-exp stabilized.
/// Exactly 0 at theta = 0.
double log_mgf_empirical(const DifferenceSample& diffs, double theta);

struct LegendreOptions {
  double theta_max = 50.0;
  double tol = 1e-8;
  int max_expansions = 40;
};

/// Maximizes g(theta) = theta*T - phi(theta) over [0, theta_max] by golden
/// section, expanding the bracket geometrically while the objective keeps
/// increasing at the right edge. phi must satisfy phi(0) = 0 (checked to
/// 1e-12). The returned exponent is clamped to be nonnegative.
ExponentResult legendre_transform(const std::function<double(double)>& phi,
                                  double threshold,
                                  const LegendreOptions& opts = {});

/// Type-I exponent from null-hypothesis score differences
/// D_i = S(X_i, p_null) - S(X_i, p_alt).
ExponentResult type1_exponent_empirical(const DifferenceSample& null_diffs,
                                        double threshold,
                                        const LegendreOptions& opts = {});

/// Type-II exponent from alternative-hypothesis differences
/// D'_i = S(X_i, p_alt) - S(X_i, p_null): the same optimization with the
/// roles swapped, evaluated at -threshold.
ExponentResult type2_exponent_empirical(const DifferenceSample& alt_diffs,
                                        double threshold,
                                        const LegendreOptions& opts = {});

/// Closed-form type-I exponent for an equal-covariance Gaussian pair
/// (null mean mu0, alternative mean mu1). With mu = mu1 - mu0,
/// a = 0.5*mu'S^-2*mu and v = mu'S^-3*mu, the per-point difference
/// D = mu'S^-2(x - mu0 - mu/2) is Gaussian N(-a, v) under the null, so
/// phi(theta) = -a*theta + v*theta^2/2 and
///   phi*(T) = (T + a)^2 / (2v)  for T > -a, else 0.
/// Its slope at zero equals -D_F(null || alt), as the exponent chain
/// requires. Quadratic in T.
double gaussian_type1_exponent(const GaussianParams& null_params,
                               const Eigen::VectorXd& alt_mean, double T);

/// Mirror image: (a - T)^2 / (2v) for T < a, else 0.
double gaussian_type2_exponent(const GaussianParams& null_params,
                               const Eigen::VectorXd& alt_mean, double T);

/// Exponent of the test that thresholds the negated, halved difference
/// statistic -D/2 instead of D: zero for T <= a/2, else (2T - a)^2/(2v)
/// (equivalently (4T - mu'S^-2 mu)^2 / (8 mu'S^-3 mu)). Kept for comparison
/// output only; its slope at zero is +a/2, so it does not bound the error
/// of the actual test.
double gaussian_type1_exponent_neghalf_stat(const GaussianParams& null_params,
                                            const Eigen::VectorXd& alt_mean,
                                            double T);

/// Fisher divergence between two equal-covariance Gaussians (symmetric):
/// 0.5 * (mu1-mu0)' S^-2 (mu1-mu0).
double gaussian_fisher_divergence(const GaussianParams& null_params,
                                  const Eigen::VectorXd& alt_mean);

/// Exact type-I error of the n-sample test for the equal-covariance
/// Gaussian pair: the difference statistic is Gaussian, so the error is a
/// normal tail. Used as the oracle for Chernoff-bound checks.
double gaussian_type1_error_exact(const GaussianParams& null_params,
                                  const Eigen::VectorXd& alt_mean, double T,
                                  int n);

/// Interval of thresholds with strictly positive exponents on both sides:
/// (-D_F(null||alt), +D_F(alt||null)). Degenerate (identical models) when
/// both divergences vanish.
struct ThresholdRange {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;
};

ThresholdRange threshold_range(double fisher_null_to_alt,
                               double fisher_alt_to_null);

/// Same interval from score-difference pools, both in the canonical
/// orientation D = S(., null) - S(., alt). By the slope identity,
/// lo = E_null[D] = -D_F(null||alt) and hi = E_alt[D] = +D_F(alt||null),
/// so the interval is simply (mean of null pool, mean of alt pool).
ThresholdRange threshold_range_from_diffs(const DifferenceSample& null_diffs,
                                          const DifferenceSample& alt_diffs);

/// Derivative of the empirical log-MGF (the tilted mean of the
/// differences); exposed for diagnostics.
double log_mgf_empirical_slope(const DifferenceSample& diffs, double theta);

}  // namespace hst
