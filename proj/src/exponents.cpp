#include "hst/exponents.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

namespace hst {

double log_mgf_empirical(const DifferenceSample& diffs, double theta) {
  if (diffs.size() == 0) {
    throw InputError("log_mgf_empirical: empty difference sample");
  }
  if (!std::isfinite(theta)) {
    throw InputError("log_mgf_empirical: theta must be finite");
  }
  if (theta == 0.0) return 0.0;
  const Eigen::ArrayXd scaled = theta * diffs.values.array();
  const double m = scaled.maxCoeff();
  const double s = (scaled - m).exp().sum();
  return m + std::log(s) - std::log(static_cast<double>(diffs.size()));
}

double log_mgf_empirical_slope(const DifferenceSample& diffs, double theta) {
  if (diffs.size() == 0) {
    throw InputError("log_mgf_empirical_slope: empty difference sample");
  }
  const Eigen::ArrayXd scaled = theta * diffs.values.array();
  const double m = scaled.maxCoeff();
  const Eigen::ArrayXd w = (scaled - m).exp();
  return (w * diffs.values.array()).sum() / w.sum();
}

std::string ExponentResult::to_json(Eigen::Index m) const {
  nlohmann::json j;
  j["error_kind"] = error_kind == ErrorKind::type1 ? "type1" : "type2";
  j["T"] = threshold;
  j["theta_star"] = theta_star;
  j["exponent"] = exponent;
  j["unbounded"] = unbounded;
  j["m"] = m;
  return j.dump();
}

ExponentResult legendre_transform(const std::function<double(double)>& phi,
                                  double threshold,
                                  const LegendreOptions& opts) {
  if (!(opts.theta_max > 0.0)) {
    throw InputError("legendre_transform: theta_max must be positive");
  }
  if (!(opts.tol > 0.0)) {
    throw InputError("legendre_transform: tol must be positive");
  }
  if (std::abs(phi(0.0)) > 1e-12) {
    throw InputError("legendre_transform: phi(0) must be 0");
  }

  ExponentResult result;
  result.threshold = threshold;

  int evaluations = 1;
  const auto objective = [&](double theta) {
    ++evaluations;
    const double value = theta * threshold - phi(theta);
    if (!std::isfinite(value)) {
      throw NumericError("legendre_transform: non-finite objective at theta=" +
                         std::to_string(theta));
    }
    return value;
  };

  // Expand the bracket while the supremum keeps hugging the right edge.
  // Empirical MGFs of bounded samples have piecewise-linear tails whose
  // true supremum can sit at theta = infinity; that case gets flagged
  // rather than treated as an error.
  double lo = 0.0;
  double hi = opts.theta_max;
  int iterations = 0;
  int expansions = 0;
  constexpr double kGolden = 0.6180339887498949;

  double theta_star = 0.0;
  double best = 0.0;
  while (true) {
    // Golden-section over [lo, hi]; the objective is concave.
    double a = lo, b = hi;
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (b - a > opts.tol) {
      ++iterations;
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kGolden * (b - a);
        f2 = objective(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kGolden * (b - a);
        f1 = objective(x1);
      }
    }
    theta_star = 0.5 * (a + b);
    best = objective(theta_star);
    // Boundary values may beat the interior midpoint when the maximum is at
    // an endpoint of the original bracket.
    const double at_lo = objective(lo);
    if (at_lo >= best) {
      theta_star = lo;
      best = at_lo;
    }
    const double at_hi = objective(hi);
    if (at_hi > best) {
      theta_star = hi;
      best = at_hi;
    }

    const bool pushing_right = theta_star >= hi - 10.0 * opts.tol;
    if (!pushing_right) break;
    if (expansions >= opts.max_expansions) {
      result.unbounded = true;
      break;
    }
    ++expansions;
    hi *= 4.0;
  }

  result.theta_star = std::max(theta_star, 0.0);
  result.exponent = std::max(best, 0.0);
  result.diagnostics.iterations = iterations;
  result.diagnostics.evaluations = evaluations;
  result.diagnostics.bracket_lo = lo;
  result.diagnostics.bracket_hi = hi;
  return result;
}

ExponentResult type1_exponent_empirical(const DifferenceSample& null_diffs,
                                        double threshold,
                                        const LegendreOptions& opts) {
  ExponentResult r = legendre_transform(
      [&null_diffs](double theta) {
        return log_mgf_empirical(null_diffs, theta);
      },
      threshold, opts);
  r.error_kind = ErrorKind::type1;
  return r;
}

ExponentResult type2_exponent_empirical(const DifferenceSample& alt_diffs,
                                        double threshold,
                                        const LegendreOptions& opts) {
  ExponentResult r = legendre_transform(
      [&alt_diffs](double theta) { return log_mgf_empirical(alt_diffs, theta); },
      -threshold, opts);
  r.error_kind = ErrorKind::type2;
  r.threshold = threshold;
  return r;
}

namespace {

struct GaussianPairStats {
  double a = 0.0;  // 0.5 * mu' S^-2 mu, the Fisher divergence either way
  double v = 0.0;  // mu' S^-3 mu, variance of the difference statistic
};

GaussianPairStats pair_stats(const GaussianParams& null_params,
                             const Eigen::VectorXd& alt_mean) {
  if (alt_mean.size() != null_params.dim()) {
    throw InputError("gaussian exponent: mean dimension mismatch");
  }
  const Eigen::VectorXd mu = alt_mean - null_params.mean();
  GaussianPairStats s;
  s.a = 0.5 * mu.dot(null_params.precision2() * mu);
  s.v = mu.dot(null_params.precision3() * mu);
  return s;
}

}  // namespace

double gaussian_type1_exponent(const GaussianParams& null_params,
                               const Eigen::VectorXd& alt_mean, double T) {
  const auto s = pair_stats(null_params, alt_mean);
  if (s.v <= 0.0) return 0.0;  // identical means
  if (T <= -s.a) return 0.0;
  const double shifted = T + s.a;
  return shifted * shifted / (2.0 * s.v);
}

double gaussian_type2_exponent(const GaussianParams& null_params,
                               const Eigen::VectorXd& alt_mean, double T) {
  const auto s = pair_stats(null_params, alt_mean);
  if (s.v <= 0.0) return 0.0;
  if (T >= s.a) return 0.0;
  const double shifted = s.a - T;
  return shifted * shifted / (2.0 * s.v);
}

double gaussian_type1_exponent_neghalf_stat(const GaussianParams& null_params,
                                            const Eigen::VectorXd& alt_mean,
                                            double T) {
  const auto s = pair_stats(null_params, alt_mean);
  if (s.v <= 0.0) return 0.0;
  if (T <= 0.5 * s.a) return 0.0;
  const double shifted = 2.0 * T - s.a;
  return shifted * shifted / (2.0 * s.v);
}

double gaussian_fisher_divergence(const GaussianParams& null_params,
                                  const Eigen::VectorXd& alt_mean) {
  return pair_stats(null_params, alt_mean).a;
}

double gaussian_type1_error_exact(const GaussianParams& null_params,
                                  const Eigen::VectorXd& alt_mean, double T,
                                  int n) {
  if (n < 1) throw InputError("gaussian_type1_error_exact: n must be >= 1");
  const auto s = pair_stats(null_params, alt_mean);
  if (s.v <= 0.0) return T < 0.0 ? 1.0 : 0.0;
  // The n-sample statistic is N(-a, v/n); P(stat > T) is a normal tail.
  const double z = (T + s.a) / std::sqrt(s.v / n);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

ThresholdRange threshold_range(double fisher_null_to_alt,
                               double fisher_alt_to_null) {
  if (fisher_null_to_alt < 0.0 || fisher_alt_to_null < 0.0) {
    throw InputError("threshold_range: Fisher divergences must be nonnegative");
  }
  ThresholdRange r;
  r.lo = -fisher_null_to_alt;
  r.hi = fisher_alt_to_null;
  r.degenerate = fisher_null_to_alt <= 1e-12 && fisher_alt_to_null <= 1e-12;
  if (r.degenerate) {
    r.lo = 0.0;
    r.hi = 0.0;
  }
  return r;
}

ThresholdRange threshold_range_from_diffs(const DifferenceSample& null_diffs,
                                          const DifferenceSample& alt_diffs) {
  const double mean_null = null_diffs.values.mean();
  const double mean_alt = alt_diffs.values.mean();
  ThresholdRange r;
  r.lo = mean_null;
  r.hi = mean_alt;
  r.degenerate = std::abs(mean_null) <= 1e-12 && std::abs(mean_alt) <= 1e-12;
  if (r.degenerate) {
    r.lo = 0.0;
    r.hi = 0.0;
  }
  return r;
}

}  // namespace hst
