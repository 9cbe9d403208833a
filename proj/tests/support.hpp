#pragma once

// Shared oracles for the test suites. Everything here is independent of the
// library's own numeric paths: plain finite differences, brute-force grid
// search, and direct moment formulas.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace testsupport {

inline std::string fixture(const std::string& name) {
  return std::string(HST_FIXTURE_DIR) + "/" + name;
}

/// Central-difference gradient of a scalar field.
inline Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double fp = f(p);
    p[i] = x[i] - h;
    const double fm = f(p);
    p[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Sum of per-coordinate second central differences (the Laplacian).
inline double fd_laplacian(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  const double f0 = f(x);
  double acc = 0.0;
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double fp = f(p);
    p[i] = x[i] - h;
    const double fm = f(p);
    p[i] = x[i];
    acc += (fp - 2.0 * f0 + fm) / (h * h);
  }
  return acc;
}

inline double mean_of(const Eigen::VectorXd& v) { return v.mean(); }

inline double variance_of(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

/// Standard error of the mean for i.i.d. values.
inline double se_of_mean(const Eigen::VectorXd& v) {
  return std::sqrt(variance_of(v) / static_cast<double>(v.size()));
}

/// Batch-means standard error for autocorrelated (MCMC) values.
inline double se_batch_means(const Eigen::VectorXd& v, int batches = 20) {
  const auto n = static_cast<Eigen::Index>(v.size());
  const Eigen::Index per = n / batches;
  Eigen::VectorXd means(batches);
  for (int b = 0; b < batches; ++b) {
    means[b] = v.segment(b * per, per).mean();
  }
  return std::sqrt(variance_of(means) / batches);
}

/// Brute-force maximizer of g over [0, theta_max] on a uniform grid.
struct GridMax {
  double theta = 0.0;
  double value = 0.0;
};
inline GridMax grid_maximize(const std::function<double(double)>& g,
                             double theta_max, int points) {
  GridMax best;
  best.value = g(0.0);
  for (int i = 1; i < points; ++i) {
    const double theta = theta_max * i / (points - 1.0);
    const double value = g(theta);
    if (value > best.value) {
      best.value = value;
      best.theta = theta;
    }
  }
  return best;
}

/// Column means / sample covariance of points-in-rows.
inline Eigen::VectorXd sample_mean(const Eigen::MatrixXd& X) {
  return X.colwise().mean();
}
inline Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(X.rows() - 1);
}

/// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x,
                       const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace testsupport
