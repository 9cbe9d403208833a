#include "hst/score.hpp"

#include <cmath>

namespace hst {

namespace {

void require_point(const ScoreModel& model, const Eigen::VectorXd& x,
                   const char* op) {
  if (x.size() != model.dim) {
    throw InputError(std::string(op) + ": point has " +
                     std::to_string(x.size()) + " components, model expects " +
                     std::to_string(model.dim));
  }
}

}  // namespace

double ScoreModel::any_unnorm_log_density(const Eigen::VectorXd& x) const {
  if (unnorm_log_density) return unnorm_log_density(x);
  if (log_density) return log_density(x);
  throw CapabilityError("model exposes no log density in any form");
}

DifferenceSample DifferenceSample::make(Eigen::VectorXd values,
                                        Hypothesis source) {
  if (values.size() == 0) {
    throw InputError("DifferenceSample: empty value array");
  }
  if (!values.allFinite()) {
    throw InputError("DifferenceSample: non-finite value present");
  }
  return DifferenceSample{std::move(values), source};
}

double hyvarinen_score_point(const ScoreModel& model, const Eigen::VectorXd& x) {
  require_point(model, x, "hyvarinen_score_point");
  const Eigen::VectorXd g = model.grad_log_density(x);
  if (g.size() != model.dim) {
    throw InputError("hyvarinen_score_point: gradient has wrong dimension");
  }
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw NumericError("hyvarinen_score_point: non-finite gradient component " +
                         std::to_string(i));
    }
  }
  const double lap = model.laplacian_log_density(x);
  if (!std::isfinite(lap)) {
    throw NumericError("hyvarinen_score_point: non-finite Laplacian");
  }
  return 0.5 * g.squaredNorm() + lap;
}

double hyvarinen_score_sample(const ScoreModel& model, const Eigen::MatrixXd& X) {
  if (X.rows() == 0) {
    throw InputError("hyvarinen_score_sample: empty sample");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    acc += hyvarinen_score_point(model, X.row(i).transpose());
  }
  return acc / static_cast<double>(X.rows());
}

double score_difference(const ScoreModel& model0, const ScoreModel& model1,
                        const Eigen::VectorXd& x) {
  if (model0.dim != model1.dim) {
    throw InputError("score_difference: model dimensions differ");
  }
  return hyvarinen_score_point(model0, x) - hyvarinen_score_point(model1, x);
}

DifferenceSample score_differences(const ScoreModel& model0,
                                   const ScoreModel& model1,
                                   const Eigen::MatrixXd& X,
                                   Hypothesis source) {
  if (X.rows() == 0) {
    throw InputError("score_differences: empty sample");
  }
  Eigen::VectorXd values(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    values[i] = score_difference(model0, model1, X.row(i).transpose());
  }
  return DifferenceSample::make(std::move(values), source);
}

double fisher_divergence_mc(const ScoreModel& model_p, const ScoreModel& model_q,
                            const Eigen::MatrixXd& samples_from_p) {
  if (model_p.dim != model_q.dim) {
    throw InputError("fisher_divergence_mc: model dimensions differ");
  }
  if (samples_from_p.rows() == 0) {
    throw InputError("fisher_divergence_mc: empty sample");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < samples_from_p.rows(); ++i) {
    const Eigen::VectorXd x = samples_from_p.row(i).transpose();
    require_point(model_p, x, "fisher_divergence_mc");
    const Eigen::VectorXd d = model_p.grad_log_density(x) - model_q.grad_log_density(x);
    acc += 0.5 * d.squaredNorm();
  }
  return acc / static_cast<double>(samples_from_p.rows());
}

DerivativeReport check_model_derivatives(const ScoreModel& model,
                                         const Eigen::VectorXd& x, double h) {
  if (!model.has_unnorm_log_density() && !model.has_log_density()) {
    throw CapabilityError(
        "check_model_derivatives: model has no log density to differentiate");
  }
  if (h <= 0) {
    throw InputError("check_model_derivatives: step must be positive");
  }
  require_point(model, x, "check_model_derivatives");

  const auto f = [&](const Eigen::VectorXd& p) {
    return model.any_unnorm_log_density(p);
  };

  const Eigen::VectorXd grad = model.grad_log_density(x);
  const double lap = model.laplacian_log_density(x);
  const double f0 = f(x);

  DerivativeReport report;
  report.step = h;
  double lap_fd = 0.0;
  Eigen::VectorXd probe = x;
  for (int i = 0; i < model.dim; ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];

    const double g_fd = (fp - fm) / (2.0 * h);
    const double denom = std::max(1.0, std::abs(grad[i]));
    report.max_rel_error_grad =
        std::max(report.max_rel_error_grad, std::abs(g_fd - grad[i]) / denom);
    lap_fd += (fp - 2.0 * f0 + fm) / (h * h);
  }
  report.max_rel_error_laplacian =
      std::abs(lap_fd - lap) / std::max(1.0, std::abs(lap));
  return report;
}

}  // namespace hst
