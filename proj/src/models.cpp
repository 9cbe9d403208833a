#include "hst/models.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace hst {

namespace {

constexpr double kSymTol = 1e-12;

Eigen::MatrixXd require_square_symmetric(const Eigen::MatrixXd& m,
                                         const char* what) {
  if (m.rows() != m.cols()) {
    throw InputError(std::string(what) + ": matrix is not square");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymTol) {
    throw InputError(std::string(what) + ": matrix is not symmetric");
  }
  return 0.5 * (m + m.transpose());
}

}  // namespace

GaussianParams::GaussianParams(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)) {
  if (mean_.size() == 0) {
    throw InputError("GaussianParams: empty mean");
  }
  cov_ = require_square_symmetric(cov, "GaussianParams");
  if (cov_.rows() != mean_.size()) {
    throw InputError("GaussianParams: mean/covariance dimension mismatch");
  }
  if (!cov_.allFinite() || !mean_.allFinite()) {
    throw InputError("GaussianParams: non-finite entries");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) {
    throw InputError("GaussianParams: covariance is not positive definite");
  }
  chol_ = llt.matrixL();
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
  const Eigen::MatrixXd identity =
      Eigen::MatrixXd::Identity(cov_.rows(), cov_.cols());
  inv_ = llt.solve(identity);
  inv_ = 0.5 * (inv_ + inv_.transpose());
  inv2_ = inv_ * inv_;
  inv3_ = inv2_ * inv_;
}

QuarticParams::QuarticParams(double tau_, int dim_) : tau(tau_), dim(dim_) {
  if (!(tau > 0.0)) {
    throw InputError("QuarticParams: tau must be positive");
  }
  if (dim < 1) {
    throw InputError("QuarticParams: dimension must be positive");
  }
}

RbmParams::RbmParams(Eigen::MatrixXd W_, Eigen::VectorXd b_, Eigen::VectorXd c_)
    : W(std::move(W_)), b(std::move(b_)), c(std::move(c_)) {
  if (W.rows() != b.size() || W.cols() != c.size()) {
    throw InputError("RbmParams: inconsistent shapes for W, b, c");
  }
  if (!W.allFinite() || !b.allFinite() || !c.allFinite()) {
    throw InputError("RbmParams: non-finite entries");
  }
}

double softplus(double t) {
  // For large |t| the naive form overflows; RBM pre-activations at
  // d_x = 50 routinely leave the float exponent range.
  if (t > 34.0) return t;
  if (t < -34.0) return std::exp(t);
  return std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

ScoreModel gaussian_model(const GaussianParams& params) {
  const int d = params.dim();
  const Eigen::VectorXd mean = params.mean();
  const Eigen::MatrixXd prec = params.precision();
  const double trace_prec = prec.trace();
  const double log_norm =
      -0.5 * (d * std::log(2.0 * M_PI) + params.log_det_cov());

  ScoreModel model;
  model.dim = d;
  model.grad_log_density = [mean, prec](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(-(prec * (x - mean)));
  };
  model.laplacian_log_density = [trace_prec](const Eigen::VectorXd&) {
    return -trace_prec;
  };
  model.log_density = [mean, prec, log_norm](const Eigen::VectorXd& x) {
    const Eigen::VectorXd r = x - mean;
    return log_norm - 0.5 * r.dot(prec * r);
  };
  model.unnorm_log_density = [mean, prec](const Eigen::VectorXd& x) {
    const Eigen::VectorXd r = x - mean;
    return -0.5 * r.dot(prec * r);
  };
  return model;
}

double quartic_energy(const Eigen::VectorXd& x) {
  // sum x_i^4 + sum_{i<=j} x_i^2 x_j^2 = 1.5*sum x_i^4 + 0.5*||x||^4
  const double quart = x.array().pow(4).sum();
  const double s2 = x.squaredNorm();
  return 1.5 * quart + 0.5 * s2 * s2;
}

Eigen::VectorXd quartic_energy_grad(const Eigen::VectorXd& x) {
  const double s2 = x.squaredNorm();
  return 6.0 * x.array().cube().matrix() + 2.0 * s2 * x;
}

double quartic_energy_laplacian(const Eigen::VectorXd& x) {
  const double s2 = x.squaredNorm();
  return (22.0 + 2.0 * static_cast<double>(x.size())) * s2;
}

ScoreModel quartic_model(const QuarticParams& params) {
  const double tau = params.tau;
  ScoreModel model;
  model.dim = params.dim;
  model.grad_log_density = [tau](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(-tau * quartic_energy_grad(x));
  };
  model.laplacian_log_density = [tau](const Eigen::VectorXd& x) {
    return -tau * quartic_energy_laplacian(x);
  };
  model.unnorm_log_density = [tau](const Eigen::VectorXd& x) {
    return -tau * quartic_energy(x);
  };
  return model;
}

double rbm_free_energy(const RbmParams& params, const Eigen::VectorXd& x) {
  if (x.size() != params.visible_dim()) {
    throw InputError("rbm_free_energy: dimension mismatch");
  }
  const Eigen::VectorXd pre = params.W.transpose() * x + params.c;
  double soft = 0.0;
  for (Eigen::Index j = 0; j < pre.size(); ++j) soft += softplus(pre[j]);
  return 0.5 * (x - params.b).squaredNorm() - soft;
}

Eigen::VectorXd rbm_hidden_means(const RbmParams& params,
                                 const Eigen::VectorXd& x) {
  Eigen::VectorXd pre = params.W.transpose() * x + params.c;
  for (Eigen::Index j = 0; j < pre.size(); ++j) pre[j] = sigmoid(pre[j]);
  return pre;
}

ScoreModel rbm_model(const RbmParams& params) {
  const RbmParams p = params;
  const Eigen::VectorXd col_sq = p.W.colwise().squaredNorm();
  const int d = p.visible_dim();

  ScoreModel model;
  model.dim = d;
  model.grad_log_density = [p](const Eigen::VectorXd& x) {
    const Eigen::VectorXd delta = rbm_hidden_means(p, x);
    return Eigen::VectorXd(-(x - p.b) + p.W * delta);
  };
  model.laplacian_log_density = [p, col_sq, d](const Eigen::VectorXd& x) {
    const Eigen::VectorXd delta = rbm_hidden_means(p, x);
    const Eigen::VectorXd gamma =
        delta.array() * (1.0 - delta.array());
    return -static_cast<double>(d) + col_sq.dot(gamma);
  };
  model.unnorm_log_density = [p](const Eigen::VectorXd& x) {
    return -rbm_free_energy(p, x);
  };
  return model;
}

double rbm_hyvarinen_closed_form(const RbmParams& params,
                                 const Eigen::MatrixXd& X) {
  if (X.rows() == 0) {
    throw InputError("rbm_hyvarinen_closed_form: empty sample");
  }
  if (X.cols() != params.visible_dim()) {
    throw InputError("rbm_hyvarinen_closed_form: dimension mismatch");
  }
  const Eigen::VectorXd col_sq = params.W.colwise().squaredNorm();
  const double d = static_cast<double>(params.visible_dim());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    const Eigen::VectorXd delta = rbm_hidden_means(params, x);
    const Eigen::VectorXd gamma = delta.array() * (1.0 - delta.array());
    const Eigen::VectorXd resid = x - params.b - params.W * delta;
    acc += 0.5 * resid.squaredNorm() + col_sq.dot(gamma) - d;
  }
  return acc / static_cast<double>(X.rows());
}

namespace {

double log_sum_exp_stream(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double quartic_log_z_on_grid(const QuarticParams& params, double range,
                             int nodes) {
  const int d = params.dim;
  const double width = 2.0 * range / nodes;
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(std::pow(nodes, d)));
  Eigen::VectorXd x(d);
  std::vector<int> idx(d, 0);
  while (true) {
    for (int k = 0; k < d; ++k) {
      x[k] = -range + (idx[k] + 0.5) * width;
    }
    logs.push_back(-params.tau * quartic_energy(x));
    int k = 0;
    for (; k < d; ++k) {
      if (++idx[k] < nodes) break;
      idx[k] = 0;
    }
    if (k == d) break;
  }
  return log_sum_exp_stream(logs) + d * std::log(width);
}

}  // namespace

LogPartitionResult quartic_log_partition(const QuarticParams& params,
                                         const QuadratureSpec& quad) {
  if (params.dim > 3) {
    throw CapabilityError(
        "quartic_log_partition: tensor-grid quadrature supports dim <= 3; "
        "use Monte Carlo estimation for higher dimensions");
  }
  if (quad.range <= 0.0 || quad.nodes_per_axis < 2) {
    throw InputError("quartic_log_partition: invalid quadrature spec");
  }
  const double coarse =
      quartic_log_z_on_grid(params, quad.range, quad.nodes_per_axis);
  const double fine =
      quartic_log_z_on_grid(params, quad.range, 2 * quad.nodes_per_axis);
  LogPartitionResult result;
  result.log_z = fine;
  result.refinement_delta = std::abs(fine - coarse);
  result.converged =
      result.refinement_delta <= 1e-6 * std::max(1.0, std::abs(fine));
  return result;
}

int spec_dimension(const ModelSpec& spec) {
  return std::visit(
      [](const auto& p) -> int {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianParams>) return p.dim();
        if constexpr (std::is_same_v<T, QuarticParams>) return p.dim;
        if constexpr (std::is_same_v<T, RbmParams>) return p.visible_dim();
      },
      spec);
}

ScoreModel spec_to_model(const ModelSpec& spec) {
  return std::visit(
      [](const auto& p) -> ScoreModel {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianParams>) {
          return gaussian_model(p);
        }
        if constexpr (std::is_same_v<T, QuarticParams>) {
          return quartic_model(p);
        }
        if constexpr (std::is_same_v<T, RbmParams>) {
          return rbm_model(p);
        }
      },
      spec);
}

std::string spec_type_name(const ModelSpec& spec) {
  if (std::holds_alternative<GaussianParams>(spec)) return "gaussian";
  if (std::holds_alternative<QuarticParams>(spec)) return "quartic";
  return "rbm";
}

namespace {

using nlohmann::json;

Eigen::VectorXd json_to_vector(const json& j, const char* field) {
  if (!j.is_array()) {
    throw InputError(std::string("model spec: ") + field + " must be an array");
  }
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw InputError(std::string("model spec: ") + field +
                       " has a non-numeric entry");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd json_to_matrix(const json& j, const char* field) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw InputError(std::string("model spec: ") + field +
                     " must be an array of arrays");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw InputError(std::string("model spec: ") + field +
                       " has ragged rows");
    }
    for (std::size_t col = 0; col < cols; ++col) {
      if (!j[r][col].is_number()) {
        throw InputError(std::string("model spec: ") + field +
                         " has a non-numeric entry");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) =
          j[r][col].get<double>();
    }
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

ModelSpec spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type")) {
    throw InputError("model spec: missing \"type\" field");
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "gaussian") {
    if (!j.contains("mean") || !j.contains("cov")) {
      throw InputError("model spec: gaussian requires \"mean\" and \"cov\"");
    }
    return GaussianParams(json_to_vector(j.at("mean"), "mean"),
                          json_to_matrix(j.at("cov"), "cov"));
  }
  if (type == "quartic") {
    if (!j.contains("tau") || !j.contains("d")) {
      throw InputError("model spec: quartic requires \"tau\" and \"d\"");
    }
    return QuarticParams(j.at("tau").get<double>(), j.at("d").get<int>());
  }
  if (type == "rbm") {
    if (!j.contains("W") || !j.contains("b") || !j.contains("c")) {
      throw InputError("model spec: rbm requires \"W\", \"b\" and \"c\"");
    }
    return RbmParams(json_to_matrix(j.at("W"), "W"),
                     json_to_vector(j.at("b"), "b"),
                     json_to_vector(j.at("c"), "c"));
  }
  throw InputError("model spec: unknown type \"" + type + "\"");
}

}  // namespace

ModelSpec parse_model_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("model spec: invalid JSON: ") + e.what());
  }
  return spec_from_json(j);
}

ModelSpec load_model_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open model file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_spec(buf.str());
}

std::string model_spec_to_json(const ModelSpec& spec) {
  json j;
  std::visit(
      [&j](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianParams>) {
          j["type"] = "gaussian";
          j["mean"] = vector_to_json(p.mean());
          j["cov"] = matrix_to_json(p.cov());
        } else if constexpr (std::is_same_v<T, QuarticParams>) {
          j["type"] = "quartic";
          j["tau"] = p.tau;
          j["d"] = p.dim;
        } else {
          j["type"] = "rbm";
          j["W"] = matrix_to_json(p.W);
          j["b"] = vector_to_json(p.b);
          j["c"] = vector_to_json(p.c);
        }
      },
      spec);
  return j.dump(2);
}

void save_model_spec(const ModelSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write model file: " + path);
  }
  out << model_spec_to_json(spec) << "\n";
}

}  // namespace hst
