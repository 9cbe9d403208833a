#include "hst/samplers.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "hst/rng.hpp"

namespace hst {

namespace {

std::string format_state(const Eigen::VectorXd& x) {
  std::ostringstream out;
  out << "[";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) out << ", ";
    out << x[i];
  }
  out << "]";
  return out.str();
}

Eigen::VectorXd checked_gradient(const ScoreModel& model,
                                 const Eigen::VectorXd& x, const char* who) {
  Eigen::VectorXd g = model.grad_log_density(x);
  if (!g.allFinite()) {
    throw NumericError(std::string(who) +
                       ": non-finite gradient at state " + format_state(x));
  }
  return g;
}

// A fresh distribution per call: normal_distribution caches a spare draw,
// and sharing that state across chains would break per-seed determinism.
Eigen::VectorXd standard_normal(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = normal(rng);
  return z;
}

}  // namespace

void ChainConfig::validate() const {
  if (burn_in < 0) throw InputError("ChainConfig: burn_in must be >= 0");
  if (thinning < 1) throw InputError("ChainConfig: thinning must be >= 1");
  if (!(step > 0.0)) throw InputError("ChainConfig: step must be positive");
  if (leapfrog_steps < 1) {
    throw InputError("ChainConfig: leapfrog_steps must be >= 1");
  }
}

ChainConfig ChainConfig::gibbs_defaults(std::uint64_t seed) {
  ChainConfig cfg;
  cfg.burn_in = 1000;
  cfg.thinning = 1;
  cfg.seed = seed;
  return cfg;
}

Eigen::MatrixXd sample_gaussian_exact(const GaussianParams& params, int n,
                                      std::uint64_t seed) {
  if (n < 1) throw InputError("sample_gaussian_exact: n must be >= 1");
  std::mt19937_64 rng = make_engine(seed, {0x9a55u});
  const int d = params.dim();
  Eigen::MatrixXd out(n, d);
  for (int i = 0; i < n; ++i) {
    out.row(i) =
        (params.mean() + params.chol() * standard_normal(d, rng)).transpose();
  }
  return out;
}

ChainResult mala_chain(const ScoreModel& model, const Eigen::VectorXd& init,
                       const ChainConfig& cfg, int n) {
  cfg.validate();
  if (n < 1) throw InputError("mala_chain: n must be >= 1");
  if (init.size() != model.dim) {
    throw InputError("mala_chain: init has wrong dimension");
  }
  if (!model.has_unnorm_log_density() && !model.has_log_density()) {
    throw CapabilityError(
        "mala_chain: model must expose a log density for the accept step");
  }

  std::mt19937_64 rng = make_engine(cfg.seed, {0x3a1au});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double eps = cfg.step;
  const double eps2 = eps * eps;

  Eigen::VectorXd x = init;
  Eigen::VectorXd grad = checked_gradient(model, x, "mala_chain");
  double logp = model.any_unnorm_log_density(x);

  ChainResult result;
  result.samples.resize(n, model.dim);
  const long total = static_cast<long>(cfg.burn_in) +
                     static_cast<long>(n) * cfg.thinning;
  long kept = 0;
  long accepted = 0, proposed = 0;

  for (long step_i = 0; step_i < total; ++step_i) {
    const Eigen::VectorXd noise = standard_normal(model.dim, rng);
    const Eigen::VectorXd mean_fwd = x + 0.5 * eps2 * grad;
    const Eigen::VectorXd prop = mean_fwd + eps * noise;

    const Eigen::VectorXd grad_prop = checked_gradient(model, prop, "mala_chain");
    const double logp_prop = model.any_unnorm_log_density(prop);
    const Eigen::VectorXd mean_rev = prop + 0.5 * eps2 * grad_prop;

    const double log_q_fwd = -(prop - mean_fwd).squaredNorm() / (2.0 * eps2);
    const double log_q_rev = -(x - mean_rev).squaredNorm() / (2.0 * eps2);
    const double log_ratio = (logp_prop - logp) + (log_q_rev - log_q_fwd);

    const bool past_burn_in = step_i >= cfg.burn_in;
    if (past_burn_in) ++proposed;
    if (std::log(unif(rng)) < log_ratio) {
      x = prop;
      grad = grad_prop;
      logp = logp_prop;
      if (past_burn_in) ++accepted;
    }
    if (past_burn_in && (step_i - cfg.burn_in + 1) % cfg.thinning == 0) {
      result.samples.row(kept++) = x.transpose();
    }
  }
  result.acceptance_rate =
      proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0;
  return result;
}

void leapfrog_integrate(const ScoreModel& model, Eigen::VectorXd& q,
                        Eigen::VectorXd& p, double step, int n_steps) {
  p += 0.5 * step * checked_gradient(model, q, "leapfrog_integrate");
  for (int l = 0; l < n_steps; ++l) {
    q += step * p;
    if (l + 1 < n_steps) {
      p += step * checked_gradient(model, q, "leapfrog_integrate");
    }
  }
  p += 0.5 * step * checked_gradient(model, q, "leapfrog_integrate");
}

ChainResult hmc_chain(const ScoreModel& model, const Eigen::VectorXd& init,
                      const ChainConfig& cfg, int n) {
  cfg.validate();
  if (n < 1) throw InputError("hmc_chain: n must be >= 1");
  if (init.size() != model.dim) {
    throw InputError("hmc_chain: init has wrong dimension");
  }
  if (!model.has_unnorm_log_density() && !model.has_log_density()) {
    throw CapabilityError(
        "hmc_chain: model must expose a log density for the accept step");
  }

  std::mt19937_64 rng = make_engine(cfg.seed, {0x4cu});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double eps = cfg.step;

  Eigen::VectorXd x = init;
  double potential = -model.any_unnorm_log_density(x);

  ChainResult result;
  result.samples.resize(n, model.dim);
  const long total = static_cast<long>(cfg.burn_in) +
                     static_cast<long>(n) * cfg.thinning;
  long kept = 0;
  long accepted = 0, proposed = 0;

  for (long step_i = 0; step_i < total; ++step_i) {
    Eigen::VectorXd q = x;
    Eigen::VectorXd p = standard_normal(model.dim, rng);
    const double h_start = potential + 0.5 * p.squaredNorm();

    leapfrog_integrate(model, q, p, eps, cfg.leapfrog_steps);

    const double potential_prop = -model.any_unnorm_log_density(q);
    const double h_end = potential_prop + 0.5 * p.squaredNorm();
    const double energy_error = h_end - h_start;

    const bool past_burn_in = step_i >= cfg.burn_in;
    if (past_burn_in) ++proposed;
    if (std::abs(energy_error) > 1e3 || !std::isfinite(energy_error)) {
      ++result.divergences;
    } else if (std::log(unif(rng)) < -energy_error) {
      x = q;
      potential = potential_prop;
      if (past_burn_in) ++accepted;
    }
    if (past_burn_in && (step_i - cfg.burn_in + 1) % cfg.thinning == 0) {
      result.samples.row(kept++) = x.transpose();
    }
  }
  result.acceptance_rate =
      proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0;
  return result;
}

Eigen::MatrixXd rbm_gibbs_chain(const RbmParams& params,
                                const Eigen::VectorXd& init,
                                const ChainConfig& cfg, int n) {
  cfg.validate();
  if (n < 1) throw InputError("rbm_gibbs_chain: n must be >= 1");
  if (init.size() != params.visible_dim()) {
    throw InputError("rbm_gibbs_chain: init has wrong dimension");
  }

  std::mt19937_64 rng = make_engine(cfg.seed, {0x61bb5u});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int dx = params.visible_dim();
  const int dh = params.hidden_dim();

  Eigen::VectorXd x = init;
  Eigen::VectorXd h(dh);
  const auto sweep = [&] {
    const Eigen::VectorXd probs = rbm_hidden_means(params, x);
    for (int j = 0; j < dh; ++j) h[j] = unif(rng) < probs[j] ? 1.0 : 0.0;
    x = params.b + params.W * h + standard_normal(dx, rng);
  };

  for (int s = 0; s < cfg.burn_in; ++s) sweep();
  Eigen::MatrixXd out(n, dx);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < cfg.thinning; ++s) sweep();
    out.row(i) = x.transpose();
  }
  return out;
}

MixtureMoments rbm_exact_mixture_moments(const RbmParams& params) {
  const int dh = params.hidden_dim();
  if (dh > 12) {
    throw CapabilityError(
        "rbm_exact_mixture_moments: hidden dimension too large to enumerate");
  }
  const int dx = params.visible_dim();
  const std::size_t count = std::size_t{1} << dh;

  // log weight of pattern h: c'h + 0.5*||b+Wh||^2 - 0.5*||b||^2
  std::vector<double> log_w(count);
  std::vector<Eigen::VectorXd> centers(count);
  double max_log_w = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd h(dh);
  for (std::size_t mask = 0; mask < count; ++mask) {
    for (int j = 0; j < dh; ++j) h[j] = (mask >> j) & 1u ? 1.0 : 0.0;
    centers[mask] = params.b + params.W * h;
    log_w[mask] = params.c.dot(h) + 0.5 * centers[mask].squaredNorm() -
                  0.5 * params.b.squaredNorm();
    max_log_w = std::max(max_log_w, log_w[mask]);
  }
  double z = 0.0;
  for (double& lw : log_w) {
    lw = std::exp(lw - max_log_w);
    z += lw;
  }

  MixtureMoments mm;
  mm.mean = Eigen::VectorXd::Zero(dx);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dx, dx);
  for (std::size_t mask = 0; mask < count; ++mask) {
    const double w = log_w[mask] / z;
    mm.mean += w * centers[mask];
    second += w * centers[mask] * centers[mask].transpose();
  }
  mm.cov = Eigen::MatrixXd::Identity(dx, dx) + second -
           mm.mean * mm.mean.transpose();
  return mm;
}

namespace {

double tuned_step(const ScoreModel& model, const Eigen::VectorXd& init,
                  std::uint64_t seed, double initial_step, int leapfrog_steps,
                  double target_accept, bool use_hmc) {
  double step = initial_step;
  Eigen::VectorXd state = init;
  for (int round = 0; round < 20; ++round) {
    ChainConfig cfg;
    cfg.burn_in = 0;
    cfg.thinning = 1;
    cfg.step = step;
    cfg.leapfrog_steps = leapfrog_steps;
    cfg.seed = substream_seed(seed, {0x7e5eu, static_cast<std::uint64_t>(round)});
    const ChainResult r = use_hmc ? hmc_chain(model, state, cfg, 100)
                                  : mala_chain(model, state, cfg, 100);
    state = r.samples.row(r.samples.rows() - 1).transpose();
    step *= std::exp(0.6 * (r.acceptance_rate - target_accept));
  }
  return step;
}

}  // namespace

double tune_mala_step(const ScoreModel& model, const Eigen::VectorXd& init,
                      std::uint64_t seed, double initial_step,
                      double target_accept) {
  return tuned_step(model, init, seed, initial_step, 1, target_accept, false);
}

double tune_hmc_step(const ScoreModel& model, const Eigen::VectorXd& init,
                     std::uint64_t seed, double initial_step,
                     int leapfrog_steps, double target_accept) {
  return tuned_step(model, init, seed, initial_step, leapfrog_steps,
                    target_accept, true);
}

}  // namespace hst
