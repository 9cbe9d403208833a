#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "hst/models.hpp"
#include "hst/score.hpp"

namespace hst {

/// Knobs shared by the MCMC chains. step is the MALA step or the HMC
/// leapfrog step; leapfrog_steps only matters for HMC; thinning is the
/// number of sweeps per retained sample for Gibbs.
struct ChainConfig {
  int burn_in = 5000;
  int thinning = 1;
  double step = 0.5;
  int leapfrog_steps = 20;
  std::uint64_t seed = 0;

  void validate() const;
  /// Gibbs default: 1000 burn-in sweeps.
  static ChainConfig gibbs_defaults(std::uint64_t seed);
};

/// Post-burn-in thinned samples, one point per row, plus chain diagnostics.
struct ChainResult {
  Eigen::MatrixXd samples;
  double acceptance_rate = 0.0;
  int divergences = 0;
};

/// i.i.d. draws via the Cholesky factor of the covariance. Deterministic
/// given the seed.
Eigen::MatrixXd sample_gaussian_exact(const GaussianParams& params, int n,
                                      std::uint64_t seed);

/// Metropolis adjusted Langevin: proposal x + (step^2/2) grad_log(x) + step*xi
/// with the asymmetric-Gaussian Metropolis-Hastings correction. The model
/// must expose a log density (possibly unnormalized) for the accept step.
ChainResult mala_chain(const ScoreModel& model, const Eigen::VectorXd& init,
                       const ChainConfig& cfg, int n);

/// One leapfrog trajectory in place (unit mass). Exposed for reversibility
/// checks; hmc_chain uses it internally.
void leapfrog_integrate(const ScoreModel& model, Eigen::VectorXd& q,
                        Eigen::VectorXd& p, double step, int n_steps);

/// Hamiltonian Monte Carlo with unit mass and leapfrog integration.
/// Trajectories with |energy error| > 1e3 count as divergences and are
/// rejected.
ChainResult hmc_chain(const ScoreModel& model, const Eigen::VectorXd& init,
                      const ChainConfig& cfg, int n);

/// Blocked Gibbs for the Gauss-Bernoulli RBM: h|x Bernoulli(sigmoid(W'x+c)),
/// x|h N(b+Wh, I). Returns visible samples.
Eigen::MatrixXd rbm_gibbs_chain(const RbmParams& params,
                                const Eigen::VectorXd& init,
                                const ChainConfig& cfg, int n);

/// Exact first two moments of the RBM visible marginal, a mixture of
/// 2^{d_h} unit-covariance Gaussians. Enumerates the hidden space, so
/// d_h <= 12.
struct MixtureMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
MixtureMoments rbm_exact_mixture_moments(const RbmParams& params);

/// Multiplicative step adaptation from short pre-runs; returns the tuned
/// step. Standard targets: 0.57 for MALA, 0.8 for HMC.
double tune_mala_step(const ScoreModel& model, const Eigen::VectorXd& init,
                      std::uint64_t seed, double initial_step = 0.5,
                      double target_accept = 0.57);
double tune_hmc_step(const ScoreModel& model, const Eigen::VectorXd& init,
                     std::uint64_t seed, double initial_step = 0.1,
                     int leapfrog_steps = 20, double target_accept = 0.8);

}  // namespace hst
