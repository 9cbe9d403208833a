#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hst/exponents.hpp"
#include "hst/score.hpp"

namespace hst {

/// Decision rule of the score test: 1 iff the average per-point difference
/// S_H(X, p_null) - S_H(X, p_alt) strictly exceeds the threshold. Ties
/// decide 0.
int hst_decide(const ScoreModel& null_model, const ScoreModel& alt_model,
               const Eigen::MatrixXd& X, double threshold);

/// Likelihood ratio rule, normalized per sample so one threshold is
/// comparable across n: 1 iff (1/n) sum [log p_alt(X_i) - log p_null(X_i)]
/// strictly exceeds the threshold. Both models must expose exact log
/// densities (attach a log normalizer to an unnormalized model first).
int lrt_decide(const ScoreModel& null_model, const ScoreModel& alt_model,
               const Eigen::MatrixXd& X, double threshold);

/// Returns a copy of the model whose exact log density is the unnormalized
/// one minus log_z.
ScoreModel with_log_normalizer(const ScoreModel& model, double log_z);

enum class ThresholdPolicy { midpoint, n1_balance, fixed };

struct ChosenThreshold {
  double value = 0.0;
  /// n1-balance with separated pools: any threshold in the gap works; the
  /// gap midpoint is returned and flagged.
  bool gap = false;
};

/// Threshold selection from score-difference pools (both oriented as
/// D = S(., p_null) - S(., p_alt)).
///   midpoint:   center of the positive-exponent interval, via the slope
///               identity (mean of null pool, mean of alt pool).
///   n1-balance: equalizes the empirical single-sample error rates by
///               bisection on the pools' empirical CDFs.
///   fixed:      passthrough of fixed_value.
ChosenThreshold choose_threshold(const DifferenceSample& null_diffs,
                                 const DifferenceSample& alt_diffs,
                                 ThresholdPolicy policy,
                                 double fixed_value = 0.0);

struct SweepConfig {
  std::vector<int> n_list = {1, 2, 4, 8, 16, 32, 64, 128};
  int trials_per_n = 10000;
  int pool_size = 10000;
  double threshold = 0.0;
  int runs = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One row per (run, n). Empirical exponents are stored as the signed
/// logged ratios log(rate)/n (nonpositive); the theoretical columns hold
/// the nonnegative exponents phi*.
struct ErrorSweepRow {
  int run = 0;
  int n = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double emp_exp1 = 0.0;
  double emp_exp2 = 0.0;
  double theo_exp1 = 0.0;
  double theo_exp2 = 0.0;
};

struct ErrorSweepTable {
  std::vector<ErrorSweepRow> rows;
  static const char* csv_header();  // run,n,alpha,...
  std::string to_csv() const;
};

/// Deterministic with-replacement index draws for one trial, keyed by
/// (seed, run, n, trial, hypothesis). The sweep consumes exactly these
/// indices, so a slow path can reproduce any trial point set.
std::vector<int> trial_indices(std::uint64_t seed, int run, int n, int trial,
                               int pool_size, Hypothesis source);

/// Resampling error sweep. Per-point score differences are computed once
/// per pool; each trial then averages n cached values, so cost is O(n) per
/// trial. Error rates are add-one smoothed: (errors + 1) / (trials + 1),
/// which keeps the logged ratios finite when no errors occur. Theoretical
/// exponents are the pool-MGF Chernoff exponents at cfg.threshold.
/// Runs are labeled run_base .. run_base + cfg.runs - 1.
ErrorSweepTable empirical_error_sweep(const Eigen::MatrixXd& null_pool,
                                      const Eigen::MatrixXd& alt_pool,
                                      const ScoreModel& null_model,
                                      const ScoreModel& alt_model,
                                      const SweepConfig& cfg, int run_base = 0);

/// Same sweep on precomputed difference pools (same orientation for both).
ErrorSweepTable empirical_error_sweep_from_diffs(
    const DifferenceSample& null_diffs, const DifferenceSample& alt_diffs,
    const SweepConfig& cfg, int run_base = 0);

/// Score test vs likelihood ratio test at matched empirical size. Both
/// statistics are evaluated on the same resampled index sets; each test's
/// threshold is the empirical upper alpha_target quantile of its own null
/// trial statistics.
struct EqualAlphaComparison {
  double alpha_hst = 0.0;
  double alpha_lrt = 0.0;
  double beta_hst = 0.0;
  double beta_lrt = 0.0;
  /// Standard error of beta_lrt - beta_hst under independent binomials.
  double beta_se_pooled = 0.0;
};

EqualAlphaComparison equal_alpha_comparison(const Eigen::MatrixXd& null_pool,
                                            const Eigen::MatrixXd& alt_pool,
                                            const ScoreModel& null_model,
                                            const ScoreModel& alt_model,
                                            int n, int trials,
                                            double alpha_target,
                                            std::uint64_t seed);

}  // namespace hst
