#include "hst/testing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hst/rng.hpp"

namespace hst {

int hst_decide(const ScoreModel& null_model, const ScoreModel& alt_model,
               const Eigen::MatrixXd& X, double threshold) {
  if (X.rows() == 0) throw InputError("hst_decide: empty sample");
  const double stat = hyvarinen_score_sample(null_model, X) -
                      hyvarinen_score_sample(alt_model, X);
  return stat > threshold ? 1 : 0;
}

int lrt_decide(const ScoreModel& null_model, const ScoreModel& alt_model,
               const Eigen::MatrixXd& X, double threshold) {
  if (X.rows() == 0) throw InputError("lrt_decide: empty sample");
  if (!null_model.has_log_density() || !alt_model.has_log_density()) {
    throw CapabilityError(
        "lrt_decide: both models need exact log densities; attach a log "
        "normalizer to unnormalized models first");
  }
  double stat = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    stat += alt_model.log_density(x) - null_model.log_density(x);
  }
  stat /= static_cast<double>(X.rows());
  return stat > threshold ? 1 : 0;
}

ScoreModel with_log_normalizer(const ScoreModel& model, double log_z) {
  if (!model.has_unnorm_log_density()) {
    throw CapabilityError(
        "with_log_normalizer: model has no unnormalized log density");
  }
  ScoreModel out = model;
  const auto unnorm = model.unnorm_log_density;
  out.log_density = [unnorm, log_z](const Eigen::VectorXd& x) {
    return unnorm(x) - log_z;
  };
  return out;
}

ChosenThreshold choose_threshold(const DifferenceSample& null_diffs,
                                 const DifferenceSample& alt_diffs,
                                 ThresholdPolicy policy, double fixed_value) {
  ChosenThreshold out;
  if (policy == ThresholdPolicy::fixed) {
    out.value = fixed_value;
    return out;
  }
  if (policy == ThresholdPolicy::midpoint) {
    const ThresholdRange range =
        threshold_range_from_diffs(null_diffs, alt_diffs);
    out.value = 0.5 * (range.lo + range.hi);
    return out;
  }

  // n1-balance: equalize P_null(D > T) and P_alt(D <= T) on the pools.
  std::vector<double> null_sorted(null_diffs.values.begin(),
                                  null_diffs.values.end());
  std::vector<double> alt_sorted(alt_diffs.values.begin(),
                                 alt_diffs.values.end());
  std::sort(null_sorted.begin(), null_sorted.end());
  std::sort(alt_sorted.begin(), alt_sorted.end());

  if (null_sorted.back() < alt_sorted.front()) {
    out.value = 0.5 * (null_sorted.back() + alt_sorted.front());
    out.gap = true;
    return out;
  }

  const auto alpha_at = [&](double t) {
    const auto it =
        std::upper_bound(null_sorted.begin(), null_sorted.end(), t);
    return static_cast<double>(null_sorted.end() - it) / null_sorted.size();
  };
  const auto beta_at = [&](double t) {
    const auto it = std::upper_bound(alt_sorted.begin(), alt_sorted.end(), t);
    return static_cast<double>(it - alt_sorted.begin()) / alt_sorted.size();
  };

  double lo = std::min(null_sorted.front(), alt_sorted.front());
  double hi = std::max(null_sorted.back(), alt_sorted.back());
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (alpha_at(mid) > beta_at(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.value = 0.5 * (lo + hi);
  return out;
}

void SweepConfig::validate() const {
  if (n_list.empty()) throw InputError("SweepConfig: empty n_list");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1) throw InputError("SweepConfig: n values must be >= 1");
    if (i > 0 && n_list[i] <= n_list[i - 1]) {
      throw InputError("SweepConfig: n_list must be sorted ascending");
    }
  }
  if (trials_per_n < 1) throw InputError("SweepConfig: trials_per_n must be >= 1");
  if (pool_size < 1) throw InputError("SweepConfig: pool_size must be >= 1");
  if (runs < 1) throw InputError("SweepConfig: runs must be >= 1");
}

const char* ErrorSweepTable::csv_header() {
  return "run,n,alpha,beta,emp_exp1,emp_exp2,theo_exp1,theo_exp2";
}

std::string ErrorSweepTable::to_csv() const {
  std::string out = csv_header();
  out += "\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.run, r.n,
                  r.alpha, r.beta, r.emp_exp1, r.emp_exp2, r.theo_exp1,
                  r.theo_exp2);
    out += buf;
  }
  return out;
}

namespace {

constexpr std::uint64_t kAltStreamTag = 0xa17;

std::uint64_t trial_stream_seed(std::uint64_t seed, int run, int n, int trial,
                                Hypothesis source) {
  if (source == Hypothesis::null_hypothesis) {
    return substream_seed(seed, {static_cast<std::uint64_t>(run),
                                 static_cast<std::uint64_t>(n),
                                 static_cast<std::uint64_t>(trial)});
  }
  return substream_seed(seed, {kAltStreamTag, static_cast<std::uint64_t>(run),
                               static_cast<std::uint64_t>(n),
                               static_cast<std::uint64_t>(trial)});
}

}  // namespace

std::vector<int> trial_indices(std::uint64_t seed, int run, int n, int trial,
                               int pool_size, Hypothesis source) {
  SplitMix64 eng(trial_stream_seed(seed, run, n, trial, source));
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    idx[static_cast<std::size_t>(k)] =
        static_cast<int>(eng.index(static_cast<std::size_t>(pool_size)));
  }
  return idx;
}

ErrorSweepTable empirical_error_sweep_from_diffs(
    const DifferenceSample& null_diffs, const DifferenceSample& alt_diffs,
    const SweepConfig& cfg, int run_base) {
  cfg.validate();
  if (null_diffs.size() < cfg.pool_size || alt_diffs.size() < cfg.pool_size) {
    throw InputError("empirical_error_sweep: pools smaller than pool_size");
  }

  const double T = cfg.threshold;
  // Pool-level Chernoff exponents; the alt-pool differences get negated to
  // take the type-II role.
  const double theo1 = type1_exponent_empirical(null_diffs, T).exponent;
  const DifferenceSample alt_flipped = DifferenceSample::make(
      -alt_diffs.values, Hypothesis::alternative);
  const double theo2 = type2_exponent_empirical(alt_flipped, T).exponent;

  ErrorSweepTable table;
  table.rows.reserve(static_cast<std::size_t>(cfg.runs) * cfg.n_list.size());
  const double* null_vals = null_diffs.values.data();
  const double* alt_vals = alt_diffs.values.data();
  const auto pool = static_cast<std::size_t>(cfg.pool_size);

  for (int run = run_base; run < run_base + cfg.runs; ++run) {
    for (int n : cfg.n_list) {
      long false_alarms = 0;
      long misses = 0;
      for (int trial = 0; trial < cfg.trials_per_n; ++trial) {
        SplitMix64 eng(trial_stream_seed(cfg.seed, run, n, trial,
                                         Hypothesis::null_hypothesis));
        double sum_null = 0.0;
        for (int k = 0; k < n; ++k) sum_null += null_vals[eng.index(pool)];
        if (sum_null / n > T) ++false_alarms;

        SplitMix64 eng_alt(trial_stream_seed(cfg.seed, run, n, trial,
                                             Hypothesis::alternative));
        double sum_alt = 0.0;
        for (int k = 0; k < n; ++k) sum_alt += alt_vals[eng_alt.index(pool)];
        if (!(sum_alt / n > T)) ++misses;
      }
      ErrorSweepRow row;
      row.run = run;
      row.n = n;
      row.alpha = (false_alarms + 1.0) / (cfg.trials_per_n + 1.0);
      row.beta = (misses + 1.0) / (cfg.trials_per_n + 1.0);
      row.emp_exp1 = std::log(row.alpha) / n;
      row.emp_exp2 = std::log(row.beta) / n;
      row.theo_exp1 = theo1;
      row.theo_exp2 = theo2;
      table.rows.push_back(row);
    }
  }
  return table;
}

ErrorSweepTable empirical_error_sweep(const Eigen::MatrixXd& null_pool,
                                      const Eigen::MatrixXd& alt_pool,
                                      const ScoreModel& null_model,
                                      const ScoreModel& alt_model,
                                      const SweepConfig& cfg, int run_base) {
  const DifferenceSample null_diffs = score_differences(
      null_model, alt_model, null_pool, Hypothesis::null_hypothesis);
  const DifferenceSample alt_diffs = score_differences(
      null_model, alt_model, alt_pool, Hypothesis::alternative);
  return empirical_error_sweep_from_diffs(null_diffs, alt_diffs, cfg, run_base);
}

namespace {

double upper_quantile(std::vector<double> values, double alpha) {
  std::sort(values.begin(), values.end());
  const auto k = static_cast<std::size_t>(
      std::floor((1.0 - alpha) * static_cast<double>(values.size())));
  return values[std::min(k, values.size() - 1)];
}

}  // namespace

EqualAlphaComparison equal_alpha_comparison(const Eigen::MatrixXd& null_pool,
                                            const Eigen::MatrixXd& alt_pool,
                                            const ScoreModel& null_model,
                                            const ScoreModel& alt_model,
                                            int n, int trials,
                                            double alpha_target,
                                            std::uint64_t seed) {
  if (n < 1 || trials < 1) {
    throw InputError("equal_alpha_comparison: n and trials must be >= 1");
  }
  if (!(alpha_target > 0.0 && alpha_target < 1.0)) {
    throw InputError("equal_alpha_comparison: alpha_target must be in (0,1)");
  }

  // Per-point statistics cached once per pool.
  const auto point_stats = [&](const Eigen::MatrixXd& pool) {
    std::pair<Eigen::VectorXd, Eigen::VectorXd> out;
    out.first.resize(pool.rows());
    out.second.resize(pool.rows());
    for (Eigen::Index i = 0; i < pool.rows(); ++i) {
      const Eigen::VectorXd x = pool.row(i).transpose();
      out.first[i] = score_difference(null_model, alt_model, x);
      out.second[i] =
          alt_model.log_density(x) - null_model.log_density(x);
    }
    return out;
  };
  if (!null_model.has_log_density() || !alt_model.has_log_density()) {
    throw CapabilityError(
        "equal_alpha_comparison: both models need exact log densities");
  }
  const auto [null_hst, null_lrt] = point_stats(null_pool);
  const auto [alt_hst, alt_lrt] = point_stats(alt_pool);

  const auto trial_means = [&](const Eigen::VectorXd& first,
                               const Eigen::VectorXd& second,
                               std::uint64_t tag) {
    std::pair<std::vector<double>, std::vector<double>> out;
    out.first.resize(static_cast<std::size_t>(trials));
    out.second.resize(static_cast<std::size_t>(trials));
    const auto pool = static_cast<std::size_t>(first.size());
    for (int t = 0; t < trials; ++t) {
      SplitMix64 eng(substream_seed(
          seed, {tag, static_cast<std::uint64_t>(n),
                 static_cast<std::uint64_t>(t)}));
      double s1 = 0.0, s2 = 0.0;
      for (int k = 0; k < n; ++k) {
        const std::size_t idx = eng.index(pool);
        s1 += first[static_cast<Eigen::Index>(idx)];
        s2 += second[static_cast<Eigen::Index>(idx)];
      }
      out.first[static_cast<std::size_t>(t)] = s1 / n;
      out.second[static_cast<std::size_t>(t)] = s2 / n;
    }
    return out;
  };

  const auto [null_stat_hst, null_stat_lrt] =
      trial_means(null_hst, null_lrt, 0x0u);
  const auto [alt_stat_hst, alt_stat_lrt] =
      trial_means(alt_hst, alt_lrt, 0x1u);

  const double thr_hst = upper_quantile(null_stat_hst, alpha_target);
  const double thr_lrt = upper_quantile(null_stat_lrt, alpha_target);

  EqualAlphaComparison cmp;
  long fa_hst = 0, fa_lrt = 0, miss_hst = 0, miss_lrt = 0;
  for (int t = 0; t < trials; ++t) {
    const auto u = static_cast<std::size_t>(t);
    if (null_stat_hst[u] > thr_hst) ++fa_hst;
    if (null_stat_lrt[u] > thr_lrt) ++fa_lrt;
    if (!(alt_stat_hst[u] > thr_hst)) ++miss_hst;
    if (!(alt_stat_lrt[u] > thr_lrt)) ++miss_lrt;
  }
  const double m = static_cast<double>(trials);
  cmp.alpha_hst = fa_hst / m;
  cmp.alpha_lrt = fa_lrt / m;
  cmp.beta_hst = miss_hst / m;
  cmp.beta_lrt = miss_lrt / m;
  cmp.beta_se_pooled =
      std::sqrt(cmp.beta_hst * (1.0 - cmp.beta_hst) / m +
                cmp.beta_lrt * (1.0 - cmp.beta_lrt) / m);
  return cmp;
}

}  // namespace hst
