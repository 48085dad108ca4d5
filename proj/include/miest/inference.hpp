#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "miest/core.hpp"
#include "miest/kde.hpp"
#include "miest/rng.hpp"

namespace miest {

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

// Acklam's rational approximation with one Halley refinement step against
// normal_cdf; accurate to ~1e-14 across (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("quantile probability must lie in (0, 1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * 2.5066282746310002 * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

enum class VarianceMethod { Bootstrap, Subsample };

inline const char* variance_method_name(VarianceMethod m) {
  return m == VarianceMethod::Bootstrap ? "bootstrap" : "subsample";
}

struct ConfidenceReport {
  double estimate = 0.0;
  double std_error = 0.0;
  double level = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  VarianceMethod variance_method = VarianceMethod::Bootstrap;
};

namespace detail {

inline Dataset take_rows(const Dataset& d, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  if (d.x_cont) {
    RowMatrixXd M(m, d.x_cont->cols());
    for (Eigen::Index p = 0; p < m; ++p) M.row(p) = d.x_cont->row(rows[p]);
    out.x_cont = std::move(M);
  }
  if (d.y_cont) {
    RowMatrixXd M(m, d.y_cont->cols());
    for (Eigen::Index p = 0; p < m; ++p) M.row(p) = d.y_cont->row(rows[p]);
    out.y_cont = std::move(M);
  }
  if (d.x_disc) {
    std::vector<int> v(rows.size());
    for (std::size_t p = 0; p < rows.size(); ++p)
      v[p] = (*d.x_disc)[static_cast<std::size_t>(rows[p])];
    out.x_disc = std::move(v);
  }
  if (d.y_disc) {
    std::vector<int> v(rows.size());
    for (std::size_t p = 0; p < rows.size(); ++p)
      v[p] = (*d.y_disc)[static_cast<std::size_t>(rows[p])];
    out.y_disc = std::move(v);
  }
  return out;
}

inline double sample_sd(const std::vector<double>& v) {
  const auto n = v.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

// Fisher-Yates partial shuffle: the first k entries of a fresh index vector.
inline std::vector<Eigen::Index> draw_without_replacement(
    Rng& rng, const std::vector<Eigen::Index>& pool, std::size_t k) {
  std::vector<Eigen::Index> v = pool;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(
                                  static_cast<std::uint64_t>(v.size() - i)));
    std::swap(v[i], v[j]);
  }
  v.resize(k);
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace detail

// Normal-quantile interval around the point estimate, with the standard
// error taken from bootstrap resamples (with replacement, stratified by
// class when Y is categorical) or from half-sample subsampling with
// sqrt(2) rescaling. The estimator callable is re-run on every replicate,
// so data-dependent choices (class counts, scheduled bandwidths) are
// recomputed per replicate.
inline ConfidenceReport confidence_interval(
    const Dataset& data,
    const std::function<double(const Dataset&)>& estimator, double level,
    VarianceMethod method = VarianceMethod::Bootstrap, int B = 200,
    std::uint64_t seed = 0) {
  validate(data);
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("confidence level must lie in (0, 1)");
  if (B < 50) throw std::invalid_argument("need at least 50 replicates");
  const Eigen::Index n = data.n();
  const bool stratified = data.y_disc.has_value();

  std::map<int, std::vector<Eigen::Index>> pools;
  if (stratified) {
    for (Eigen::Index j = 0; j < n; ++j)
      pools[(*data.y_disc)[static_cast<std::size_t>(j)]].push_back(j);
    for (const auto& [label, pool] : pools) {
      const std::size_t need =
          (method == VarianceMethod::Bootstrap) ? 2 : 4;
      if (pool.size() < need)
        throw TooFewSamples("class " + std::to_string(label) +
                            " is too small for " +
                            variance_method_name(method) + " replicates");
    }
  } else {
    const Eigen::Index need = (method == VarianceMethod::Bootstrap) ? 2 : 4;
    if (n < need)
      throw TooFewSamples("dataset too small for variance replicates");
    pools[0] = detail::all_indices(n);
  }

  const double estimate = estimator(data);

  std::vector<double> reps(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    Rng rng(seed_combine(seed, static_cast<std::uint64_t>(b)));
    std::vector<Eigen::Index> rows;
    for (const auto& [label, pool] : pools) {
      if (method == VarianceMethod::Bootstrap) {
        std::vector<Eigen::Index> pick(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i)
          pick[i] = pool[static_cast<std::size_t>(
              rng.index(static_cast<std::uint64_t>(pool.size())))];
        std::sort(pick.begin(), pick.end());
        rows.insert(rows.end(), pick.begin(), pick.end());
      } else {
        const std::size_t k = pool.size() / 2;
        const std::vector<Eigen::Index> pick =
            detail::draw_without_replacement(rng, pool, k);
        rows.insert(rows.end(), pick.begin(), pick.end());
      }
    }
    std::sort(rows.begin(), rows.end());
    reps[static_cast<std::size_t>(b)] = estimator(detail::take_rows(data, rows));
  }

  double se = detail::sample_sd(reps);
  if (method == VarianceMethod::Subsample) se /= 1.4142135623730951;

  ConfidenceReport rep;
  rep.estimate = estimate;
  rep.std_error = se;
  rep.level = level;
  rep.variance_method = method;
  const double z = normal_quantile(0.5 * (1.0 + level));
  rep.lo = estimate - z * se;
  rep.hi = estimate + z * se;
  return rep;
}

struct NormalityReport {
  double ks_statistic = 0.0;
  double p_value = 0.0;
};

// Kolmogorov-Smirnov distance of the standardized trials from the standard
// normal, with the asymptotic Kolmogorov p-value at t = sqrt(n) * D.
// Standardization uses the sample mean and ddof-1 standard deviation, which
// makes the p-value conservative under the null.
inline NormalityReport normality_diagnostic(const std::vector<double>& trials) {
  const std::size_t n = trials.size();
  if (n < 100)
    throw TooFewSamples("normality diagnostic needs at least 100 trials");
  double mean = 0.0;
  for (double x : trials) mean += x;
  mean /= static_cast<double>(n);
  const double sd = detail::sample_sd(trials);
  NormalityReport rep;
  if (sd == 0.0) {
    rep.ks_statistic = 1.0;
    rep.p_value = 0.0;
    return rep;
  }
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = (trials[i] - mean) / sd;
  std::sort(z.begin(), z.end());
  double d_stat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf(z[i]);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    d_stat = std::max(d_stat, std::max(f - lo, hi - f));
  }
  rep.ks_statistic = d_stat;
  const double t = std::sqrt(static_cast<double>(n)) * d_stat;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    p += (k % 2 == 1) ? 2.0 * term : -2.0 * term;
    if (term < 1e-14) break;
  }
  rep.p_value = std::clamp(p, 0.0, 1.0);
  return rep;
}

}  // namespace miest
