#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <utility>

namespace fvlab {

/// Mergeable running moments (Chan et al. pairwise update).
struct SummaryStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations from the mean
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void add(double x);
  /// Sample variance m2 / (count - 1); 0 for fewer than two values.
  double variance() const;
  /// Standard error of the mean.
  double standard_error() const;

  static SummaryStats of(std::span<const double> xs);
};

SummaryStats merge_stats(const SummaryStats& a, const SummaryStats& b);

struct KsResult {
  double d = 0.0;
  double p = 1.0;
};

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value.
KsResult ks_two_sample(std::span<const double> x, std::span<const double> y);

/// One-sample statistic against a continuous CDF.
KsResult ks_one_sample(std::span<const double> x, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov tail P(K > lambda), 100 terms.
double kolmogorov_survival(double lambda);

struct TailFit {
  double rate = 0.0;           // minus the slope of ln S(t)
  double log_intercept = 0.0;  // ln S at t = 0 on the fitted line
  double r_squared = 0.0;
  std::pair<double, double> t_range{0.0, 0.0};
  std::size_t points = 0;
};

/// Least-squares line through (t_(i), ln((n-i)/n)) for the order statistics
/// whose ranks fall in [quantile_lo, quantile_hi]. Needs at least 100
/// samples and 10 points in range. +inf marks a time censored beyond the
/// observation window: it counts in n but is never fitted.
TailFit tail_fit(std::span<const double> times, double quantile_lo = 0.5,
                 double quantile_hi = 0.99);

enum class PerpetuityVerdict { converges, diverges, inconclusive };

struct PerpetuityResult {
  double elog_a = 0.0;
  double se = 0.0;
  PerpetuityVerdict verdict = PerpetuityVerdict::inconclusive;
  /// sum_(n < n_terms) A_1 ... A_n B_(n+1) over the first pairs in order.
  double partial_sum = 0.0;
};

/// Sign test for E ln A against 3 standard errors.
PerpetuityResult perpetuity_test(std::span<const std::pair<double, double>> pairs,
                                 std::size_t n_terms);

const char* verdict_name(PerpetuityVerdict v);

} // namespace fvlab
