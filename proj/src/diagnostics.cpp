#include "fvlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "fvlab/error.hpp"

namespace fvlab {

void SummaryStats::add(double x) {
  ++count;
  const double delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (x - mean);
  min = std::min(min, x);
  max = std::max(max, x);
}

double SummaryStats::variance() const {
  return count < 2 ? 0.0 : m2 / static_cast<double>(count - 1);
}

double SummaryStats::standard_error() const {
  return count == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(count));
}

SummaryStats SummaryStats::of(std::span<const double> xs) {
  SummaryStats s;
  for (const double x : xs) {
    s.add(x);
  }
  return s;
}

SummaryStats merge_stats(const SummaryStats& a, const SummaryStats& b) {
  if (a.count == 0) {
    return b;
  }
  if (b.count == 0) {
    return a;
  }
  SummaryStats r;
  r.count = a.count + b.count;
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = static_cast<double>(r.count);
  const double delta = b.mean - a.mean;
  r.mean = (na * a.mean + nb * b.mean) / n;
  r.m2 = a.m2 + b.m2 + delta * delta * (na * nb / n);
  r.min = std::min(a.min, b.min);
  r.max = std::max(a.max, b.max);
  return r;
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) {
    return 1.0;
  }
  // The alternating series converges slowly below ~0.2 where p is 1 to
  // double precision anyway.
  if (lambda < 0.2) {
    return 1.0;
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
  }
  return std::clamp(sum, 0.0, 1.0);
}

namespace {

std::vector<double> sorted_copy(std::span<const double> x, const char* what) {
  if (x.empty()) {
    throw DomainError(fmt::format("ks test: {} sample is empty", what));
  }
  std::vector<double> v(x.begin(), x.end());
  for (const double e : v) {
    if (std::isnan(e)) {
      throw DomainError("ks test: sample contains NaN");
    }
  }
  std::sort(v.begin(), v.end());
  return v;
}

double asymptotic_p(double d, double n_eff) {
  const double root = std::sqrt(n_eff);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
}

} // namespace

KsResult ks_two_sample(std::span<const double> x, std::span<const double> y) {
  const std::vector<double> a = sorted_copy(x, "first");
  const std::vector<double> b = sorted_copy(y, "second");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) {
      ++i;
    }
    while (j < b.size() && b[j] == v) {
      ++j;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return KsResult{d, asymptotic_p(d, na * nb / (na + nb))};
}

KsResult ks_one_sample(std::span<const double> x, const std::function<double(double)>& cdf) {
  const std::vector<double> a = sorted_copy(x, "");
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return KsResult{d, asymptotic_p(d, n)};
}

TailFit tail_fit(std::span<const double> times, double quantile_lo, double quantile_hi) {
  if (times.size() < 100) {
    throw DomainError(fmt::format("tail fit needs at least 100 samples, got {}", times.size()));
  }
  if (!(quantile_lo > 0.0 && quantile_lo < quantile_hi && quantile_hi < 1.0)) {
    throw DomainError(fmt::format("tail fit needs 0 < lo < hi < 1, got ({}, {})", quantile_lo,
                                  quantile_hi));
  }
  std::vector<double> t(times.begin(), times.end());
  for (const double e : t) {
    if (std::isnan(e) || e == -std::numeric_limits<double>::infinity()) {
      throw DomainError("tail fit: sample contains NaN or -inf");
    }
  }
  std::sort(t.begin(), t.end());
  const auto finite = static_cast<std::size_t>(
      std::lower_bound(t.begin(), t.end(), std::numeric_limits<double>::infinity()) - t.begin());
  if (t.front() == t.back()) {
    throw DomainError("tail fit: degenerate sample, all values equal");
  }
  const std::size_t n = t.size();
  const double nd = static_cast<double>(n);
  const auto lo = static_cast<std::size_t>(std::ceil(quantile_lo * nd));
  const auto hi = std::min({static_cast<std::size_t>(std::floor(quantile_hi * nd)), n - 1, finite});

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  std::size_t m = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double xv = t[i];
    const double yv = std::log(static_cast<double>(n - i - 1) / nd);
    sx += xv;
    sy += yv;
    ++m;
  }
  if (m < 10) {
    throw DomainError(fmt::format("tail fit: only {} points in the quantile range", m));
  }
  const double md = static_cast<double>(m);
  const double mx = sx / md;
  const double my = sy / md;
  for (std::size_t i = lo; i < hi; ++i) {
    const double dx = t[i] - mx;
    const double dy = std::log(static_cast<double>(n - i - 1) / nd) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) {
    throw DomainError("tail fit: degenerate sample in the quantile range");
  }
  TailFit fit;
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.log_intercept = my - slope * mx;
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 0.0;
  fit.t_range = {t[lo], t[hi - 1]};
  fit.points = m;
  return fit;
}

PerpetuityResult perpetuity_test(std::span<const std::pair<double, double>> pairs,
                                 std::size_t n_terms) {
  if (pairs.empty()) {
    throw DomainError("perpetuity test: no pairs");
  }
  SummaryStats s;
  for (const auto& [a, b] : pairs) {
    if (!(a > 0.0) || !(b > 0.0)) {
      throw DomainError(fmt::format("perpetuity test: A and B must be positive, got ({}, {})", a, b));
    }
    s.add(std::log(a));
  }
  PerpetuityResult r;
  r.elog_a = s.mean;
  r.se = s.standard_error();
  if (r.elog_a + 3.0 * r.se < 0.0) {
    r.verdict = PerpetuityVerdict::converges;
  } else if (r.elog_a - 3.0 * r.se > 0.0) {
    r.verdict = PerpetuityVerdict::diverges;
  }
  double product = 1.0;
  const std::size_t terms = std::min(n_terms, pairs.size());
  for (std::size_t k = 0; k < terms; ++k) {
    r.partial_sum += product * pairs[k].second;
    product *= pairs[k].first;
  }
  return r;
}

const char* verdict_name(PerpetuityVerdict v) {
  switch (v) {
  case PerpetuityVerdict::converges:
    return "converges";
  case PerpetuityVerdict::diverges:
    return "diverges";
  case PerpetuityVerdict::inconclusive:
    return "inconclusive";
  }
  return "inconclusive";
}

} // namespace fvlab
