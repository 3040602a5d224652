#pragma once

// Small statistics toolkit: replica means with standard errors, ratio
// estimates, log-log slopes and the two-sample Kolmogorov-Smirnov test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "wasep/rng.hpp"

namespace wasep {

/// A point estimate with its standard error over n independent samples.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;

  /// (mean - target) / se; zero when both the deviation and the SE vanish.
  double z_score(double target = 0.0) const {
    const double d = mean - target;
    if (se == 0.0) return d == 0.0 ? 0.0 : std::copysign(INFINITY, d);
    return d / se;
  }
};

/// Sample mean and SE = s / sqrt(n) with the unbiased sample variance.
inline Estimate estimate(const std::vector<double>& x) {
  Estimate e;
  e.n = x.size();
  if (x.empty()) return e;
  e.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  if (x.size() < 2) return e;
  double ss = 0.0;
  for (double v : x) ss += (v - e.mean) * (v - e.mean);
  e.se = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  return e;
}

/// Ratio of means sum(a)/sum(b) over paired replicas, SE by the delta method.
inline Estimate ratio_estimate(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("ratio_estimate: need >= 2 paired samples");
  const auto ea = estimate(a), eb = estimate(b);
  if (eb.mean == 0.0) throw std::domain_error("ratio_estimate: denominator mean is zero");
  const double q = ea.mean / eb.mean;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - q * b[i];
    ss += d * d;
  }
  const double n = static_cast<double>(a.size());
  return {q, std::sqrt(ss / (n - 1.0) / n) / std::abs(eb.mean), a.size()};
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// sup_x |F_a(x) - F_b(x)| for the empirical CDFs of two samples.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Critical KS distance at `level` under the null that both samples share a
/// law, from random relabelings of the pooled sample. Deterministic in `seed`.
inline double ks_permutation_critical(const std::vector<double>& a, const std::vector<double>& b,
                                      double level = 0.01, int permutations = 1000,
                                      std::uint64_t seed = 0x5eed) {
  if (!(level > 0.0 && level < 1.0) || permutations < 1)
    throw std::invalid_argument("ks_permutation_critical: bad level or permutation count");
  std::vector<double> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  RngStream rng(seed, 0);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(permutations));
  for (int p = 0; p < permutations; ++p) {
    for (std::size_t i = pool.size() - 1; i > 0; --i) std::swap(pool[i], pool[rng.index(i + 1)]);
    stats.push_back(ks_distance({pool.begin(), pool.begin() + static_cast<long>(a.size())},
                                {pool.begin() + static_cast<long>(a.size()), pool.end()}));
  }
  std::sort(stats.begin(), stats.end());
  const auto idx = static_cast<std::size_t>(std::ceil((1.0 - level) * permutations)) - 1;
  return stats[std::min(idx, stats.size() - 1)];
}

/// Asymptotic KS critical value c(level) sqrt((na + nb) / (na nb)).
inline double ks_asymptotic_critical(std::size_t na, std::size_t nb, double level = 0.01) {
  const double c = std::sqrt(-0.5 * std::log(level / 2.0));
  return c * std::sqrt(static_cast<double>(na + nb) / static_cast<double>(na * nb));
}

}  // namespace wasep
