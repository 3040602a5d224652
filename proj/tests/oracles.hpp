#pragma once

// Independent reference computations used by the tests. None of these call
// into the library's algorithms for the quantity being checked.

#include <cmath>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

/// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Solves both lines of the exact matching system as one 2m x 2m system in
/// the unknowns (r~, gamma):
///   A^eps r~ + (eps v / 4) A R gamma = (u / 4) A r
///   B r~     - (u / 4) R gamma       = -(v / 4) r
/// with u, v from their hyperbolic definitions.
inline std::pair<std::vector<double>, std::vector<double>> calibration(int m, const std::vector<double>& r,
                                                                       double l, double e) {
  const double s = std::sqrt(e);
  const double u = e > 0 ? std::sinh(2 * l * s) / s : 2 * l;
  const double v = e > 0 ? (std::cosh(2 * l * s) - 1) / e : 2 * l * l;
  const int n = 2 * m;
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (int j = 1; j <= m; ++j) {
    for (int k = j; k <= m; ++k) {
      a[j - 1][k - 1] = l / 2 + e * l * l * l * ((3.0 * k - 2) / 12 - (j - 1.0) / 2);
      a[j - 1][m + k - 1] = e * v / 4 * r[k - 1];
      b[j - 1] += u / 4 * r[k - 1];
      a[m + j - 1][k - 1] = l * l * (k - j) / static_cast<double>(j);
    }
    a[m + j - 1][m + j - 1] -= u / 4 * r[j - 1];
    b[m + j - 1] = -v / 4 * r[j - 1];
  }
  auto x = solve(a, b);
  return {{x.begin(), x.begin() + m}, {x.begin() + m, x.end()}};
}

/// e^{-z} I_n(z) by its power series (fine for moderate z).
inline double scaled_bessel(int n, double z) {
  n = std::abs(n);
  double term = std::exp(-z + n * std::log(z / 2) - std::lgamma(n + 1.0));
  double s = 0.0;
  for (int k = 0; k < 2000; ++k) {
    s += term;
    term *= (z / 2) * (z / 2) / ((k + 1.0) * (k + 1.0 + n));
    if (term < 1e-300 || (k > z && term < 1e-18 * s)) break;
  }
  return s;
}

/// Nearest-neighbour walk with total jump rate rt: p_t(x) = e^{-rt t} I_x(rt t),
/// wrapped onto a torus of the given size.
inline double bessel_kernel(double t, double rt, long x, int size, int wraps = 3) {
  double s = 0.0;
  for (int w = -wraps; w <= wraps; ++w) s += scaled_bessel(static_cast<int>(x + static_cast<long>(w) * size), rt * t);
  return s;
}

/// Exhaustive CTMC for exclusion on a small torus. States are occupation bit masks.
struct SmallExclusion {
  int sites;
  std::vector<unsigned> states;
  std::map<unsigned, int> index;
  std::vector<std::vector<double>> q;  ///< generator, q[from][to]

  /// rates[k-1] = (q_k, q_{-k}); a hop of +-k from an occupied site fires at that rate if the target is empty.
  SmallExclusion(int n_sites, int n_particles, const std::vector<std::pair<double, double>>& rates)
      : sites(n_sites) {
    for (unsigned mask = 0; mask < (1u << n_sites); ++mask)
      if (__builtin_popcount(mask) == n_particles) {
        index[mask] = static_cast<int>(states.size());
        states.push_back(mask);
      }
    const std::size_t n = states.size();
    q.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned s = states[i];
      for (int y = 0; y < n_sites; ++y) {
        if (!(s >> y & 1u)) continue;
        for (std::size_t k = 1; k <= rates.size(); ++k) {
          for (int dir : {+1, -1}) {
            const int target = ((y + dir * static_cast<int>(k)) % n_sites + n_sites) % n_sites;
            if (s >> target & 1u) continue;
            const unsigned t = (s & ~(1u << y)) | (1u << target);
            const double rate = dir > 0 ? rates[k - 1].first : rates[k - 1].second;
            q[i][index[t]] += rate;
            q[i][i] -= rate;
          }
        }
      }
    }
  }

  /// Distribution at time t from a point mass, by uniformization.
  std::vector<double> transient(unsigned start, double t) const {
    const std::size_t n = states.size();
    double lam = 0.0;
    for (std::size_t i = 0; i < n; ++i) lam = std::max(lam, -q[i][i]);
    std::vector<double> v(n, 0.0), out(n, 0.0);
    v[index.at(start)] = 1.0;
    double weight = std::exp(-lam * t);
    for (int k = 0; k < 10000; ++k) {
      for (std::size_t i = 0; i < n; ++i) out[i] += weight * v[i];
      std::vector<double> nv(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (v[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) nv[j] += v[i] * (i == j ? 1.0 + q[i][i] / lam : q[i][j] / lam);
      }
      v = nv;
      weight *= lam * t / (k + 1.0);
      if (k > lam * t && weight < 1e-18) break;
    }
    return out;
  }

  /// max_j |(pi Q)_j| for a distribution pi.
  double stationarity_defect(const std::vector<double>& pi) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < states.size(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < states.size(); ++i) s += pi[i] * q[i][j];
      worst = std::max(worst, std::abs(s));
    }
    return worst;
  }
};

/// Height at integer points x = -radius..radius from spins given by site index
/// (site i at y = i - S/2 + 1/2) and a net flux, by direct summation.
inline std::vector<long> heights(const std::vector<int>& eta, long flux, int radius) {
  const int S = static_cast<int>(eta.size());
  std::vector<long> h;
  for (int x = -radius; x <= radius; ++x) {
    long v = -2 * flux;
    if (x > 0)
      for (int y2 = 1; y2 < 2 * x; y2 += 2) v += eta[(y2 - 1) / 2 + S / 2];  // y = y2/2
    if (x < 0)
      for (int y2 = 2 * x + 1; y2 < 0; y2 += 2) v -= eta[(y2 - 1) / 2 + S / 2];
    h.push_back(v);
  }
  return h;
}

}  // namespace oracle
