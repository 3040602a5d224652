#pragma once

// Semi-discrete heat kernel of d/dt p = 1/2 sum_k r~_k Delta_k p on the torus
// Z/SZ, its Gaussian scaling limit, and circular convolution.
//
// On the torus the Fourier integral becomes an exact finite sum:
//   p_t(x) = S^{-1} sum_j exp(-t phi(2 pi j / S)) cos(2 pi j x / S),
//   phi(theta) = sum_k (1 - cos k theta) r~_k.

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "wasep/params.hpp"

namespace wasep {

inline double symbol_phi(double theta, const std::vector<double>& r_tilde) {
  double s = 0.0;
  for (std::size_t k = 1; k <= r_tilde.size(); ++k)
    s += (1.0 - std::cos(static_cast<double>(k) * theta)) * r_tilde[k - 1];
  return s;
}

/// P_T(X) = (2 pi T)^{-1/2} exp(-X^2 / 2T).
inline double gaussian(double T, double X) {
  if (!(T > 0.0)) throw std::invalid_argument("gaussian: T must be positive");
  return std::exp(-X * X / (2.0 * T)) / std::sqrt(2.0 * std::numbers::pi * T);
}

struct KernelTable {
  double t = 0.0;
  int size = 0;
  std::vector<double> values;  ///< p_t(x) at torus index x in [0, size)
  std::vector<double> r_tilde;

  /// p_t at a signed lattice offset.
  double at(long x) const {
    const long r = x % size;
    return values[static_cast<std::size_t>(r < 0 ? r + size : r)];
  }
  double mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  /// sum_x x^2 p_t(x) with x taken in the centred range [-S/2, S/2).
  double second_moment() const {
    double s = 0.0;
    for (int x = 0; x < size; ++x) {
      const double xc = x < size / 2 ? x : x - size;
      s += xc * xc * values[x];
    }
    return s;
  }
};

inline KernelTable kernel_table(double t, const std::vector<double>& r_tilde, int size) {
  if (t < 0.0) throw std::invalid_argument("kernel_table: t must be non-negative");
  if (size < 2 || size % 2 != 0) throw std::invalid_argument("kernel_table: size must be even");
  KernelTable tab{t, size, std::vector<double>(size, 0.0), r_tilde};
  if (t == 0.0) {
    tab.values[0] = 1.0;
    return tab;
  }
  const double w = 2.0 * std::numbers::pi / size;
  std::vector<double> cos_table(size), weight(size);
  for (int j = 0; j < size; ++j) {
    cos_table[j] = std::cos(w * j);
    weight[j] = std::exp(-t * symbol_phi(w * j, r_tilde));
  }
  // p is even, so only x in [0, S/2] is summed; (j x) mod S keeps cosines exact-even.
  for (int x = 0; x <= size / 2; ++x) {
    double s = 0.0;
    for (int j = 0; j < size; ++j)
      s += weight[j] * cos_table[static_cast<std::size_t>((static_cast<long>(j) * x) % size)];
    tab.values[x] = s / size;
    if (x > 0) tab.values[size - x] = tab.values[x];
  }
  return tab;
}

inline KernelTable kernel_table(double t, const ModelParams& params, int size) {
  return kernel_table(t, params.r_tilde, size);
}

/// (p * f)(x) = sum_x' p(x - x') f(x') on the torus.
inline std::vector<double> convolve(const KernelTable& kernel, const std::vector<double>& field) {
  if (static_cast<int>(field.size()) != kernel.size)
    throw std::invalid_argument("convolve: field size does not match kernel size");
  const int n = kernel.size;
  std::vector<double> out(n, 0.0);
  for (int x = 0; x < n; ++x) {
    double s = 0.0;
    for (int xp = 0; xp < n; ++xp) {
      const int d = x - xp;
      s += kernel.values[d < 0 ? d + n : d] * field[xp];
    }
    out[x] = s;
  }
  return out;
}

/// Thread-safe memo of kernel tables keyed by the exact bit patterns of (t, r~) and size.
class KernelCache {
public:
  std::shared_ptr<const KernelTable> get(double t, const std::vector<double>& r_tilde, int size) {
    Key key{std::bit_cast<std::uint64_t>(t), size, {}};
    for (double r : r_tilde) key.r_bits.push_back(std::bit_cast<std::uint64_t>(r));
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto tab = std::make_shared<const KernelTable>(kernel_table(t, r_tilde, size));
    cache_.emplace(std::move(key), tab);
    return tab;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
  }

private:
  struct Key {
    std::uint64_t t_bits;
    int size;
    std::vector<std::uint64_t> r_bits;
    bool operator<(const Key& o) const {
      return std::tie(t_bits, size, r_bits) < std::tie(o.t_bits, o.size, o.r_bits);
    }
  };
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const KernelTable>> cache_;
};

/// Smallest even torus size whose kernel at time t is mass-confined:
/// sqrt(variance) <= size / 8 with variance = t sum k^2 r~_k.
inline int confined_size(double t, const std::vector<double>& r_tilde, int minimum = 16) {
  double var = 0.0;
  for (std::size_t k = 1; k <= r_tilde.size(); ++k) var += static_cast<double>(k * k) * r_tilde[k - 1];
  var *= t;
  int s = static_cast<int>(std::ceil(8.0 * std::sqrt(var))) + 2 * static_cast<int>(r_tilde.size());
  s = std::max(s, minimum);
  return s + (s % 2);
}

/// Measured ellipticity constants: min and max of phi(theta)/theta^2 over (0, pi].
inline std::pair<double, double> symbol_bounds(const std::vector<double>& r_tilde, int samples = 4096) {
  double lo = INFINITY, hi = 0.0;
  for (int i = 1; i <= samples; ++i) {
    const double th = std::numbers::pi * i / samples;
    const double ratio = symbol_phi(th, r_tilde) / (th * th);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  return {lo, hi};
}

struct ScalingLimitPoint {
  double epsilon;
  double sup_error;
  int size;
};

/// For each eps: sup over lattice x with |eps x| <= x_max of
/// |eps^{-1} p_{eps^{-2} T}(x) - P_{alpha T}(eps x)|, using the kernel built from
/// the parameters returned by `params_at(eps)`.
template <class ParamsAt>
std::vector<ScalingLimitPoint> scaling_limit_error(ParamsAt&& params_at, double T,
                                                   const std::vector<double>& eps_grid,
                                                   double x_max = 3.0) {
  if (!(T > 0.0)) throw std::invalid_argument("scaling_limit_error: T must be positive");
  std::vector<ScalingLimitPoint> out;
  for (double eps : eps_grid) {
    const ModelParams p = params_at(eps);
    const double t = T / (eps * eps);
    const int size = confined_size(t, p.r_tilde, 2 * static_cast<int>(std::ceil(x_max / eps)) + 16);
    const auto tab = kernel_table(t, p.r_tilde, size);
    const long xr = static_cast<long>(std::floor(x_max / eps));
    double sup = 0.0;
    for (long x = -xr; x <= xr; ++x) {
      const double err = std::abs(tab.at(x) / eps - gaussian(p.alpha * T, eps * x));
      sup = std::max(sup, err);
    }
    out.push_back({eps, sup, size});
  }
  return out;
}

}  // namespace wasep
