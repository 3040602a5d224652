#pragma once

// Height function and Cole-Hopf field on an integer observation window.
//
// h(x) = -2 N(t) + sum_{0<y<x} eta(y)      (x >= 0)
// h(x) = -2 N(t) - sum_{x<y<0} eta(y)      (x < 0)
// with N(t) the net rightward flux through x = 0, so a rightward hop lowers h
// by 2 at every integer point it crosses. Z(x) = exp(-lambda eps^{1/2} h(x) + eps nu t).
//
// h is stored as integers; Z is always derived from h and t.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "wasep/kernel.hpp"
#include "wasep/params.hpp"
#include "wasep/process.hpp"

namespace wasep {

/// The constants a field needs from the calibrated model.
struct FieldScales {
  double lambda = 1.0;
  double epsilon = 0.01;
  double nu = 0.0;
  double beta = 1.0;
  double beta_prime = 1.0;

  static FieldScales from(const ModelParams& p) {
    return {p.spec.lambda, p.spec.epsilon, p.nu, p.beta, p.beta_prime};
  }
  double tilt() const { return lambda * std::sqrt(epsilon); }
  /// beta' lambda / (2 eps^{1/2}); turns the step-IC field into an approximate delta.
  double delta_factor() const { return beta_prime * lambda / (2.0 * std::sqrt(epsilon)); }
};

class FieldPair {
public:
  FieldPair(int radius, int lattice_size, FieldScales scales)
      : radius_(radius), size_(lattice_size), scales_(scales), h_(2 * radius + 1, 0) {}

  int radius() const { return radius_; }
  int lattice_size() const { return size_; }
  const FieldScales& scales() const { return scales_; }
  double time() const { return t_; }
  bool contains(long x) const { return x >= -radius_ && x <= radius_; }

  long h(long x) const {
    check(x);
    return h_[static_cast<std::size_t>(x + radius_)];
  }
  const std::vector<long>& heights() const { return h_; }

  double log_z(long x) const { return -scales_.tilt() * static_cast<double>(h(x)) + scales_.epsilon * scales_.nu * t_; }
  double z(long x) const { return std::exp(log_z(x)); }

  /// Z on the whole window, ordered x = -radius..radius.
  std::vector<double> z_field() const {
    std::vector<double> out;
    out.reserve(h_.size());
    for (long x = -radius_; x <= radius_; ++x) out.push_back(z(x));
    return out;
  }

  /// Applies an executed hop: h drops by 2 (rightward) or rises by 2 (leftward)
  /// at every crossed window point.
  void apply_hop(const HopEvent& e) {
    t_ = e.time;
    const auto [first, count] = crossed_points(e.origin, e.displacement, size_);
    const long delta = e.displacement > 0 ? -2 : 2;
    for (int c = 0; c < count; ++c) {
      long x = (first + c) % size_ - size_ / 2;
      if (contains(x)) h_[static_cast<std::size_t>(x + radius_)] += delta;
    }
  }

  void on_hop(const HopEvent& e, const LatticeConfig&) { apply_hop(e); }
  void advance_to(double t) { t_ = t; }

  /// Overwrites state (used when building from a configuration).
  void set(std::vector<long> h, double t) {
    if (h.size() != h_.size()) throw std::invalid_argument("FieldPair::set: window size mismatch");
    h_ = std::move(h);
    t_ = t;
  }

private:
  void check(long x) const {
    if (!contains(x))
      throw std::out_of_range("field: x = " + std::to_string(x) + " outside window radius " +
                              std::to_string(radius_));
  }

  int radius_;
  int size_;
  FieldScales scales_;
  std::vector<long> h_;
  double t_ = 0.0;
};

/// Height profile of `cfg` (including its accumulated flux) on [-radius, radius].
inline std::vector<long> height_profile(const LatticeConfig& cfg, int radius) {
  const int S = cfg.size();
  if (radius < 0 || radius >= S / 2)
    throw std::out_of_range("height: window radius " + std::to_string(radius) +
                            " does not fit inside the lattice of size " + std::to_string(S));
  std::vector<long> h(2 * radius + 1);
  const long base = -2 * cfg.net_flux;
  h[radius] = base;
  long acc = base;
  for (int x = 1; x <= radius; ++x) {  // adds eta(x - 1/2)
    acc += cfg.eta(S / 2 + x - 1);
    h[radius + x] = acc;
  }
  acc = base;
  for (int x = -1; x >= -radius; --x) {  // subtracts eta(x + 1/2)
    acc -= cfg.eta(S / 2 + x);
    h[radius + x] = acc;
  }
  return h;
}

inline FieldPair height_from_config(const LatticeConfig& cfg, int radius, FieldScales scales) {
  FieldPair f(radius, cfg.size(), scales);
  f.set(height_profile(cfg, radius), cfg.clock);
  return f;
}

/// Z on the full torus, points x = -S/2..S/2-1 stored at index x + S/2.
/// Heights are accumulated from x = 0 outward in both directions, so when the
/// net spin is nonzero the discontinuity sits at the seam.
inline std::vector<double> torus_z_field(const LatticeConfig& cfg, FieldScales scales) {
  const int S = cfg.size();
  std::vector<double> z(S);
  const auto h = height_profile(cfg, S / 2 - 1);
  const int r = S / 2 - 1;
  const double a = scales.tilt(), drift = scales.epsilon * scales.nu * cfg.clock;
  for (int x = -r; x <= r; ++x) z[x + S / 2] = std::exp(-a * h[x + r] + drift);
  // x = -S/2 from the left end
  const long h_end = h[0] - cfg.eta(0);
  z[0] = std::exp(-a * h_end + drift);
  return z;
}

enum class Normalization { plain, delta };

struct ScaledField {
  double T = 0.0;
  std::vector<double> X;
  std::vector<double> values;
  Normalization normalization = Normalization::plain;
};

/// Z at macroscopic (T, X): Z_{eps^{-2} beta T}(eps^{-1} beta' X) with linear
/// interpolation between lattice points. The field must already be at that time.
inline ScaledField scaled_field(const FieldPair& f, double T, const std::vector<double>& X,
                                Normalization norm = Normalization::plain) {
  const auto& sc = f.scales();
  const double t = T * sc.beta / (sc.epsilon * sc.epsilon);
  if (std::abs(t - f.time()) > 1e-9 * std::max(1.0, t))
    throw std::invalid_argument("scaled_field: field time " + std::to_string(f.time()) +
                                " does not match T = " + std::to_string(T));
  ScaledField out{T, X, {}, norm};
  const double factor = norm == Normalization::delta ? sc.delta_factor() : 1.0;
  for (double Xi : X) {
    const double xi = Xi * sc.beta_prime / sc.epsilon;
    const double x0 = std::floor(xi);
    const double frac = xi - x0;
    const long xl = static_cast<long>(x0);
    double v = f.z(xl);
    if (frac > 0.0) v = (1.0 - frac) * v + frac * f.z(xl + 1);
    out.values.push_back(factor * v);
  }
  return out;
}

/// F = -lambda eps^{1/2} h_t(x) + nu eps^{-1} beta T + log(lambda beta' / (2 eps^{1/2})) - log P_T(X)
/// at t = eps^{-2} beta T and x the lattice point nearest eps^{-1} beta' X.
inline double f_statistic(const FieldPair& f, double T, double X) {
  if (!(T > 0.0)) throw std::invalid_argument("f_statistic: T must be positive");
  const auto& sc = f.scales();
  const double t = T * sc.beta / (sc.epsilon * sc.epsilon);
  if (std::abs(t - f.time()) > 1e-9 * std::max(1.0, t))
    throw std::invalid_argument("f_statistic: field time does not match T");
  const long x = std::lround(X * sc.beta_prime / sc.epsilon);
  return -sc.tilt() * static_cast<double>(f.h(x)) + sc.nu * sc.beta * T / sc.epsilon +
         std::log(sc.delta_factor()) - std::log(gaussian(T, X));
}

}  // namespace wasep
