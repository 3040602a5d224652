#pragma once

// Exact generator algebra of Z at a single point x.
//
// The drift of Z(x) depends only on the 2m spins straddling x. Everything here
// is evaluated on a LocalWindow, so identities can be checked by exhausting
// all 2^{2m} windows.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wasep/params.hpp"
#include "wasep/process.hpp"
#include "wasep/stats.hpp"

namespace wasep {

/// Spins on the 2m half-integer sites around an integer point x:
/// eta[i] is the spin at y = x - m + 1/2 + i.
struct LocalWindow {
  int m = 1;
  std::vector<int> eta;

  /// Window number `id` in [0, 2^{2m}): bit i set means eta[i] = +1.
  static LocalWindow from_id(int m, std::uint32_t id) {
    LocalWindow w{m, std::vector<int>(2 * m)};
    for (int i = 0; i < 2 * m; ++i) w.eta[i] = (id >> i) & 1U ? 1 : -1;
    return w;
  }
  static LocalWindow constant(int m, int spin) { return {m, std::vector<int>(2 * m, spin)}; }

  /// Window around integer point x of a lattice configuration (x given as point index).
  static LocalWindow around(const LatticeConfig& cfg, int point, int m) {
    LocalWindow w{m, std::vector<int>(2 * m)};
    for (int i = 0; i < 2 * m; ++i) w.eta[i] = cfg.eta(wrap(static_cast<long>(point) - m + i, cfg.size()));
    return w;
  }

  std::uint32_t id() const {
    std::uint32_t v = 0;
    for (int i = 0; i < 2 * m; ++i)
      if (eta[i] > 0) v |= 1U << i;
    return v;
  }
  /// eta(x - (j - 1/2)), j = 1..m
  int left(int j) const { return eta[m - j]; }
  /// eta(x + (j - 1/2)), j = 1..m
  int right(int j) const { return eta[m + j - 1]; }
  bool mirror_symmetric() const {
    for (int j = 1; j <= m; ++j)
      if (left(j) != right(j)) return false;
    return true;
  }
  std::string to_string() const {
    std::string s;
    for (int e : eta) s += e > 0 ? '+' : '-';
    return s;
  }
};

inline std::uint32_t window_count(int m) { return 1U << (2 * m); }

namespace detail {
inline int allowed(int from, int to) { return (1 + from) / 2 * ((1 - to) / 2); }
inline void check_window(const LocalWindow& w, const ModelParams& p) {
  if (w.m != p.spec.m) throw std::invalid_argument("drift: window range differs from model range");
}
}  // namespace detail

/// Omega(x) straight from the hop indicators and the hop probabilities.
inline double omega_direct(const LocalWindow& w, const ModelParams& p) {
  detail::check_window(w, p);
  const double a = p.tilt();
  double right = 0.0, left = 0.0;
  for (int k = 1; k <= w.m; ++k) {
    int nr = 0, nl = 0;
    for (int j = 1; j <= k; ++j) {
      nr += detail::allowed(w.left(j), w.right(k - j + 1));  // x - j~ -> x - j~ + k
      nl += detail::allowed(w.right(j), w.left(k - j + 1));  // x + j~ -> x + j~ - k
    }
    right += p.q_plus[k - 1] * nr;
    left += p.q_minus[k - 1] * nl;
  }
  return std::expm1(2.0 * a) * right + std::expm1(-2.0 * a) * left;
}

/// L^{j~}(x) = eta(x - j~) - eta(x + j~)
inline int linear_observable(const LocalWindow& w, int j) { return w.left(j) - w.right(j); }

/// Q^k(x): sum over pairs y1 < x < y2 with y2 - y1 = k of eta(y1) eta(y2).
inline int quadratic_observable(const LocalWindow& w, int k) {
  int s = 0;
  for (int j = 1; j <= k; ++j) s += w.left(j) * w.right(k - j + 1);
  return s;
}

struct OmegaParts {
  double omega_lin;
  double omega_qd;
};

/// Omega^lin = sum_{j<=k} rho_k L^{j~},  Omega^qd = sum_k sigma_k Q^k.
inline OmegaParts omega_decomposed(const LocalWindow& w, const ModelParams& p) {
  detail::check_window(w, p);
  OmegaParts out{0.0, 0.0};
  for (int k = 1; k <= w.m; ++k) {
    for (int j = 1; j <= k; ++j) out.omega_lin += p.rho[k - 1] * linear_observable(w, j);
    out.omega_qd += p.sigma[k - 1] * quadratic_observable(w, k);
  }
  return out;
}

/// rho_k and sigma_k from their exponential (hop-probability) forms.
struct RhoSigma {
  std::vector<double> rho;
  std::vector<double> sigma;
};

inline RhoSigma rho_sigma_from_rates(const ModelParams& p) {
  const double e = p.spec.epsilon, a = p.tilt();
  RhoSigma rs;
  for (int k = 1; k <= p.spec.m; ++k) {
    const double up = std::expm1(2.0 * a) * p.q_plus[k - 1];
    const double down = -std::expm1(-2.0 * a) * p.q_minus[k - 1];
    rs.rho.push_back(0.25 / std::sqrt(e) * (up + down));
    rs.sigma.push_back(0.25 / e * (-up + down));
  }
  return rs;
}

/// |Omega + eps nu - (eps^{1/2} Omega^lin + eps Omega^qd + (nu - nu') eps)| on one window.
inline double decomposition_residual(const LocalWindow& w, const ModelParams& p) {
  const double e = p.spec.epsilon;
  const auto parts = omega_decomposed(w, p);
  const double lhs = omega_direct(w, p) + e * p.nu;
  const double rhs = std::sqrt(e) * parts.omega_lin + e * parts.omega_qd + (p.nu - p.nu_prime) * e;
  return std::abs(lhs - rhs);
}

struct WindowResidual {
  std::uint32_t id;
  std::string eta;
  double omega;
  double omega_lin;
  double omega_qd;
  double residual;
};

/// Decomposition residual for every window, in window-id order.
inline std::vector<WindowResidual> decomposition_table(const ModelParams& p) {
  std::vector<WindowResidual> out;
  for (std::uint32_t id = 0; id < window_count(p.spec.m); ++id) {
    const auto w = LocalWindow::from_id(p.spec.m, id);
    const auto parts = omega_decomposed(w, p);
    out.push_back({id, w.to_string(), omega_direct(w, p), parts.omega_lin, parts.omega_qd,
                   decomposition_residual(w, p)});
  }
  return out;
}

/// Max decomposition residual over all 2^{2m} windows.
inline double verify_decomposition(const ModelParams& p) {
  double worst = 0.0;
  for (const auto& row : decomposition_table(p)) worst = std::max(worst, row.residual);
  return worst;
}

/// Simple exclusion: max over the four windows of
/// |Omega + eps nu - r~_1/2 (Delta_1 Z)(x)/Z(x)|, which vanishes for the
/// classical parameters.
inline double verify_gartner_laplacian(const ModelParams& p) {
  if (p.spec.m != 1) throw std::invalid_argument("verify_gartner_laplacian: requires m = 1");
  const double a = p.tilt(), e = p.spec.epsilon;
  double worst = 0.0;
  for (std::uint32_t id = 0; id < 4; ++id) {
    const auto w = LocalWindow::from_id(1, id);
    const double lap = std::exp(-a * w.right(1)) + std::exp(a * w.left(1)) - 2.0;
    worst = std::max(worst, std::abs(omega_direct(w, p) + e * p.nu - 0.5 * p.r_tilde[0] * lap));
  }
  return worst;
}

/// Exact Delta-bar / Z:
/// 1/2 sum_k r~_k [exp(-a sum_{(x,x+k)} eta) + exp(a sum_{(x-k,x)} eta) - 2], a = lambda eps^{1/2}.
inline double laplace_ratio(const LocalWindow& w, const ModelParams& p) {
  detail::check_window(w, p);
  const double a = p.tilt();
  double s = 0.0;
  int plus = 0, minus = 0;
  for (int k = 1; k <= w.m; ++k) {
    plus += w.right(k);
    minus += w.left(k);
    s += 0.5 * p.r_tilde[k - 1] * (std::exp(-a * plus) + std::exp(a * minus) - 2.0);
  }
  return s;
}

struct TaylorTerms {
  double d_lin;
  double d_qd;
  double d_cub;
};

/// Taylor coefficients of Delta-bar / Z: the eta-linear part D^lin (including
/// its eps correction from degenerate cubic terms), the non-crossing pair sum
/// D^qd and the distinct-triple difference D^cub.
inline TaylorTerms taylor_terms(const LocalWindow& w, const ModelParams& p) {
  detail::check_window(w, p);
  const double l = p.spec.lambda, e = p.spec.epsilon;
  TaylorTerms d{0.0, 0.0, 0.0};
  for (int k = 1; k <= w.m; ++k) {
    const double rt = p.r_tilde[k - 1];
    const double lin_coeff = l / 2.0 + e * l * l * l * (3.0 * k - 2.0) / 12.0;
    for (int j = 1; j <= k; ++j) d.d_lin += lin_coeff * rt * linear_observable(w, j);

    int pairs = 0;
    for (int i = 1; i <= k; ++i)
      for (int j = i + 1; j <= k; ++j) pairs += w.right(i) * w.right(j) + w.left(i) * w.left(j);
    d.d_qd += 0.5 * l * l * rt * pairs;

    // exp(-a S+) and exp(a S-) contribute -a^3 S+^3/6 and +a^3 S-^3/6, whose
    // distinct-index parts are -a^3 C(x+) and +a^3 C(x-).
    int triples = 0;
    for (int i = 1; i <= k; ++i)
      for (int j = i + 1; j <= k; ++j)
        for (int n = j + 1; n <= k; ++n)
          triples += w.left(i) * w.left(j) * w.left(n) - w.right(i) * w.right(j) * w.right(n);
    d.d_cub += 0.5 * l * l * l * rt * triples;
  }
  return d;
}

/// Delta-bar/Z minus eps^{1/2} D^lin + eps D^qd + eps^{3/2} D^cub + eps nu''.
inline double laplace_expansion_residual(const LocalWindow& w, const ModelParams& p) {
  const double e = p.spec.epsilon;
  const auto d = taylor_terms(w, p);
  const double trunc = std::sqrt(e) * d.d_lin + e * d.d_qd + e * std::sqrt(e) * d.d_cub + e * p.nu_dprime;
  return laplace_ratio(w, p) - trunc;
}

/// Max |laplace_expansion_residual| over all windows.
inline double max_laplace_expansion_residual(const ModelParams& p) {
  double worst = 0.0;
  for (std::uint32_t id = 0; id < window_count(p.spec.m); ++id)
    worst = std::max(worst, std::abs(laplace_expansion_residual(LocalWindow::from_id(p.spec.m, id), p)));
  return worst;
}

/// Coefficientwise mismatch between the Laplacian side and the drift side.
/// lin_coeff_j = (A^eps r~)_j - sum_{k>=j} rho_k and qd_coeff_j = (B r~)_j - sigma_j
/// are the raw matching-equation residuals; lin and qd carry the eps^{1/2} and
/// eps weights with which they enter the drift.
struct MatchingResidual {
  double epsilon;
  std::vector<double> lin_coeff;
  std::vector<double> qd_coeff;
  std::vector<double> lin;
  std::vector<double> qd;
  double max_lin() const { return max_abs(lin); }
  double max_qd() const { return max_abs(qd); }
  double max_lin_coeff() const { return max_abs(lin_coeff); }
  double max_qd_coeff() const { return max_abs(qd_coeff); }

private:
  static double max_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
  }
};

inline MatchingResidual matching_residual(const ModelParams& p) {
  const auto mat = build_matrices(p.spec);
  const Eigen::VectorXd rt = detail::to_eigen(p.r_tilde);
  const Eigen::VectorXd ar = mat.a_eps * rt;
  const Eigen::VectorXd br = mat.b * rt;
  const double e = p.spec.epsilon;
  MatchingResidual res{e, {}, {}, {}, {}};
  for (int j = 1; j <= p.spec.m; ++j) {
    double tail = 0.0;
    for (int k = j; k <= p.spec.m; ++k) tail += p.rho[k - 1];
    res.lin_coeff.push_back(ar(j - 1) - tail);
    res.qd_coeff.push_back(br(j - 1) - p.sigma[j - 1]);
    res.lin.push_back(std::sqrt(e) * res.lin_coeff.back());
    res.qd.push_back(e * res.qd_coeff.back());
  }
  return res;
}

/// Matching residuals along an eps grid for parameters produced by `params_at(eps)`.
template <class ParamsAt>
std::vector<MatchingResidual> matching_residual(ParamsAt&& params_at, const std::vector<double>& eps_grid) {
  std::vector<MatchingResidual> out;
  for (double e : eps_grid) out.push_back(matching_residual(params_at(e)));
  return out;
}

/// Jump of M(x) when an executed hop crosses integer point `point`:
/// e^{2 a} - 1 rightward, e^{-2 a} - 1 leftward, 0 if x is not crossed.
inline double martingale_jump(const HopEvent& e, const ModelParams& p, int point, int size) {
  const auto [first, count] = crossed_points(e.origin, e.displacement, size);
  if (wrap(static_cast<long>(point) - first, size) >= count) return 0.0;
  return std::expm1((e.displacement > 0 ? 2.0 : -2.0) * p.tilt());
}

}  // namespace wasep
