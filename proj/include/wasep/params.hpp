#pragma once

// Model calibration for the weakly asymmetric finite-range exclusion process.
//
// A model is fixed by the hopping range m, the symmetric rates r_k (summing
// to one), the transform parameter lambda and the asymmetry scale epsilon.
// Calibration solves the exact linear matching system for the asymmetries
// gamma_k and the effective Laplacian weights r~_k, then derives the hop
// probabilities, the Cole-Hopf drift constant nu and the scaling constants.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace wasep {

/// Raised for invalid user-supplied configuration; the message names the field.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when calibration is impossible for a valid-looking spec (eps too large).
class CalibrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ModelSpec {
  int m = 1;
  std::vector<double> r{1.0};
  double lambda = 1.0;
  double epsilon = 0.01;

  /// Throws ValidationError unless r_k > 0, sum r_k = 1 (to 1e-12),
  /// lambda > 0 and epsilon in (0, 1).
  void validate() const {
    if (m < 1) throw ValidationError("model.m: hopping range must be >= 1");
    if (static_cast<int>(r.size()) != m)
      throw ValidationError("model.r: expected " + std::to_string(m) + " rates, got " +
                            std::to_string(r.size()));
    double sum = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (!(r[k] > 0.0))
        throw ValidationError("model.r: r[" + std::to_string(k) + "] must be positive");
      sum += r[k];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("model.r: rates must sum to 1");
    if (!(lambda > 0.0)) throw ValidationError("model.lambda: must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw ValidationError("model.epsilon: must lie in (0, 1)");
  }

  /// Ranges above 3 are allowed but lie outside the proven convergence regime.
  bool theorem_regime() const { return m <= 3; }
};

/// Below this epsilon, u and v are evaluated from their power series.
inline constexpr double kSeriesThreshold = 1e-6;

struct UV {
  double u;
  double v;
};

/// u(eps) = eps^{-1/2} sinh(2 lambda eps^{1/2}), v(eps) = eps^{-1}(cosh(2 lambda eps^{1/2}) - 1),
/// with the limits 2 lambda and 2 lambda^2 at eps = 0.
inline UV uv_factors(double lambda, double epsilon) {
  if (epsilon < 0.0) throw ValidationError("epsilon: must be non-negative");
  if (epsilon < kSeriesThreshold) {
    // u = sum (2l)^{2n+1} eps^n / (2n+1)!,  v = sum (2l)^{2n+2} eps^n / (2n+2)!
    const double b2 = 4.0 * lambda * lambda;
    double u = 0.0, v = 0.0;
    double term_u = 2.0 * lambda;  // n = 0
    double term_v = b2 / 2.0;
    for (int n = 0; n < 6; ++n) {
      u += term_u;
      v += term_v;
      term_u *= b2 * epsilon / ((2.0 * n + 2.0) * (2.0 * n + 3.0));
      term_v *= b2 * epsilon / ((2.0 * n + 3.0) * (2.0 * n + 4.0));
    }
    return {u, v};
  }
  const double s = std::sqrt(epsilon);
  const double sh = std::sinh(lambda * s);
  return {std::sinh(2.0 * lambda * s) / s, 2.0 * sh * sh / epsilon};
}

struct CalibrationMatrices {
  Eigen::MatrixXd a_eps;  ///< A^eps, upper triangular
  Eigen::MatrixXd b;      ///< B, strictly upper triangular
  Eigen::MatrixXd a;      ///< upper-triangular ones
  Eigen::MatrixXd r_diag; ///< diag(r)
};

inline CalibrationMatrices build_matrices(const ModelSpec& spec) {
  const int m = spec.m;
  const double l = spec.lambda, e = spec.epsilon;
  CalibrationMatrices mat{Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Zero(m, m),
                          Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Zero(m, m)};
  for (int jj = 0; jj < m; ++jj) {
    const double j = jj + 1;
    mat.r_diag(jj, jj) = spec.r[jj];
    for (int kk = jj; kk < m; ++kk) {
      const double k = kk + 1;
      mat.a(jj, kk) = 1.0;
      mat.a_eps(jj, kk) = l / 2.0 + e * l * l * l * ((3.0 * k - 2.0) / 12.0 - (j - 1.0) / 2.0);
      mat.b(jj, kk) = l * l * (k - j) / j;
    }
  }
  return mat;
}

/// Raw solution of the exact matching system, before positivity checks.
struct CalibrationSolution {
  std::vector<double> gamma;
  std::vector<double> r_tilde;
  double residual = 0.0;          ///< max-norm residual of both matching lines
  double condition_number = 0.0;  ///< 2-norm condition number of the gamma system
};

namespace detail {
inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}
inline std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}
}  // namespace detail

/// Residual (max norm over both lines) of
///   A^eps r~ = (u A r - eps v A R gamma)/4,   B r~ = (u R gamma - v r)/4.
inline double matching_system_residual(const ModelSpec& spec, const std::vector<double>& gamma,
                                       const std::vector<double>& r_tilde) {
  const auto mat = build_matrices(spec);
  const auto [u, v] = uv_factors(spec.lambda, spec.epsilon);
  const Eigen::VectorXd r = detail::to_eigen(spec.r);
  const Eigen::VectorXd g = detail::to_eigen(gamma);
  const Eigen::VectorXd rt = detail::to_eigen(r_tilde);
  const Eigen::VectorXd line1 =
      mat.a_eps * rt - 0.25 * (u * (mat.a * r) - spec.epsilon * v * (mat.a * (mat.r_diag * g)));
  const Eigen::VectorXd line2 = mat.b * rt - 0.25 * (u * (mat.r_diag * g) - v * r);
  return std::max(line1.cwiseAbs().maxCoeff(), line2.cwiseAbs().maxCoeff());
}

/// Solves the eliminated form of the matching system:
///   (R + eps (v/u) B (A^eps)^{-1} A R) gamma = ((v/u) I + B (A^eps)^{-1} A) r
///   r~ = ((u (A^eps)^{-1} A r) - eps v (A^eps)^{-1} A R gamma) / 4
inline CalibrationSolution solve_calibration(const ModelSpec& spec) {
  const int m = spec.m;
  const auto mat = build_matrices(spec);
  const auto [u, v] = uv_factors(spec.lambda, spec.epsilon);

  const double scale = spec.lambda / 2.0;
  for (int j = 0; j < m; ++j) {
    if (std::abs(mat.a_eps(j, j)) < 1e-8 * scale)
      throw CalibrationError("calibration: A^eps is singular at row " + std::to_string(j + 1) +
                             " (epsilon too large)");
  }
  const auto tri = mat.a_eps.triangularView<Eigen::Upper>();
  const Eigen::MatrixXd ainv_a = tri.solve(mat.a);  // (A^eps)^{-1} A
  const Eigen::VectorXd r = detail::to_eigen(spec.r);
  const double vu = v / u;

  const Eigen::MatrixXd lhs = mat.r_diag + spec.epsilon * vu * mat.b * ainv_a * mat.r_diag;
  const Eigen::VectorXd rhs = (vu * Eigen::MatrixXd::Identity(m, m) + mat.b * ainv_a) * r;

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(lhs);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0)) throw CalibrationError("calibration: gamma system is singular");

  Eigen::VectorXd gamma;
  if (m == 1 || spec.epsilon == 0.0) {
    // lhs is diagonal (m = 1) or equal to R (eps = 0)
    gamma = rhs.cwiseQuotient(lhs.diagonal());
  } else {
    gamma = lhs.partialPivLu().solve(rhs);
  }
  const Eigen::VectorXd r_tilde =
      0.25 * (u * (ainv_a * r) - spec.epsilon * v * (ainv_a * (mat.r_diag * gamma)));

  CalibrationSolution sol;
  sol.gamma = detail::to_std(gamma);
  sol.r_tilde = detail::to_std(r_tilde);
  sol.condition_number = sv(0) / smin;
  sol.residual = matching_system_residual(spec, sol.gamma, sol.r_tilde);
  return sol;
}

/// Closed-form eps -> 0 limit: gamma_k(0) = lambda (2/r_k sum_{k'>k} (k'-k)/k r_k' + 1).
inline std::vector<double> gamma_at_zero(const ModelSpec& spec) {
  std::vector<double> g(spec.m);
  for (int k = 1; k <= spec.m; ++k) {
    double tail = 0.0;
    for (int kp = k + 1; kp <= spec.m; ++kp)
      tail += static_cast<double>(kp - k) / k * spec.r[kp - 1];
    g[k - 1] = spec.lambda * (2.0 / spec.r[k - 1] * tail + 1.0);
  }
  return g;
}

/// alpha_l = sum_{k=|l|+1}^m r_k (k - |l|); zero for |l| >= m.
inline double bracket_coefficient(const std::vector<double>& r, int l) {
  const int al = l < 0 ? -l : l;
  double s = 0.0;
  for (int k = al + 1; k <= static_cast<int>(r.size()); ++k) s += r[k - 1] * (k - al);
  return s;
}

enum class ParamKind { exact, gartner, leading_order, custom };

inline const char* to_string(ParamKind k) {
  switch (k) {
    case ParamKind::exact: return "exact";
    case ParamKind::gartner: return "gartner";
    case ParamKind::leading_order: return "leading_order";
    case ParamKind::custom: return "custom";
  }
  return "?";
}

struct ModelParams {
  ModelSpec spec;
  ParamKind kind = ParamKind::exact;
  std::vector<double> gamma;
  std::vector<double> r_tilde;
  std::vector<double> q_plus;   ///< q_k, rightward hop of k
  std::vector<double> q_minus;  ///< q_{-k}, leftward hop of k
  std::vector<double> rho;
  std::vector<double> sigma;
  double nu = 0.0;
  double nu_prime = 0.0;
  double nu_dprime = 0.0;
  double alpha = 0.0;
  std::vector<double> alpha_l;  ///< alpha_l for l = 0..m-1
  double beta = 0.0;
  double beta_prime = 0.0;
  double u_val = 0.0;
  double v_val = 0.0;
  double residual = 0.0;
  double condition_number = 0.0;
  std::vector<std::string> warnings;

  /// lambda eps^{1/2}, the per-unit-height log factor of Z.
  double tilt() const { return spec.lambda * std::sqrt(spec.epsilon); }
  /// Microscopic time for macroscopic time T.
  double micro_time(double T) const { return T * beta / (spec.epsilon * spec.epsilon); }
  /// Lattice position for macroscopic position X.
  double micro_position(double X) const { return X * beta_prime / spec.epsilon; }
};

struct NuConstants {
  double nu;
  double nu_prime;
  double nu_dprime;
};

/// nu' = sum_k k sigma_k with sigma_k = r_k (gamma_k u - v)/4, and
/// nu'' = 1/2 sum_k r~_k [k lambda^2 + eps (3k^2 - 2k)/12 lambda^4]; nu = nu' + nu''.
/// With this constant eps nu'' equals the Bernoulli(1/2) average of the
/// Laplace ratio, sum_k r~_k (cosh(lambda eps^{1/2})^k - 1), up to O(eps^3).
inline NuConstants nu_constants(const ModelSpec& spec, const std::vector<double>& gamma,
                                const std::vector<double>& r_tilde) {
  const auto [u, v] = uv_factors(spec.lambda, spec.epsilon);
  const double l2 = spec.lambda * spec.lambda;
  double np = 0.0, npp = 0.0;
  for (int k = 1; k <= spec.m; ++k) {
    np += k * 0.25 * spec.r[k - 1] * (gamma[k - 1] * u - v);
    npp += 0.5 * r_tilde[k - 1] *
           (k * l2 + spec.epsilon * (3.0 * k * k - 2.0 * k) / 12.0 * l2 * l2);
  }
  return {np + npp, np, npp};
}

/// Fills every derived field from (spec, gamma, r~). Throws CalibrationError
/// naming the offending k if a hop probability is not strictly positive.
inline ModelParams assemble_params(const ModelSpec& spec, std::vector<double> gamma,
                                   std::vector<double> r_tilde,
                                   ParamKind kind = ParamKind::custom) {
  ModelParams p;
  p.spec = spec;
  p.kind = kind;
  p.gamma = std::move(gamma);
  p.r_tilde = std::move(r_tilde);
  const auto [u, v] = uv_factors(spec.lambda, spec.epsilon);
  p.u_val = u;
  p.v_val = v;
  const double s = std::sqrt(spec.epsilon);
  for (int k = 1; k <= spec.m; ++k) {
    const double rk = spec.r[k - 1], gk = p.gamma[k - 1];
    const double qp = 0.5 * rk * (1.0 - gk * s);
    const double qm = 0.5 * rk * (1.0 + gk * s);
    if (!(qp > 0.0) || !(qm > 0.0))
      throw CalibrationError("calibration: hop probability for k=" + std::to_string(k) +
                             " is not positive (gamma_k * sqrt(eps) = " +
                             std::to_string(gk * s) + ")");
    p.q_plus.push_back(qp);
    p.q_minus.push_back(qm);
    p.rho.push_back(0.25 * rk * (u - spec.epsilon * gk * v));
    p.sigma.push_back(0.25 * rk * (gk * u - v));
  }
  const auto nus = nu_constants(spec, p.gamma, p.r_tilde);
  p.nu = nus.nu;
  p.nu_prime = nus.nu_prime;
  p.nu_dprime = nus.nu_dprime;
  p.alpha = 0.0;
  for (int k = 1; k <= spec.m; ++k) p.alpha += static_cast<double>(k) * k * spec.r[k - 1];
  for (int l = 0; l < spec.m; ++l) p.alpha_l.push_back(bracket_coefficient(spec.r, l));
  const double l2 = spec.lambda * spec.lambda;
  p.beta = 1.0 / (p.alpha * l2 * l2);
  p.beta_prime = 1.0 / l2;
  if (!spec.theorem_regime())
    p.warnings.push_back("m = " + std::to_string(spec.m) +
                         " exceeds 3: outside the proven convergence regime");
  return p;
}

/// Exact calibration: solves the matching system and assembles all constants.
inline ModelParams calibrate(const ModelSpec& spec) {
  spec.validate();
  auto sol = solve_calibration(spec);
  auto p = assemble_params(spec, std::move(sol.gamma), std::move(sol.r_tilde), ParamKind::exact);
  p.residual = sol.residual;
  p.condition_number = sol.condition_number;
  return p;
}

/// Simple exclusion with the classical parameters that make the drift an exact
/// discrete Laplacian: gamma = tanh(lambda eps^{1/2})/eps^{1/2},
/// r~ = (4 q_1 q_{-1})^{1/2}, nu = eps^{-1}(1 - r~).
inline ModelParams gartner_params(double lambda, double epsilon) {
  ModelSpec spec{1, {1.0}, lambda, epsilon};
  spec.validate();
  const double s = std::sqrt(epsilon);
  const double g = epsilon == 0.0 ? lambda : std::tanh(lambda * s) / s;
  const double rt = std::sqrt(1.0 - epsilon * g * g);
  auto p = assemble_params(spec, {g}, {rt}, ParamKind::gartner);
  // eps^{-1}(1 - sqrt(1 - eps g^2)) without cancellation
  p.nu = g * g / (1.0 + rt);
  p.nu_dprime = p.nu - p.nu_prime;
  p.residual = matching_system_residual(spec, p.gamma, p.r_tilde);
  return p;
}

/// Leading-order choice: gamma = gamma(0) and r~ = r + eps r~* with r~* the
/// eps-derivative of the exact solution at 0 (Richardson-extrapolated forward
/// difference). Matches the exact system only up to O(eps^2).
inline ModelParams leading_order_params(const ModelSpec& spec) {
  spec.validate();
  const double h = 1e-4;
  ModelSpec s1 = spec, s2 = spec;
  s1.epsilon = h;
  s2.epsilon = 2.0 * h;
  const auto r1 = solve_calibration(s1).r_tilde;
  const auto r2 = solve_calibration(s2).r_tilde;
  std::vector<double> rt(spec.m);
  for (int k = 0; k < spec.m; ++k) {
    const double d1 = (r1[k] - spec.r[k]) / h;
    const double d2 = (r2[k] - spec.r[k]) / (2.0 * h);
    rt[k] = spec.r[k] + spec.epsilon * (2.0 * d1 - d2);
  }
  auto p = assemble_params(spec, gamma_at_zero(spec), std::move(rt), ParamKind::leading_order);
  p.residual = matching_system_residual(spec, p.gamma, p.r_tilde);
  return p;
}

}  // namespace wasep
