#pragma once

// Replica orchestration and the Monte Carlo estimators built on it.
//
// Every replica gets its own RngStream(master_seed, replica_id) and returns a
// flat map of named observables. Results are merged into a map keyed by
// replica id, so pooled numbers do not depend on thread count or completion
// order.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "wasep/hopfcole.hpp"
#include "wasep/kernel.hpp"
#include "wasep/params.hpp"
#include "wasep/process.hpp"
#include "wasep/rng.hpp"
#include "wasep/stats.hpp"

namespace wasep {

inline constexpr const char* kEngineVersion = "wasep-engine 1.0.0";

using Observables = std::map<std::string, double>;

/// Raised when a replica throws; carries what is needed to rerun it alone.
class ReplicaFailure : public std::runtime_error {
public:
  ReplicaFailure(std::uint64_t replica_id, std::uint64_t seed, const std::string& what)
      : std::runtime_error("replica " + std::to_string(replica_id) + " (seed " + std::to_string(seed) +
                           ") failed: " + what),
        replica_id(replica_id), seed(seed) {}
  std::uint64_t replica_id;
  std::uint64_t seed;
};

struct InitialCondition {
  enum class Kind { step, bernoulli };
  Kind kind = Kind::step;
  double density = 0.5;

  static InitialCondition step() { return {Kind::step, 0.5}; }
  static InitialCondition bernoulli(double d) { return {Kind::bernoulli, d}; }

  LatticeConfig make(int size, RngStream& rng) const {
    return kind == Kind::step ? init_step(size) : init_bernoulli(size, density, rng);
  }
  std::string describe() const {
    if (kind == Kind::step) return "step";
    char buf[64];
    std::snprintf(buf, sizeof buf, "bernoulli(%.17g)", density);
    return buf;
  }
};

struct EnsembleJob {
  ModelParams params;
  int size = 0;           ///< torus circumference S
  int window_radius = 0;  ///< observation window [-W, W] in lattice units
  InitialCondition ic;
  double t_end = 0.0;                ///< microscopic horizon
  std::vector<double> checkpoints;   ///< microscopic times in [0, t_end]
  std::size_t replicas = 1;
  std::uint64_t first_replica = 0;   ///< replica ids are first_replica .. first_replica + replicas - 1
  std::uint64_t master_seed = 0;
  unsigned threads = 0;              ///< 0: hardware concurrency

  void validate() const {
    if (size < 4 || size % 2) throw ValidationError("lattice.size: must be even and >= 4");
    if (window_radius < 0 || window_radius >= size / 2)
      throw ValidationError("lattice.window_radius: must lie in [0, size/2)");
    if (!(t_end >= 0.0)) throw ValidationError("horizon: must be non-negative");
    if (replicas == 0) throw ValidationError("replicas: must be positive");
    for (double c : checkpoints)
      if (!(c >= 0.0 && c <= t_end)) throw ValidationError("checkpoints: must lie in [0, horizon]");
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()))
      throw ValidationError("checkpoints: must be increasing");
  }
};

/// Smallest even size >= factor / eps.
inline int torus_size(double size_factor, double epsilon) {
  int s = static_cast<int>(std::ceil(size_factor / epsilon - 1e-9));
  return std::max(4, s + (s % 2));
}

/// Distance a disturbance can plausibly travel from the window edge by time t:
/// W + |v| t + 4 sqrt(alpha~ t) with v the largest particle drift and
/// alpha~ = sum k^2 r~_k. Compared with S/2 to flag seam effects.
struct SeamReach {
  double reach;
  int half_size;
  bool safe() const { return reach <= half_size; }
};

inline SeamReach seam_reach(const ModelParams& p, int size, int window_radius, double t) {
  double drift = 0.0, var = 0.0;
  for (int k = 1; k <= p.spec.m; ++k) {
    drift += k * std::abs(p.q_plus[k - 1] - p.q_minus[k - 1]);
    var += static_cast<double>(k) * k * p.r_tilde[k - 1];
  }
  return {window_radius + drift * t + 4.0 * std::sqrt(var * t), size / 2};
}

inline std::string label(const std::string& base, const std::vector<std::pair<std::string, double>>& keys) {
  std::string s = base;
  if (keys.empty()) return s;
  s += '[';
  for (std::size_t i = 0; i < keys.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%s=%.10g", i ? "," : "", keys[i].first.c_str(), keys[i].second);
    s += buf;
  }
  return s + ']';
}

struct EnsembleSummary {
  std::string estimator;
  ModelParams params;
  int size = 0;
  int window_radius = 0;
  std::string ic;
  double t_end = 0.0;
  std::uint64_t master_seed = 0;
  std::string generator = kGeneratorId;
  std::string engine = kEngineVersion;

  /// Per-replica observables keyed by replica id.
  std::map<std::uint64_t, Observables> samples;
  /// Pooled mean and SE of every observable.
  std::map<std::string, Estimate> estimates;
  /// Estimator-specific derived results (ratios, scores), each with an SE.
  std::map<std::string, Estimate> derived;
  std::vector<std::string> caveats;
  double wall_seconds = 0.0;

  std::size_t replica_count() const { return samples.size(); }

  std::vector<double> sample_vector(const std::string& name) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& [id, obs] : samples) {
      auto it = obs.find(name);
      if (it == obs.end()) throw std::out_of_range("summary: replica " + std::to_string(id) + " lacks " + name);
      out.push_back(it->second);
    }
    return out;
  }

  /// Recomputes pooled estimates from the samples.
  void pool() {
    estimates.clear();
    if (samples.empty()) return;
    for (const auto& [name, v] : samples.begin()->second) {
      (void)v;
      estimates[name] = estimate(sample_vector(name));
    }
  }

  /// Adds another summary's replicas. Both must describe the same job.
  void merge(const EnsembleSummary& other) {
    if (other.estimator != estimator || other.master_seed != master_seed || other.size != size)
      throw std::invalid_argument("merge: summaries describe different jobs");
    for (const auto& [id, obs] : other.samples)
      if (!samples.emplace(id, obs).second)
        throw std::invalid_argument("merge: replica " + std::to_string(id) + " present twice");
    pool();
  }
};

/// Runs fn(replica_id, rng) for every replica of the job on a worker pool.
template <class Fn>
std::map<std::uint64_t, Observables> run_replicas(const EnsembleJob& job, Fn&& fn) {
  std::map<std::uint64_t, Observables> out;
  std::mutex out_mutex;
  std::atomic<std::size_t> next{0};
  std::optional<ReplicaFailure> failure;
  unsigned workers = job.threads ? job.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, job.replicas));

  auto work = [&] {
    for (std::size_t i = next++; i < job.replicas; i = next++) {
      const std::uint64_t id = job.first_replica + i;
      RngStream rng(job.master_seed, id);
      try {
        Observables obs = fn(id, rng);
        std::lock_guard lock(out_mutex);
        out.emplace(id, std::move(obs));
      } catch (const std::exception& e) {
        std::lock_guard lock(out_mutex);
        if (!failure || id < failure->replica_id) failure.emplace(id, rng.seed(), e.what());
        next = job.replicas;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) throw *failure;
  return out;
}

/// Generic driver: runs the replicas and pools every observable.
template <class Fn>
EnsembleSummary run_ensemble(const EnsembleJob& job, const std::string& estimator, Fn&& fn) {
  job.validate();
  const auto start = std::chrono::steady_clock::now();
  EnsembleSummary s;
  s.estimator = estimator;
  s.params = job.params;
  s.size = job.size;
  s.window_radius = job.window_radius;
  s.ic = job.ic.describe();
  s.t_end = job.t_end;
  s.master_seed = job.master_seed;
  s.samples = run_replicas(job, std::forward<Fn>(fn));
  s.pool();
  const auto reach = seam_reach(job.params, job.size, job.window_radius, job.t_end);
  if (!reach.safe()) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "seam reach %.1f exceeds half the torus (%d): torus bias may be visible",
                  reach.reach, reach.half_size);
    s.caveats.emplace_back(buf);
  }
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

/// Final-time height profile on the window plus the flux through 0.
inline EnsembleSummary run_heights(const EnsembleJob& job) {
  const HopSampler sampler(job.params);
  return run_ensemble(job, "heights", [&](std::uint64_t, RngStream& rng) {
    auto cfg = job.ic.make(job.size, rng);
    Observables obs;
    double t_prev = 0.0;
    auto record = [&](double t) {
      const auto h = height_profile(cfg, job.window_radius);
      for (int x = -job.window_radius; x <= job.window_radius; ++x)
        obs[label("h", {{"t", t}, {"x", x}})] = static_cast<double>(h[x + job.window_radius]);
    };
    for (double c : job.checkpoints) {
      run_until(cfg, sampler, c, rng);
      record(c);
      t_prev = c;
    }
    if (t_prev < job.t_end || job.checkpoints.empty()) {
      run_until(cfg, sampler, job.t_end, rng);
      record(job.t_end);
    }
    obs["net_flux"] = static_cast<double>(cfg.net_flux);
    return obs;
  });
}

/// eta^n(x): average of eta over the 2n sites with |y - x| <= n.
inline double local_average(const LatticeConfig& cfg, long x, int n) {
  if (n < 1) throw std::invalid_argument("local_average: radius must be >= 1");
  const int j = cfg.point_at(x);
  long s = 0;
  for (int i = -n; i < n; ++i) s += cfg.eta(wrap(static_cast<long>(j) + i, cfg.size()));
  return static_cast<double>(s) / (2.0 * n);
}

/// Spatial averages of eta and eta(y) eta(y + j), j = 1..max_lag, over the
/// whole torus at each checkpoint (t = 0 included).
inline EnsembleSummary invariance_check(const EnsembleJob& job, int max_lag) {
  const HopSampler sampler(job.params);
  auto s = run_ensemble(job, "invariance", [&](std::uint64_t, RngStream& rng) {
    auto cfg = job.ic.make(job.size, rng);
    Observables obs;
    auto record = [&](double t) {
      const int S = cfg.size();
      double mean = 0.0;
      for (int i = 0; i < S; ++i) mean += cfg.eta(i);
      obs[label("eta_mean", {{"t", t}})] = mean / S;
      for (int j = 1; j <= max_lag; ++j) {
        double c = 0.0;
        for (int i = 0; i < S; ++i) c += cfg.eta(i) * cfg.eta(wrap(static_cast<long>(i) + j, S));
        obs[label("eta_corr", {{"t", t}, {"j", j}})] = c / S;
      }
    };
    record(0.0);
    for (double c : job.checkpoints) {
      if (c == 0.0) continue;
      run_until(cfg, sampler, c, rng);
      record(c);
    }
    return obs;
  });
  double worst = 0.0;
  for (const auto& [name, e] : s.estimates) worst = std::max(worst, std::abs(e.z_score(0.0)));
  s.derived["max_abs_z"] = {worst, 0.0, s.replica_count()};
  return s;
}

/// Simple exclusion with the classical parameters: the per-replica deviation
/// Z_t(x) - (p_t * Z_0)(x) has mean zero exactly. Reports each deviation and
/// the largest standardized one over the window.
inline EnsembleSummary mean_heatflow_check(const EnsembleJob& job) {
  if (job.params.spec.m != 1) throw ValidationError("mean_heatflow: requires m = 1");
  const HopSampler sampler(job.params);
  const auto scales = FieldScales::from(job.params);
  KernelCache cache;
  const int S = job.size, W = job.window_radius;
  auto s = run_ensemble(job, "mean_heatflow", [&](std::uint64_t, RngStream& rng) {
    auto cfg = job.ic.make(S, rng);
    const auto z0 = torus_z_field(cfg, scales);
    Observables obs;
    for (double c : job.checkpoints) {
      run_until(cfg, sampler, c, rng);
      const auto zt = torus_z_field(cfg, scales);
      const auto p = cache.get(c, job.params.r_tilde, S);
      for (int x = -W; x <= W; ++x) {
        double conv = 0.0;
        for (int xp = 0; xp < S; ++xp) conv += p->at(static_cast<long>(x + S / 2) - xp) * z0[xp];
        obs[label("z_dev", {{"t", c}, {"x", x}})] = zt[x + S / 2] - conv;
      }
    }
    return obs;
  });
  double worst = 0.0;
  for (const auto& [name, e] : s.estimates) worst = std::max(worst, std::abs(e.z_score(0.0)));
  s.derived["max_abs_z"] = {worst, 0.0, s.replica_count()};
  return s;
}

/// Accumulates, for tracked points x and offsets l, the jump sum
/// sum dZ(x) dZ(x+l) and the exact integral of Z(x)^2 along the path.
class BracketSink {
public:
  BracketSink(const ModelParams& p, const LatticeConfig& cfg, std::vector<long> points, std::vector<int> offsets)
      : points_(std::move(points)), offsets_(std::move(offsets)), size_(cfg.size()),
        field_(height_from_config(cfg, reach(points_, offsets_), FieldScales::from(p))),
        up_(std::expm1(2.0 * p.tilt())), down_(std::expm1(-2.0 * p.tilt())),
        growth_(2.0 * p.spec.epsilon * p.nu), jumps_(offsets_.size(), 0.0), area_(points_.size(), 0.0),
        t_(cfg.clock) {}

  void on_hop(const HopEvent& e, const LatticeConfig&) {
    integrate(e.time);
    const auto [first, count] = crossed_points(e.origin, e.displacement, size_);
    auto crossed = [&](long x) { return wrap(x + size_ / 2 - first, size_) < count; };
    const double factor = e.displacement > 0 ? up_ : down_;
    for (long x : points_) {
      if (!crossed(x)) continue;
      for (std::size_t i = 0; i < offsets_.size(); ++i)
        if (crossed(x + offsets_[i])) jumps_[i] += factor * factor * field_.z(x) * field_.z(x + offsets_[i]);
    }
    field_.apply_hop(e);
  }
  void advance_to(double t) {
    integrate(t);
    field_.advance_to(t);
  }

  /// sum over tracked x of sum_jumps dZ(x) dZ(x + offsets[i]).
  double jump_sum(std::size_t i) const { return jumps_[i]; }
  /// sum over tracked x of int Z(x)^2 ds.
  double z2_integral() const {
    double s = 0.0;
    for (double a : area_) s += a;
    return s;
  }

private:
  static int reach(const std::vector<long>& pts, const std::vector<int>& offs) {
    long r = 0;
    for (long x : pts)
      for (int l : offs) r = std::max({r, std::abs(x), std::abs(x + l)});
    return static_cast<int>(r) + 1;
  }

  void integrate(double t1) {
    const double dt = t1 - t_;
    if (dt <= 0.0) return;
    // int_{t0}^{t1} exp(-2a h + g s) ds = exp(-2a h + g t0) expm1(g dt) / g
    const double span = growth_ == 0.0 ? dt : std::expm1(growth_ * dt) / growth_;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double z = field_.z(points_[i]);
      area_[i] += z * z * span;
    }
    t_ = t1;
    field_.advance_to(t1);
  }

  std::vector<long> points_;
  std::vector<int> offsets_;
  int size_;
  FieldPair field_;
  double up_, down_, growth_;
  std::vector<double> jumps_;
  std::vector<double> area_;
  double t_;
};

/// Ratio of the empirical bracket to eps lambda^2 alpha_l int Z(x)^2 ds for
/// |l| < m, and the raw empirical bracket (target 0) for |l| >= m.
inline EnsembleSummary bracket_check(const EnsembleJob& job, const std::vector<long>& points,
                                     const std::vector<int>& offsets) {
  const auto& p = job.params;
  const HopSampler sampler(p);
  auto s = run_ensemble(job, "bracket", [&](std::uint64_t, RngStream& rng) {
    auto cfg = job.ic.make(job.size, rng);
    BracketSink sink(p, cfg, points, offsets);
    run_until(cfg, sampler, job.t_end, rng, sink);
    Observables obs;
    obs["z2_integral"] = sink.z2_integral();
    for (std::size_t i = 0; i < offsets.size(); ++i) obs[label("jump_sum", {{"l", offsets[i]}})] = sink.jump_sum(i);
    return obs;
  });
  const auto den = s.sample_vector("z2_integral");
  const double e = p.spec.epsilon, l2 = p.spec.lambda * p.spec.lambda;
  for (int l : offsets) {
    const auto num = s.sample_vector(label("jump_sum", {{"l", l}}));
    const int al = std::abs(l);
    if (al < p.spec.m) {
      std::vector<double> pred(den.size());
      for (std::size_t i = 0; i < den.size(); ++i) pred[i] = e * l2 * p.alpha_l[al] * den[i];
      s.derived[label("ratio", {{"l", l}})] = ratio_estimate(num, pred);
    } else {
      s.derived[label("bracket", {{"l", l}})] = estimate(num);
    }
  }
  return s;
}

/// Bump test function exp(-1/(1 - X^2)) on (-1, 1).
inline double bump(double X) { return std::abs(X) < 1.0 ? std::exp(-1.0 / (1.0 - X * X)) : 0.0; }

/// Integrates eps^3 sum_x phi(eps x) Phi(x) Z(x)^n over time, with
/// Phi(x) = prod_i eta(x + y_i).
class WeakVanishingSink {
public:
  WeakVanishingSink(const ModelParams& p, const LatticeConfig& cfg, std::vector<int> shifts, int power,
                    std::function<double(double)> phi)
      : cfg_(&cfg), shifts_(std::move(shifts)), power_(power), eps_(p.spec.epsilon),
        radius_(static_cast<int>(std::ceil(1.0 / p.spec.epsilon))),
        field_(height_from_config(cfg, radius_, FieldScales::from(p))),
        growth_(power * p.spec.epsilon * p.nu), t_(cfg.clock) {
    for (int x = -radius_; x <= radius_; ++x) weight_.push_back(phi(eps_ * x));
    contrib_.assign(weight_.size(), 0.0);
    refresh();
  }

  void on_hop(const HopEvent& e, const LatticeConfig&) {
    integrate(e.time);
    field_.apply_hop(e);
    const int S = cfg_->size();
    const auto [first, count] = crossed_points(e.origin, e.displacement, S);
    for (int c = 0; c < count; ++c) update_point(wrap(static_cast<long>(first) + c, S));
    const int target = wrap(static_cast<long>(e.origin) + e.displacement, S);
    for (int sh : shifts_) {
      update_point(wrap(static_cast<long>(e.origin) - sh, S));
      update_point(wrap(static_cast<long>(target) - sh, S));
    }
    if (++events_ % 4096 == 0) refresh();
  }
  void advance_to(double t) {
    integrate(t);
    field_.advance_to(t);
  }

  double value() const { return eps_ * eps_ * eps_ * integral_; }
  int radius() const { return radius_; }

private:
  double phi_product(int point) const {
    int v = 1;
    for (int sh : shifts_) v *= cfg_->eta(wrap(static_cast<long>(point) + sh, cfg_->size()));
    return v;
  }
  void update_point(int point) {
    const long x = point - cfg_->size() / 2;
    if (!field_.contains(x)) return;
    const std::size_t i = static_cast<std::size_t>(x + radius_);
    const double c = weight_[i] * phi_product(point) * std::exp(-power_ * field_.scales().tilt() * field_.h(x));
    sum_ += c - contrib_[i];
    contrib_[i] = c;
  }
  void refresh() {
    sum_ = 0.0;
    for (int x = -radius_; x <= radius_; ++x) {
      const std::size_t i = static_cast<std::size_t>(x + radius_);
      contrib_[i] = weight_[i] == 0.0 ? 0.0
                                      : weight_[i] * phi_product(cfg_->point_at(x)) *
                                            std::exp(-power_ * field_.scales().tilt() * field_.h(x));
      sum_ += contrib_[i];
    }
  }
  void integrate(double t1) {
    const double dt = t1 - t_;
    if (dt <= 0.0) return;
    const double span = growth_ == 0.0 ? dt : std::exp(growth_ * t_) * std::expm1(growth_ * dt) / growth_;
    integral_ += sum_ * span;
    t_ = t1;
  }

  const LatticeConfig* cfg_;
  std::vector<int> shifts_;
  int power_;
  double eps_;
  int radius_;
  FieldPair field_;
  double growth_;
  std::vector<double> weight_;
  std::vector<double> contrib_;
  double sum_ = 0.0;
  double integral_ = 0.0;
  double t_;
  std::uint64_t events_ = 0;
};

/// Converts half-integer offsets y_i into site shifts relative to the point index.
inline std::vector<int> offset_shifts(const std::vector<double>& offsets) {
  if (offsets.empty() || offsets.size() > 4) throw ValidationError("weak_vanishing.offsets: need 1 to 4 offsets");
  std::vector<int> shifts;
  for (double y : offsets) {
    const double s = y - 0.5;
    if (std::abs(s - std::round(s)) > 1e-12) throw ValidationError("weak_vanishing.offsets: must be half-integers");
    shifts.push_back(static_cast<int>(std::lround(s)));
  }
  auto sorted = shifts;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ValidationError("weak_vanishing.offsets: must be distinct");
  return shifts;
}

/// U^eps over [0, t_end] for every replica, plus its pooled mean and SE.
inline EnsembleSummary weak_vanishing_estimator(const EnsembleJob& job, const std::vector<double>& offsets, int n,
                                                std::function<double(double)> phi = bump) {
  if (n != 1 && n != 2) throw ValidationError("weak_vanishing.n: must be 1 or 2");
  const auto shifts = offset_shifts(offsets);
  const HopSampler sampler(job.params);
  auto s = run_ensemble(job, "weak_vanishing", [&](std::uint64_t, RngStream& rng) {
    auto cfg = job.ic.make(job.size, rng);
    WeakVanishingSink sink(job.params, cfg, shifts, n, phi);
    run_until(cfg, sampler, job.t_end, rng, sink);
    return Observables{{"U", sink.value()}};
  });
  s.derived["U"] = s.estimates.at("U");
  return s;
}

/// Step-IC observables at macroscopic time T: the F statistic at each X in
/// `f_points` and the delta-normalized field at each X in `mean_points`.
inline EnsembleSummary step_statistics(const EnsembleJob& job, double T, const std::vector<double>& f_points,
                                       const std::vector<double>& mean_points) {
  const auto& p = job.params;
  const auto scales = FieldScales::from(p);
  const HopSampler sampler(p);
  auto s = run_ensemble(job, "step_statistics", [&](std::uint64_t, RngStream& rng) {
    auto cfg = job.ic.make(job.size, rng);
    FieldPair field = height_from_config(cfg, job.window_radius, scales);
    run_until(cfg, sampler, p.micro_time(T), rng, field);
    Observables obs;
    for (double X : f_points) obs[label("F", {{"T", T}, {"X", X}})] = f_statistic(field, T, X);
    const auto z = scaled_field(field, T, mean_points, Normalization::delta);
    for (std::size_t i = 0; i < mean_points.size(); ++i)
      obs[label("Zdelta", {{"T", T}, {"X", mean_points[i]}})] = z.values[i];
    return obs;
  });
  for (double X : mean_points) {
    const auto e = s.estimates.at(label("Zdelta", {{"T", T}, {"X", X}}));
    s.derived[label("delta_mean_z", {{"T", T}, {"X", X}})] = {e.z_score(gaussian(T, X)), 0.0, e.n};
  }
  return s;
}

struct UniversalityReport {
  double ks = 0.0;
  double critical = 0.0;  ///< permutation critical value at `level`
  double level = 0.01;
  std::vector<double> sample_a;
  std::vector<double> sample_b;
  EnsembleSummary summary_a;
  EnsembleSummary summary_b;
  bool below_critical() const { return ks < critical; }
};

/// Two-sample KS distance between the F samples of two step-IC jobs.
inline UniversalityReport universality_compare(const EnsembleJob& a, const EnsembleJob& b, double T, double X,
                                               int permutations = 1000, double level = 0.01) {
  const auto& sa = a.params.spec;
  const auto& sb = b.params.spec;
  if (sa.lambda != sb.lambda || sa.epsilon != sb.epsilon)
    throw ValidationError("compare: jobs must share lambda and epsilon");
  if (a.ic.kind != InitialCondition::Kind::step || b.ic.kind != InitialCondition::Kind::step)
    throw ValidationError("compare: both jobs must use the step initial condition");
  UniversalityReport r;
  r.level = level;
  r.summary_a = step_statistics(a, T, {X}, {});
  r.summary_b = step_statistics(b, T, {X}, {});
  const auto name = label("F", {{"T", T}, {"X", X}});
  r.sample_a = r.summary_a.sample_vector(name);
  r.sample_b = r.summary_b.sample_vector(name);
  r.ks = ks_distance(r.sample_a, r.sample_b);
  r.critical = ks_permutation_critical(r.sample_a, r.sample_b, level, permutations, a.master_seed ^ b.master_seed);
  return r;
}

}  // namespace wasep
