#pragma once

// Continuous-time finite-range exclusion process on a periodic lattice.
//
// Sites i in [0, S) carry half-integer positions y = i - S/2 + 1/2. Integer
// points j in [0, S) carry x = j - S/2; point j sits between sites j-1 and j.
//
// Dynamics: every particle rings at rate sum_k (q_k + q_{-k}) = 1, so the
// aggregate clock rings at rate N (the particle count). A ringing particle,
// chosen uniformly, picks displacement +k with probability q_k and -k with
// probability q_{-k}; the attempt succeeds iff the target is empty. For
// executed hops this is equal in law to independent Poisson clocks of rate
// q_{+-k} on every (site, displacement) pair.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "wasep/params.hpp"
#include "wasep/rng.hpp"

namespace wasep {

struct HopEvent {
  double time = 0.0;
  int origin = 0;        ///< site index of the hopping particle
  int displacement = 0;  ///< signed, 1 <= |k| <= m
  bool executed = false;
};

inline int wrap(long i, int size) {
  const long r = i % size;
  return static_cast<int>(r < 0 ? r + size : r);
}

class LatticeConfig {
public:
  explicit LatticeConfig(int size) : occupied_(check_size(size), 0), slot_(size, -1) {}

  int size() const { return static_cast<int>(occupied_.size()); }
  bool occupied(int site) const { return occupied_[site] != 0; }
  int eta(int site) const { return occupied_[site] ? 1 : -1; }
  std::size_t particle_count() const { return particles_.size(); }
  const std::vector<int>& particles() const { return particles_; }

  /// Half-integer position of site i.
  double position(int site) const { return site - size() / 2 + 0.5; }
  /// Site index of the half-integer position y (taken modulo the circumference).
  int site_at(double y) const { return wrap(static_cast<long>(std::floor(y)) + size() / 2, size()); }
  /// Integer-point index of x.
  int point_at(long x) const { return wrap(x + size() / 2, size()); }

  double clock = 0.0;
  /// Net number of particles that crossed x = 0 rightwards since t = 0.
  long net_flux = 0;

  void place(int site) {
    if (occupied_[site]) return;
    occupied_[site] = 1;
    slot_[site] = static_cast<int>(particles_.size());
    particles_.push_back(site);
  }

  void remove(int site) {
    if (!occupied_[site]) return;
    const int s = slot_[site];
    const int last = particles_.back();
    particles_[s] = last;
    slot_[last] = s;
    particles_.pop_back();
    slot_[site] = -1;
    occupied_[site] = 0;
  }

  /// Moves the particle at `from` to the empty site `to`.
  void move(int from, int to) {
    assert(occupied_[from] && !occupied_[to]);
    const int s = slot_[from];
    particles_[s] = to;
    slot_[to] = s;
    slot_[from] = -1;
    occupied_[from] = 0;
    occupied_[to] = 1;
  }

  /// Throws std::logic_error if the particle index and occupancy disagree.
  void check_consistency() const {
    std::size_t count = 0;
    for (int i = 0; i < size(); ++i) {
      if (occupied_[i]) {
        ++count;
        if (slot_[i] < 0 || particles_[slot_[i]] != i)
          throw std::logic_error("lattice: particle index out of sync at site " + std::to_string(i));
      } else if (slot_[i] != -1) {
        throw std::logic_error("lattice: stale slot at empty site " + std::to_string(i));
      }
    }
    if (count != particles_.size()) throw std::logic_error("lattice: particle count mismatch");
  }

private:
  static int check_size(int size) {
    if (size < 4 || size % 2 != 0)
      throw ValidationError("lattice.size: must be even and >= 4, got " + std::to_string(size));
    return size;
  }

  std::vector<std::uint8_t> occupied_;
  std::vector<int> slot_;
  std::vector<int> particles_;
};

/// Step initial condition: sites with y > 0 occupied, y < 0 empty.
inline LatticeConfig init_step(int size) {
  LatticeConfig c(size);
  for (int i = size / 2; i < size; ++i) c.place(i);
  return c;
}

/// I.i.d. occupation with probability `density`, drawn in site order.
inline LatticeConfig init_bernoulli(int size, double density, RngStream& rng) {
  if (!(density >= 0.0 && density <= 1.0))
    throw ValidationError("ic.bernoulli: density must lie in [0, 1]");
  LatticeConfig c(size);
  for (int i = 0; i < size; ++i)
    if (rng.bernoulli(density)) c.place(i);
  return c;
}

/// Displacement law of a single attempt: +k w.p. q_k, -k w.p. q_{-k}.
class HopSampler {
public:
  explicit HopSampler(const ModelParams& p) {
    double acc = 0.0;
    for (int k = 1; k <= p.spec.m; ++k) {
      acc += p.q_plus[k - 1];
      cumulative_.push_back(acc);
      displacement_.push_back(k);
      acc += p.q_minus[k - 1];
      cumulative_.push_back(acc);
      displacement_.push_back(-k);
    }
    total_ = acc;
  }

  int sample(double u) const {
    const double x = u * total_;
    for (std::size_t i = 0; i + 1 < cumulative_.size(); ++i)
      if (x < cumulative_[i]) return displacement_[i];
    return displacement_.back();
  }

  int max_range() const { return displacement_.empty() ? 0 : displacement_[displacement_.size() - 2]; }
  double total_rate() const { return total_; }

private:
  std::vector<double> cumulative_;
  std::vector<int> displacement_;
  double total_ = 0.0;
};

/// Index of the first integer point crossed by a hop and the number crossed.
/// A hop of k from site i crosses points i+1..i+k (k > 0) or i+k+1..i (k < 0).
struct Crossing {
  int first_point;
  int count;
};

inline Crossing crossed_points(int origin, int displacement, int size) {
  if (displacement > 0) return {wrap(origin + 1L, size), displacement};
  return {wrap(static_cast<long>(origin) + displacement + 1, size), -displacement};
}

/// Advances to the next attempted hop, or returns nullopt (clock set to
/// `horizon`) if none occurs before the horizon or the lattice is empty.
inline std::optional<HopEvent> next_event(LatticeConfig& cfg, const HopSampler& sampler,
                                          RngStream& rng, double horizon) {
  const auto n = cfg.particle_count();
  if (n == 0) {
    cfg.clock = horizon;
    return std::nullopt;
  }
  const double t = cfg.clock + rng.exponential(static_cast<double>(n) * sampler.total_rate());
  if (t > horizon) {
    cfg.clock = horizon;
    return std::nullopt;
  }
  cfg.clock = t;
  HopEvent ev;
  ev.time = t;
  ev.origin = cfg.particles()[rng.index(n)];
  ev.displacement = sampler.sample(rng.uniform());
  const int target = wrap(static_cast<long>(ev.origin) + ev.displacement, cfg.size());
  ev.executed = !cfg.occupied(target);
  if (ev.executed) {
    cfg.move(ev.origin, target);
    const auto [first, count] = crossed_points(ev.origin, ev.displacement, cfg.size());
    const int zero = cfg.size() / 2;
    if (wrap(static_cast<long>(zero) - first, cfg.size()) < count)
      cfg.net_flux += ev.displacement > 0 ? 1 : -1;
  }
  return ev;
}

/// Receives every executed hop after the lattice has been updated.
template <class S>
concept HopSink = requires(S& s, const HopEvent& e, const LatticeConfig& c) { s.on_hop(e, c); };

struct NullSink {
  void on_hop(const HopEvent&, const LatticeConfig&) {}
};

namespace detail {
template <class S>
void forward_reject(S& s, const HopEvent& e) {
  if constexpr (requires { s.on_reject(e); }) s.on_reject(e);
}
template <class S>
void forward_advance(S& s, double t) {
  if constexpr (requires { s.advance_to(t); }) s.advance_to(t);
}
}  // namespace detail

/// Fans events out to several sinks in declaration order.
template <class... Sinks>
class SinkSet {
public:
  explicit SinkSet(Sinks&... sinks) : sinks_(sinks...) {}

  void on_hop(const HopEvent& e, const LatticeConfig& c) {
    std::apply([&](auto&... s) { (s.on_hop(e, c), ...); }, sinks_);
  }
  void on_reject(const HopEvent& e) {
    std::apply([&](auto&... s) { (detail::forward_reject(s, e), ...); }, sinks_);
  }
  void advance_to(double t) {
    std::apply([&](auto&... s) { (detail::forward_advance(s, t), ...); }, sinks_);
  }

private:
  std::tuple<Sinks&...> sinks_;
};

/// Runs the dynamics to `t_end`, emitting executed hops to `sink` in time order.
/// Sinks with `advance_to(t)` are brought up to `t_end` on return; sinks with
/// `on_reject(e)` also see rejected attempts.
template <HopSink Sink>
void run_until(LatticeConfig& cfg, const HopSampler& sampler, double t_end, RngStream& rng,
               Sink& sink) {
  if (t_end < cfg.clock) throw std::invalid_argument("run_until: t_end precedes the clock");
  [[maybe_unused]] const auto count = cfg.particle_count();
  while (auto ev = next_event(cfg, sampler, rng, t_end)) {
    if (ev->executed) {
      sink.on_hop(*ev, cfg);
    } else if constexpr (requires { sink.on_reject(*ev); }) {
      sink.on_reject(*ev);
    }
  }
  assert(cfg.particle_count() == count);
  if constexpr (requires { sink.advance_to(t_end); }) sink.advance_to(t_end);
}

inline void run_until(LatticeConfig& cfg, const HopSampler& sampler, double t_end, RngStream& rng) {
  NullSink none;
  run_until(cfg, sampler, t_end, rng, none);
}

/// Debug event log: CSV rows time,origin,displacement,executed.
class EventLogWriter {
public:
  EventLogWriter(std::FILE* out, int size, bool include_rejected = true)
      : out_(out), size_(size), include_rejected_(include_rejected) {
    std::fputs("time,origin,displacement,executed\n", out_);
  }

  void on_hop(const HopEvent& e, const LatticeConfig&) { write(e); }
  void on_reject(const HopEvent& e) {
    if (include_rejected_) write(e);
  }

private:
  void write(const HopEvent& e) {
    std::fprintf(out_, "%.17g,%.1f,%d,%d\n", e.time, e.origin - size_ / 2 + 0.5, e.displacement,
                 e.executed ? 1 : 0);
  }

  std::FILE* out_;
  int size_;
  bool include_rejected_;
};

}  // namespace wasep
