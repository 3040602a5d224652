#pragma once

// Reproducible per-replica random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. Variates are derived with explicit bit arithmetic and inversion
// rather than <random> distributions, whose algorithms differ between
// standard libraries.

#include <cmath>
#include <cstdint>
#include <random>

namespace wasep {

inline constexpr const char* kGeneratorId = "mt19937_64/splitmix64-seed/inversion-v1";

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for replica `replica_id` of a run with `master_seed`.
inline constexpr std::uint64_t replica_seed(std::uint64_t master_seed, std::uint64_t replica_id) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(replica_id + 0x632be59bd9b4e019ULL));
}

class RngStream {
public:
  RngStream(std::uint64_t master_seed, std::uint64_t replica_id)
      : master_seed_(master_seed), replica_id_(replica_id),
        engine_(replica_seed(master_seed, replica_id)) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t replica_id() const { return replica_id_; }
  std::uint64_t seed() const { return replica_seed(master_seed_, replica_id_); }

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exponential variate with the given rate (> 0).
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  /// Uniform integer in [0, n) by 128-bit multiply-shift.
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

private:
  std::uint64_t master_seed_;
  std::uint64_t replica_id_;
  std::mt19937_64 engine_;
};

}  // namespace wasep
