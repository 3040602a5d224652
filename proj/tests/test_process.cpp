#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "wasep/process.hpp"

using namespace wasep;

namespace {

unsigned mask_of(const LatticeConfig& c) {
  unsigned m = 0;
  for (int i = 0; i < c.size(); ++i)
    if (c.occupied(i)) m |= 1u << i;
  return m;
}

struct AttemptCounter {
  std::map<int, long> attempts;
  long executed = 0;
  void on_hop(const HopEvent& e, const LatticeConfig&) {
    ++attempts[e.displacement];
    ++executed;
  }
  void on_reject(const HopEvent& e) { ++attempts[e.displacement]; }
};

struct ConsistencyChecker {
  std::size_t expected;
  long events = 0;
  void on_hop(const HopEvent& e, const LatticeConfig& c) {
    ++events;
    EXPECT_TRUE(c.occupied(wrap(static_cast<long>(e.origin) + e.displacement, c.size())));
    EXPECT_FALSE(c.occupied(e.origin));
    EXPECT_EQ(c.particle_count(), expected);
    c.check_consistency();
  }
};

struct Displacement {
  long total = 0;
  void on_hop(const HopEvent& e, const LatticeConfig&) { total += e.displacement; }
};

std::string event_log(const ModelParams& p, std::uint64_t seed, std::uint64_t replica) {
  char* buf = nullptr;
  std::size_t len = 0;
  std::FILE* f = open_memstream(&buf, &len);
  RngStream rng(seed, replica);
  auto cfg = init_bernoulli(32, 0.5, rng);
  HopSampler sampler(p);
  EventLogWriter log(f, cfg.size());
  run_until(cfg, sampler, 20.0, rng, log);
  std::fclose(f);
  std::string out(buf, len);
  std::free(buf);
  return out;
}

}  // namespace

TEST(Lattice, StepInitialCondition) {
  auto c = init_step(8);
  EXPECT_EQ(c.particle_count(), 4u);
  std::vector<double> ys;
  for (int i = 0; i < 8; ++i)
    if (c.occupied(i)) ys.push_back(c.position(i));
  EXPECT_EQ(ys, (std::vector<double>{0.5, 1.5, 2.5, 3.5}));
  for (int S : {4, 10, 64, 400}) {
    auto s = init_step(S);
    EXPECT_EQ(s.eta(s.site_at(-0.5)), -1);
    EXPECT_EQ(s.eta(s.site_at(0.5)), 1);
    s.check_consistency();
  }
}

TEST(Lattice, RejectsBadSizes) {
  EXPECT_THROW(init_step(7), ValidationError);
  EXPECT_THROW(init_step(2), ValidationError);
  EXPECT_THROW(LatticeConfig(9), ValidationError);
}

TEST(Lattice, PositionsAndPoints) {
  LatticeConfig c(10);
  EXPECT_DOUBLE_EQ(c.position(0), -4.5);
  EXPECT_DOUBLE_EQ(c.position(9), 4.5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(c.site_at(c.position(i)), i);
  EXPECT_EQ(c.site_at(5.5), 0);  // wraps
  EXPECT_EQ(c.point_at(0), 5);
  EXPECT_EQ(c.point_at(-5), 0);
  EXPECT_EQ(c.point_at(5), 0);
}

TEST(Lattice, PlaceRemoveMoveKeepIndexInSync) {
  LatticeConfig c(12);
  for (int i : {0, 3, 4, 11}) c.place(i);
  c.place(3);
  EXPECT_EQ(c.particle_count(), 4u);
  c.remove(3);
  c.remove(5);
  EXPECT_EQ(c.particle_count(), 3u);
  c.move(11, 5);
  EXPECT_TRUE(c.occupied(5));
  EXPECT_FALSE(c.occupied(11));
  c.check_consistency();
}

TEST(Lattice, BernoulliInitialCondition) {
  RngStream rng(1, 0);
  EXPECT_EQ(init_bernoulli(100, 0.0, rng).particle_count(), 0u);
  EXPECT_EQ(init_bernoulli(100, 1.0, rng).particle_count(), 100u);
  EXPECT_THROW(init_bernoulli(100, 1.5, rng), ValidationError);
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    RngStream r(42, rep);
    const auto n = static_cast<double>(init_bernoulli(10000, 0.5, r).particle_count());
    EXPECT_LE(std::abs(n - 5000.0), 4.0 * std::sqrt(10000 * 0.25));
  }
}

TEST(Sampler, DisplacementLawBoundaries) {
  auto p = calibrate({2, {0.6, 0.4}, 1.0, 0.05});
  HopSampler s(p);
  EXPECT_EQ(s.max_range(), 2);
  EXPECT_NEAR(s.total_rate(), 1.0, 1e-15);
  EXPECT_EQ(s.sample(0.0), 1);
  EXPECT_EQ(s.sample(p.q_plus[0] * 0.999), 1);
  EXPECT_EQ(s.sample(p.q_plus[0] * 1.001), -1);
  EXPECT_EQ(s.sample((p.q_plus[0] + p.q_minus[0]) * 1.001), 2);
  EXPECT_EQ(s.sample(0.9999999), -2);
}

TEST(Crossing, PointsBetweenOriginAndTarget) {
  // site 5 on S=10 is y = 1/2; point j is x = j - 5
  auto c = crossed_points(5, 3, 10);
  EXPECT_EQ(c.first_point, 6);
  EXPECT_EQ(c.count, 3);
  c = crossed_points(4, 1, 10);  // y = -1/2 -> 1/2 crosses x = 0
  EXPECT_EQ(c.first_point, 5);
  EXPECT_EQ(c.count, 1);
  c = crossed_points(5, -2, 10);  // y = 1/2 -> -3/2 crosses x = 0, -1
  EXPECT_EQ(c.first_point, 4);
  EXPECT_EQ(c.count, 2);
  c = crossed_points(0, -1, 10);  // across the seam
  EXPECT_EQ(c.first_point, 0);
}

TEST(Events, EmptyLatticeJumpsToHorizon) {
  auto p = gartner_params(1.0, 0.1);
  HopSampler s(p);
  LatticeConfig c(16);
  RngStream rng(3, 0);
  EXPECT_FALSE(next_event(c, s, rng, 5.0).has_value());
  EXPECT_DOUBLE_EQ(c.clock, 5.0);
  run_until(c, s, 9.0, rng);
  EXPECT_DOUBLE_EQ(c.clock, 9.0);
}

TEST(Events, ZeroLengthRunEmitsNothing) {
  auto p = gartner_params(1.0, 0.1);
  HopSampler s(p);
  auto c = init_step(16);
  RngStream rng(3, 0);
  run_until(c, s, 2.0, rng);
  AttemptCounter counter;
  run_until(c, s, 2.0, rng, counter);
  EXPECT_EQ(counter.executed, 0);
  EXPECT_TRUE(counter.attempts.empty());
  EXPECT_THROW(run_until(c, s, 1.0, rng), std::invalid_argument);
}

TEST(Events, SingleParticleDrift) {
  auto p = calibrate({2, {0.7, 0.3}, 1.5, 0.09});
  HopSampler s(p);
  double mean = 0.0, var = 0.0;
  for (int k = 1; k <= 2; ++k) {
    mean += k * (p.q_plus[k - 1] - p.q_minus[k - 1]);
    var += k * k * (p.q_plus[k - 1] + p.q_minus[k - 1]);
  }
  double closed = 0.0;
  for (int k = 1; k <= 2; ++k) closed -= std::sqrt(0.09) * k * p.spec.r[k - 1] * p.gamma[k - 1];
  EXPECT_NEAR(mean, closed, 1e-15);

  const double t = 2e5;
  LatticeConfig c(64);
  c.place(10);
  RngStream rng(11, 0);
  Displacement d;
  run_until(c, s, t, rng, d);
  const double se = std::sqrt(var * t) / t;
  EXPECT_NEAR(d.total / t, mean, 4 * se);
}

// Equality in law of the aggregate engine with independent Poisson clocks:
// the empirical occupation law after time t matches the exact transient law.
class TinyTorus : public ::testing::TestWithParam<int> {};

TEST_P(TinyTorus, MatchesExactGenerator) {
  const int m = GetParam();
  const auto p = m == 1 ? gartner_params(1.0, 0.2) : calibrate({2, {0.5, 0.5}, 1.0, 0.1});
  std::vector<std::pair<double, double>> rates;
  for (int k = 0; k < m; ++k) rates.emplace_back(p.q_plus[k], p.q_minus[k]);
  oracle::SmallExclusion ctmc(6, 2, rates);
  ASSERT_EQ(ctmc.states.size(), 15u);
  const unsigned start = 0b000011;
  const double t = 1.3;
  const auto exact = ctmc.transient(start, t);

  const int R = 30000;
  std::vector<double> counts(15, 0.0);
  HopSampler s(p);
  for (int rep = 0; rep < R; ++rep) {
    LatticeConfig c(6);
    c.place(0);
    c.place(1);
    RngStream rng(2024 + m, rep);
    run_until(c, s, t, rng);
    counts[ctmc.index.at(mask_of(c))] += 1.0;
  }
  for (std::size_t i = 0; i < 15; ++i) {
    const double f = counts[i] / R;
    const double se = std::sqrt(exact[i] * (1 - exact[i]) / R);
    EXPECT_NEAR(f, exact[i], 4 * se + 1e-12) << "state " << ctmc.states[i];
  }
}

INSTANTIATE_TEST_SUITE_P(Ranges, TinyTorus, ::testing::Values(1, 2));

TEST(Events, AttemptFrequenciesMatchRates) {
  auto p = calibrate({3, {0.5, 0.3, 0.2}, 1.0, 0.05});
  HopSampler s(p);
  RngStream rng(5, 0);
  auto c = init_bernoulli(128, 0.5, rng);
  AttemptCounter counter;
  run_until(c, s, 4000.0, rng, counter);
  long total = 0;
  for (auto& [k, n] : counter.attempts) total += n;
  ASSERT_GT(total, 100000);
  for (int k = 1; k <= 3; ++k) {
    for (int dir : {+1, -1}) {
      const double q = dir > 0 ? p.q_plus[k - 1] : p.q_minus[k - 1];
      const double f = static_cast<double>(counter.attempts[dir * k]) / total;
      EXPECT_NEAR(f, q, 4 * std::sqrt(q * (1 - q) / total)) << "k=" << dir * k;
    }
  }
}

TEST(Events, ExclusionAndConservation) {
  auto p = calibrate({3, {0.5, 0.3, 0.2}, 1.0, 0.05});
  HopSampler s(p);
  RngStream rng(8, 1);
  auto c = init_bernoulli(40, 0.6, rng);
  ConsistencyChecker check{c.particle_count()};
  run_until(c, s, 50.0, rng, check);
  EXPECT_GT(check.events, 100);
  EXPECT_EQ(c.particle_count(), check.expected);
  EXPECT_DOUBLE_EQ(c.clock, 50.0);
}

TEST(Events, DeterministicEventLog) {
  auto p = calibrate({2, {0.5, 0.5}, 1.0, 0.05});
  const auto a = event_log(p, 99, 4), b = event_log(p, 99, 4), c = event_log(p, 99, 5);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(a.rfind("time,origin,displacement,executed\n", 0), 0u);
  EXPECT_NE(a.find(",0\n"), std::string::npos);  // rejected attempts are listed
  EXPECT_NE(a.find(",1\n"), std::string::npos);
}

TEST(Events, RandomStreamIdentity) {
  RngStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  EXPECT_EQ(a.seed(), b.seed());
  EXPECT_NE(a.seed(), c.seed());
  EXPECT_NE(a.seed(), d.seed());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.bits(), b.bits());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(a.index(7), 7u);
  }
}

TEST(Invariance, BernoulliHalfStaysCentred) {
  auto p = calibrate({2, {0.5, 0.5}, 1.0, 0.05});
  HopSampler s(p);
  const int R = 60, S = 256;
  double sum = 0.0, sum2 = 0.0;
  for (int rep = 0; rep < R; ++rep) {
    RngStream rng(31, rep);
    auto c = init_bernoulli(S, 0.5, rng);
    run_until(c, s, 100.0, rng);
    double avg = 0.0;
    for (int i = 0; i < S; ++i) avg += c.eta(i);
    avg /= S;
    sum += avg;
    sum2 += avg * avg;
  }
  const double mean = sum / R;
  const double se = std::sqrt((sum2 / R - mean * mean) / (R - 1));
  EXPECT_LE(std::abs(mean), 4 * se);
}

TEST(Invariance, StepChangesOnlyNearFrontAndSeam) {
  auto p = calibrate({2, {0.5, 0.5}, 1.0, 0.05});
  HopSampler s(p);
  const int S = 64;
  auto c = init_step(S);
  RngStream rng(12, 0);
  run_until(c, s, 0.3, rng);
  const auto ref = init_step(S);
  for (int i = 0; i < S; ++i) {
    const double y = c.position(i);
    if (std::abs(y) > 10 && std::abs(y) < S / 2 - 10) {
      EXPECT_EQ(c.occupied(i), ref.occupied(i)) << y;
    }
  }
}

TEST(Reversibility, SymmetricRatesLeaveUniformMeasureStationary) {
  ModelSpec spec{2, {0.4, 0.6}, 1.0, 0.05};
  auto p = assemble_params(spec, {0.0, 0.0}, spec.r);
  EXPECT_DOUBLE_EQ(p.q_plus[0], p.q_minus[0]);
  std::vector<std::pair<double, double>> rates{{p.q_plus[0], p.q_minus[0]}, {p.q_plus[1], p.q_minus[1]}};
  for (int n = 1; n <= 4; ++n) {
    oracle::SmallExclusion ctmc(8, n, rates);
    std::vector<double> pi(ctmc.states.size(), 1.0 / ctmc.states.size());
    EXPECT_LT(ctmc.stationarity_defect(pi), 1e-15);
  }
}

TEST(Reversibility, TwoPointCorrelationsStayNearZero) {
  ModelSpec spec{2, {0.5, 0.5}, 1.0, 0.05};
  auto p = assemble_params(spec, {0.0, 0.0}, spec.r);
  HopSampler s(p);
  const int R = 400, S = 64;
  for (double t : {1.0, 10.0, 40.0}) {
    double sum = 0.0, sum2 = 0.0;
    for (int rep = 0; rep < R; ++rep) {
      RngStream rng(77, rep);
      auto c = init_bernoulli(S, 0.5, rng);
      run_until(c, s, t, rng);
      double corr = 0.0;
      for (int i = 0; i < S; ++i) corr += c.eta(i) * c.eta((i + 1) % S);
      corr /= S;
      sum += corr;
      sum2 += corr * corr;
    }
    const double mean = sum / R;
    const double se = std::sqrt((sum2 / R - mean * mean) / (R - 1));
    // the canonical ensemble at fixed N carries an O(1/S) negative correlation
    EXPECT_LE(std::abs(mean), 4 * se + 1.0 / S) << "t=" << t;
  }
}
