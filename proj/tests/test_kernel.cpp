#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "wasep/kernel.hpp"

using namespace wasep;

namespace {
const std::vector<double> kUnit{1.0};
}

TEST(Symbol, Examples) {
  EXPECT_EQ(symbol_phi(0.0, {0.3, 0.7}), 0.0);
  EXPECT_NEAR(symbol_phi(std::numbers::pi, {1.0}), 2.0, 1e-15);
  EXPECT_NEAR(symbol_phi(std::numbers::pi / 2, {0.5, 0.5}), 0.5 * 1.0 + 0.5 * 2.0, 1e-15);
  const auto [lo, hi] = symbol_bounds({1.0});
  EXPECT_NEAR(lo, 2.0 / (std::numbers::pi * std::numbers::pi), 1e-12);
  EXPECT_NEAR(hi, 0.5, 1e-6);
  for (const auto& r : std::vector<std::vector<double>>{{0.5, 0.5}, {0.5, 0.3, 0.2}, {0.6, 0.3, 0.1}}) {
    auto p = calibrate({static_cast<int>(r.size()), r, 1.0, 0.01});
    const auto [c0, c1] = symbol_bounds(p.r_tilde);
    EXPECT_GT(c0, 0.0);
    EXPECT_LE(c1, 0.5 * p.alpha * 1.1);
  }
}

TEST(Kernel, DeltaAtTimeZero) {
  auto tab = kernel_table(0.0, std::vector<double>{0.6, 0.4}, 32);
  EXPECT_EQ(tab.values[0], 1.0);
  for (int x = 1; x < 32; ++x) EXPECT_EQ(tab.values[x], 0.0);
  EXPECT_THROW(kernel_table(-1.0, kUnit, 32), std::invalid_argument);
  EXPECT_THROW(kernel_table(1.0, kUnit, 31), std::invalid_argument);
}

TEST(Kernel, NearestNeighbourBessel) {
  auto tab = kernel_table(1.0, kUnit, 64);
  EXPECT_NEAR(tab.at(0), 0.4657596, 5e-8);
  for (double t : {0.5, 3.0, 40.0}) {
    auto k = kernel_table(t, kUnit, 128);
    for (long x = -20; x <= 20; ++x) EXPECT_NEAR(k.at(x), oracle::bessel_kernel(t, 1.0, x, 128), 1e-14);
  }
}

TEST(Kernel, MassPositivityEvenness) {
  for (const auto& r : std::vector<std::vector<double>>{{1.0}, {0.5, 0.5}, {0.48, 0.31, 0.19}}) {
    for (double t : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
      auto tab = kernel_table(t, r, 200);
      EXPECT_NEAR(tab.mass(), 1.0, 1e-12);
      for (int x = 0; x < 200; ++x) {
        EXPECT_GE(tab.values[x], -1e-13);
        EXPECT_EQ(tab.at(x), tab.at(-x));
      }
    }
  }
}

TEST(Kernel, SecondMoment) {
  const std::vector<double> r{0.48, 0.31, 0.19};
  double s = 0.0;
  for (int k = 1; k <= 3; ++k) s += k * k * r[k - 1];
  for (double t : {1.0, 5.0, 20.0}) {
    auto tab = kernel_table(t, r, 6 * confined_size(t, r));
    EXPECT_NEAR(tab.second_moment(), t * s, 1e-8 * std::max(1.0, t * s));
  }
  // tends to alpha t as r~ -> r
  const std::vector<double> rr{0.5, 0.3, 0.2};
  double prev = INFINITY;
  for (double e : {0.05, 0.02, 0.005}) {
    auto p = calibrate({3, rr, 1.0, e});
    auto tab = kernel_table(10.0, p.r_tilde, 6 * confined_size(10.0, p.r_tilde));
    const double gap = std::abs(tab.second_moment() - p.alpha * 10.0);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
}

TEST(Kernel, Semigroup) {
  const std::vector<double> r{0.5, 0.3, 0.2};
  const int S = 120;
  auto a = kernel_table(2.5, r, S), b = kernel_table(4.0, r, S), ab = kernel_table(6.5, r, S);
  const auto conv = convolve(a, b.values);
  for (int x = 0; x < S; ++x) EXPECT_NEAR(conv[x], ab.values[x], 1e-12);
}

TEST(Convolve, Examples) {
  auto tab = kernel_table(3.0, std::vector<double>{0.5, 0.5}, 40);
  std::vector<double> delta(40, 0.0);
  delta[0] = 1.0;
  const auto k = convolve(tab, delta);
  for (int x = 0; x < 40; ++x) EXPECT_NEAR(k[x], tab.values[x], 1e-16);
  const auto one = convolve(tab, std::vector<double>(40, 1.0));
  for (double v : one) EXPECT_NEAR(v, 1.0, 1e-13);
  EXPECT_THROW(convolve(tab, std::vector<double>(39, 1.0)), std::invalid_argument);
}

TEST(Convolve, StepFieldAgainstBesselSum) {
  const int S = 400;
  const double t = 100.0, a = 0.2;
  std::vector<double> z0(S);
  for (int i = 0; i < S; ++i) z0[i] = std::exp(-a * std::abs(i < S / 2 ? i : i - S));
  const auto out = convolve(kernel_table(t, kUnit, S), z0);
  for (int x : {0, 1, 5, 30, 199, 350}) {
    double ref = 0.0;
    for (int xp = 0; xp < S; ++xp) ref += oracle::bessel_kernel(t, 1.0, x - xp, S) * z0[xp];
    EXPECT_NEAR(out[x], ref, 1e-10) << x;
  }
}

TEST(Gaussian, Examples) {
  EXPECT_NEAR(gaussian(1.0, 0.0), 0.3989423, 5e-8);
  EXPECT_EQ(gaussian(2.0, 1.3), gaussian(2.0, -1.3));
  EXPECT_THROW(gaussian(0.0, 0.0), std::invalid_argument);
  double s = 0.0;
  const double h = 1e-3;
  for (double x = -20.0; x <= 20.0; x += h) s += gaussian(1.7, x) * h;
  EXPECT_NEAR(s, 1.0, 1e-10);
}

TEST(ScalingLimit, SimpleExclusionErrorsDecrease) {
  auto rows = scaling_limit_error([](double e) { return gartner_params(1.0, e); }, 1.0, {0.1, 0.05, 0.025});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_LT(rows[1].sup_error, rows[0].sup_error);
  EXPECT_LT(rows[2].sup_error, rows[1].sup_error);
  EXPECT_LT(rows[2].sup_error, 0.01);
}

TEST(ScalingLimit, AlphaSetsTheLimitWidth) {
  const double e = 0.02;
  auto near = calibrate({2, {0.9, 0.1}, 1.0, e});
  auto far = calibrate({2, {0.6, 0.4}, 1.0, e});
  EXPECT_GT(far.alpha, near.alpha);
  const double t = 1.0 / (e * e);
  for (const auto* p : {&near, &far}) {
    const auto tab = kernel_table(t, p->r_tilde, confined_size(t, p->r_tilde));
    const double centre = tab.at(0) / e;
    EXPECT_NEAR(centre, gaussian(p->alpha, 0.0), 0.01);
    const double other = p == &near ? far.alpha : near.alpha;
    EXPECT_GT(std::abs(centre - gaussian(other, 0.0)), 0.05);
  }
  const long x = std::lround(10.0 / e);
  auto tab = kernel_table(t, far.r_tilde, static_cast<int>(4 * x));
  EXPECT_LT(tab.at(x) / e, 1e-6);
  EXPECT_LT(gaussian(far.alpha, 10.0), 1e-6);
}

TEST(Cache, ReusesTablesByExactKey) {
  KernelCache cache;
  auto a = cache.get(1.5, {0.5, 0.5}, 32);
  auto b = cache.get(1.5, {0.5, 0.5}, 32);
  EXPECT_EQ(a.get(), b.get());
  auto c = cache.get(std::nextafter(1.5, 2.0), {0.5, 0.5}, 32);
  EXPECT_NE(a.get(), c.get());
  cache.get(1.5, {0.5, 0.5}, 34);
  EXPECT_EQ(cache.size(), 3u);
}

TEST(Kernel, ConfinedSizeKeepsTorusCloseToLine) {
  const double t = 50.0;
  const int S = confined_size(t, kUnit);
  EXPECT_GE(S, 8 * std::sqrt(t));
  auto tab = kernel_table(t, kUnit, S);
  // wrap-around mass is negligible at the centre of the torus
  for (long x = 0; x <= 2; ++x) EXPECT_NEAR(tab.at(x), oracle::scaled_bessel(static_cast<int>(x), t), 1e-14);
}
