#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "shiftid/errors.hpp"
#include "shiftid/stats.hpp"

using namespace shiftid;
using namespace shiftid::stats;

TEST(KolmogorovSmirnov, IdenticalSamples) {
  const std::vector<double> a{0.1, 0.5, 0.9};
  const auto r = ks_two_sample(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
}

TEST(KolmogorovSmirnov, DisjointSupports) {
  const std::vector<double> a{0, 0, 0, 0}, b{1, 1, 1, 1};
  EXPECT_EQ(ks_two_sample(a, b).statistic, 1.0);
}

TEST(KolmogorovSmirnov, ShiftedUniformsMatchOracle) {
  std::mt19937_64 rng(2024);
  const auto a = fixtures::uniform(rng, 500, 0.0, 1.0);
  const auto b = fixtures::uniform(rng, 500, 0.3, 1.3);
  const auto r = ks_two_sample(a, b);
  EXPECT_EQ(r.statistic, oracle::ks_statistic(a, b));
  EXPECT_NEAR(r.p_value, oracle::ks_p_value(a, b), 1e-6);
  EXPECT_LT(r.p_value, 1e-10);
}

TEST(KolmogorovSmirnov, TiesStepTogether) {
  const std::vector<double> a{1, 1, 2, 2, 3}, b{1, 2, 2, 2, 2, 4};
  EXPECT_EQ(ks_statistic(a, b), oracle::ks_statistic(a, b));
}

TEST(KolmogorovSmirnov, SymmetricExactly) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const auto a = fixtures::uniform(rng, 1 + rng() % 60, 0.0, 1.0);
    const auto b = fixtures::uniform(rng, 1 + rng() % 60, 0.1, 1.0);
    const auto ab = ks_two_sample(a, b);
    const auto ba = ks_two_sample(b, a);
    EXPECT_EQ(ab.statistic, ba.statistic);
    EXPECT_EQ(ab.p_value, ba.p_value);
  }
}

TEST(KolmogorovSmirnov, RandomInstancesMatchOracle) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 50; ++t) {
    const auto a = fixtures::uniform(rng, 5 + rng() % 200, 0.0, 1.0);
    const double shift = 0.3 * static_cast<double>(rng() % 100) / 100.0;
    auto b = fixtures::uniform(rng, 5 + rng() % 200, shift, 1.0 + shift);
    for (std::size_t i = 0; i < b.size(); i += 7) b[i] = a[i % a.size()];  // inject ties
    const auto r = ks_two_sample(a, b);
    EXPECT_EQ(r.statistic, oracle::ks_statistic(a, b));
    EXPECT_NEAR(r.p_value, oracle::ks_p_value(a, b), 1e-6);
  }
}

TEST(KolmogorovSurvival, MatchesSeriesOracleAcrossRange) {
  for (double lambda = 0.0; lambda <= 3.5; lambda += 0.01) {
    EXPECT_NEAR(kolmogorov_survival(lambda), oracle::kolmogorov_q(lambda), 1e-9) << lambda;
  }
}

TEST(KolmogorovSmirnov, Errors) {
  const std::vector<double> empty, a{1.0};
  EXPECT_THROW(ks_two_sample(empty, a), EmptyInput);
  const std::vector<double> nan{std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(ks_two_sample(nan, a), ValidationError);
}

TEST(Bonferroni, Examples) {
  const std::vector<double> retain{0.03, 0.5}, reject{0.01, 0.5}, single{0.04};
  EXPECT_FALSE(bonferroni(retain, 0.05).reject);
  EXPECT_DOUBLE_EQ(bonferroni(retain, 0.05).threshold, 0.025);
  EXPECT_TRUE(bonferroni(reject, 0.05).reject);
  EXPECT_TRUE(bonferroni(single, 0.05).reject);
}

TEST(Bonferroni, Errors) {
  const std::vector<double> empty, p{0.5}, bad{1.5};
  EXPECT_THROW(bonferroni(empty, 0.05), EmptyInput);
  EXPECT_THROW(bonferroni(p, 0.0), InvalidAlpha);
  EXPECT_THROW(bonferroni(p, 1.0), InvalidAlpha);
  EXPECT_THROW(bonferroni(bad, 0.05), ValidationError);
}

TEST(Bonferroni, LoweringAPValueNeverFlipsRejectToRetain) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> p(1 + rng() % 5);
    for (auto& v : p) v = u(rng);
    const bool before = bonferroni(p, 0.05).reject;
    p[rng() % p.size()] *= u(rng) * 10.0;
    if (before) EXPECT_TRUE(bonferroni(p, 0.05).reject);
  }
}
