#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "shiftid/detectors.hpp"
#include "shiftid/errors.hpp"

using namespace shiftid;

namespace {

DatasetBundle random_bundle(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, Eigen::Index c, double shift = 0.0) {
  return {FeatureTable(fixtures::gaussian(rng, n, d, shift)), OutputTable(fixtures::softmax_rows(rng, n, c)),
          std::nullopt, "b"};
}

std::vector<double> logit(std::vector<double> v) {
  for (auto& p : v) {
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    p = std::log(p / (1.0 - p));
  }
  return v;
}

}  // namespace

TEST(Bbsd, IdenticalOutputsRetain) {
  std::mt19937_64 rng(1);
  const OutputTable o(fixtures::softmax_rows(rng, 200, 3));
  const auto r = bbsd(o, o, 0.05);
  ASSERT_EQ(r.p_values.size(), 3u);
  for (double p : r.p_values) EXPECT_NEAR(p, 1.0, 1e-12);
  EXPECT_EQ(r.decision, Decision::no_shift);
}

TEST(Bbsd, ComplementaryColumnsGiveEqualPValues) {
  std::mt19937_64 rng(2);
  const OutputTable a(fixtures::softmax_rows(rng, 150, 2)), b(fixtures::softmax_rows(rng, 170, 2));
  const auto r = bbsd(a, b, 0.05);
  EXPECT_EQ(r.statistics[0], r.statistics[1]);
  EXPECT_EQ(r.p_values[0], r.p_values[1]);
}

TEST(Bbsd, InvariantUnderLogitTransform) {
  std::mt19937_64 rng(3);
  RowMatrix shifted = fixtures::softmax_rows(rng, 300, 4);
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) {
    shifted(i, 0) += 0.3;
    shifted.row(i) /= shifted.row(i).sum();
  }
  const OutputTable a(fixtures::softmax_rows(rng, 250, 4)), b(shifted);
  const auto r = bbsd(a, b, 0.05);
  for (std::size_t c = 0; c < 4; ++c) {
    const auto t = stats::ks_two_sample(logit(a.column(c)), logit(b.column(c)));
    EXPECT_EQ(r.statistics[c], t.statistic);
    EXPECT_EQ(r.p_values[c], t.p_value);
  }
  EXPECT_EQ(r.decision, Decision::shift);
}

TEST(Bbsd, ClassCountMismatch) {
  std::mt19937_64 rng(4);
  EXPECT_THROW(bbsd(OutputTable(fixtures::softmax_rows(rng, 10, 2)), OutputTable(fixtures::softmax_rows(rng, 10, 3)),
                    0.05),
               DimensionMismatch);
}

TEST(MmdDetector, IdenticalTablesNeverBelowGridFloor) {
  std::mt19937_64 rng(5);
  const FeatureTable z(fixtures::gaussian(rng, 60, 10));
  const auto r = mmd_detector(z, z, 4, 1000, 0.05, 9);
  EXPECT_GE(r.p_value, 1.0 / 1001.0);
  EXPECT_EQ(r.decision, Decision::no_shift);
}

TEST(MmdDetector, InstrumentUsesPooledProjectionBandwidth) {
  std::mt19937_64 rng(6);
  const FeatureTable a(fixtures::gaussian(rng, 40, 6)), b(fixtures::gaussian(rng, 30, 6, 0.5));
  const auto inst = fit_mmd_instrument(a, b, 3);
  EXPECT_EQ(inst.projector.k(), 3u);
  const auto za = stats::pca_project(inst.projector, a), zb = stats::pca_project(inst.projector, b);
  EXPECT_EQ(inst.kernel.sigma(), stats::median_heuristic_bandwidth(za, zb).sigma());
}

TEST(Duo, CombinedDecisionIsBonferroniOverAllPValues) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 0.06);
  for (int t = 0; t < 5000; ++t) {
    DetectionOutcome o;
    o.alpha = 0.05;
    const std::size_t c = 2 + rng() % 4;
    for (std::size_t i = 0; i < c; ++i) o.bbsd_p_values.push_back(u(rng));
    o.mmd_p_value = u(rng);
    decide(o);
    const double cut = o.alpha / static_cast<double>(c + 1);
    const double min_bbsd = *std::min_element(o.bbsd_p_values.begin(), o.bbsd_p_values.end());
    EXPECT_EQ(o.combined_decision == Decision::shift, min_bbsd <= cut || o.mmd_p_value <= cut);
    EXPECT_EQ(o.bbsd_decision == Decision::shift, min_bbsd <= o.alpha / static_cast<double>(c));
    EXPECT_EQ(o.mmd_decision == Decision::shift, o.mmd_p_value <= o.alpha);
  }
}

TEST(Duo, DeterministicGivenSeed) {
  std::mt19937_64 rng(8);
  const auto ref = random_bundle(rng, 80, 12, 3);
  const auto test = random_bundle(rng, 70, 12, 3, 0.2);
  DetectionConfig cfg;
  cfg.pca_k = 5;
  cfg.num_permutations = 200;
  cfg.seed = 31;
  const auto a = duo_detect(ref, test, cfg);
  const auto b = duo_detect(ref, test, cfg);
  EXPECT_EQ(a.bbsd_p_values, b.bbsd_p_values);
  EXPECT_EQ(a.mmd_p_value, b.mmd_p_value);
  EXPECT_EQ(a.combined_decision, b.combined_decision);
}

TEST(Duo, ReducedPcaKReportsWarning) {
  std::mt19937_64 rng(9);
  const auto ref = random_bundle(rng, 10, 40, 2);
  const auto test = random_bundle(rng, 10, 40, 2);
  DetectionConfig cfg;
  cfg.num_permutations = 50;
  const auto run = run_duo(ref, test, cfg);
  EXPECT_EQ(run.instrument.projector.k(), 19u);
  EXPECT_FALSE(run.pca_warning.empty());
}

TEST(DetectionConfig, Validation) {
  DetectionConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), InvalidAlpha);
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), InvalidAlpha);
  c = {};
  c.pca_k = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.num_permutations = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}
