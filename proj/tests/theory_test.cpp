/*
 * Copyright 2026 The gdecal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gdecal/theory.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "gdecal/calibration.hpp"
#include "gdecal/metrics.hpp"

namespace gdecal {
namespace {

template <typename Fn>
Errc CodeOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no gdecal::Error thrown";
  return Errc::kInvalidArgument;
}

// Brute-force oracle for the exact moments over ordered hypothesis pairs.
struct Moments {
  double var_dis = 0, var_err = 0, ete = 0, edr = 0, max_ratio = 0.5;
};

Moments BruteForce(const HypothesisDistribution& hd, const std::vector<int>& labels) {
  const std::size_t h = hd.n_hypotheses(), n = hd.n_points();
  std::vector<double> err(h);
  for (std::size_t a = 0; a < h; ++a) {
    int wrong = 0;
    for (std::size_t i = 0; i < n; ++i) wrong += hd.predictions[a][i] != labels[i];
    err[a] = static_cast<double>(wrong) / static_cast<double>(n);
  }
  Moments m;
  double e2 = 0, d2 = 0;
  for (std::size_t a = 0; a < h; ++a) {
    m.ete += hd.probabilities[a] * err[a];
    e2 += hd.probabilities[a] * err[a] * err[a];
    for (std::size_t b = 0; b < h; ++b) {
      int diff = 0;
      for (std::size_t i = 0; i < n; ++i) diff += hd.predictions[a][i] != hd.predictions[b][i];
      const double d = static_cast<double>(diff) / static_cast<double>(n);
      const double p = hd.probabilities[a] * hd.probabilities[b];
      m.edr += p * d;
      d2 += p * d * d;
      if (err[a] + err[b] > 0) m.max_ratio = std::max(m.max_ratio, d / (err[a] + err[b]));
    }
  }
  m.var_err = e2 - m.ete * m.ete;
  m.var_dis = d2 - m.edr * m.edr;
  return m;
}

TEST(GenClasswiseCalibrated, LabelsEqualConfidences) {
  RandomSource rng(1);
  const Population pop = GenClasswiseCalibrated(2, 30, rng);
  for (const Atom& a : pop.atoms()) EXPECT_EQ(a.hhat, a.label_dist);
  EXPECT_NEAR(CaceExact(pop), 0.0, 1e-12);
}

TEST(GenClasswiseCalibrated, ConstructionRuleOnKnownAtom) {
  // The generator's rule applied to a fixed row, through the population type.
  const Population pop({{1.0, {0.3, 0.7}, {0.3, 0.7}}});
  EXPECT_EQ(MaxClassWiseDeviation(pop), 0.0);
  EXPECT_TRUE(CheckGde(pop).holds);
}

TEST(GenClasswiseCalibrated, PairedAtomsAreOnlyCalibratedJointly) {
  RandomSource rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(rng.UniformIndex(9));
    const Population pop = GenClasswiseCalibrated(k, 20, rng, true);
    ASSERT_LE(MaxClassWiseDeviation(pop), 1e-12);
    ASSERT_LE(CheckGde(pop).gap, 1e-12);
  }
}

TEST(GenAggregatedNotClasswise, AggregatedButNotClasswise) {
  RandomSource rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 3 + static_cast<int>(rng.UniformIndex(8));
    const Population pop = GenAggregatedNotClasswise(k, rng);
    ASSERT_LE(CaceExact(pop), 1e-12);
    ASSERT_GT(MaxClassWiseDeviation(pop), 0.05);
    ASSERT_LE(CheckGde(pop).gap, 1e-12);
  }
}

TEST(GenAggregatedNotClasswise, BinaryIsConstructionError) {
  RandomSource rng(4);
  EXPECT_EQ(CodeOf([&] { GenAggregatedNotClasswise(2, rng); }), Errc::kConstruction);
}

TEST(TwoAtomCounterexample, CalibratedSolution) {
  const Population pop = TwoAtomCounterexample(0.1, 0.2);
  EXPECT_TRUE(CheckGde(pop).holds);
  EXPECT_LE(CaceExact(pop), 1e-12);
  EXPECT_LE(MaxClassWiseDeviation(pop), 1e-12);
}

TEST(TwoAtomCounterexample, UncalibratedSolution) {
  const Population pop = TwoAtomCounterexample(0.25, 0.0);
  const GdeCheck g = CheckGde(pop);
  EXPECT_TRUE(g.holds);
  EXPECT_EQ(g.expected_test_error, g.expected_disagreement);
  EXPECT_DOUBLE_EQ(g.expected_test_error, 0.25);
  EXPECT_DOUBLE_EQ(g.expected_disagreement, 0.25);
  // 0.15 + 0.5 (0.8 eps1 + 0.6 eps2) at eps1 = 0.25, eps2 = 0.
  EXPECT_NEAR(g.expected_test_error, 0.15 + 0.5 * (0.8 * 0.25 + 0.6 * 0.0), 1e-15);
  EXPECT_NEAR(CaceExact(pop), 0.35, 1e-15);
}

TEST(TwoAtomCounterexample, ConstraintViolation) {
  EXPECT_EQ(CodeOf([] { TwoAtomCounterexample(0.5, 0.5); }), Errc::kConstraint);
  EXPECT_EQ(CodeOf([] { TwoAtomCounterexample(1.5, -1.0); }), Errc::kConstraint);
}

TEST(CheckGde, CalibratedAndEasyHardHold) {
  RandomSource rng(5);
  EXPECT_TRUE(CheckGde(GenClasswiseCalibrated(5, 40, rng)).holds);
  EXPECT_TRUE(CheckGde(EasyHardPopulation(0.3, 7)).holds);
  EXPECT_FALSE(CheckGde(Population({{1.0, {0.9, 0.1}, {0.0, 1.0}}})).holds);
}

TEST(CheckDeviationBound, RandomPopulationsRespectBothBounds) {
  RandomSource rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(rng.UniformIndex(5));
    const Population pop = RandomPopulation(k, 1 + static_cast<int>(rng.UniformIndex(20)), rng);
    const DeviationBoundCheck c = CheckDeviationBound(pop);
    ASSERT_TRUE(c.ok);
    ASSERT_TRUE(c.refined_ok);
    ASSERT_NEAR(c.gap, std::abs(ExpectedTestError(pop) - ExpectedDisagreement(pop)), 1e-15);
  }
}

TEST(CheckDeviationBound, CalibratedAndCounterexample) {
  RandomSource rng(7);
  const DeviationBoundCheck cal = CheckDeviationBound(GenClasswiseCalibrated(3, 10, rng));
  EXPECT_TRUE(cal.ok);
  EXPECT_LE(cal.gap, 1e-12);
  const DeviationBoundCheck cex = CheckDeviationBound(TwoAtomCounterexample(0.25, 0.0));
  EXPECT_TRUE(cex.ok);
  EXPECT_EQ(cex.gap, 0.0);
  EXPECT_NEAR(cex.cace, 0.35, 1e-15);
}

TEST(CheckDeviationBound, RefinedBoundIsTightOnOneSidedLevelSets) {
  // Binary atom hhat = (1, 0) with label (1 - e, e): the whole deviation sits
  // at q = 0 and q = 1, so gap equals the refined score.
  const double e = 0.3;
  const DeviationBoundCheck c = CheckDeviationBound(Population({{1.0, {1.0, 0.0}, {1 - e, e}}}));
  EXPECT_NEAR(c.gap, e, 1e-15);
  EXPECT_NEAR(c.refined_cace, e, 1e-15);
  EXPECT_NEAR(c.cace, 2 * e, 1e-15);
}

TEST(EasyHardPopulation, Examples) {
  const GdeCheck all_hard = CheckGde(EasyHardPopulation(1.0, 10));
  EXPECT_EQ(all_hard.expected_test_error, 0.9);
  EXPECT_EQ(all_hard.expected_disagreement, 0.9);
  const GdeCheck none = CheckGde(EasyHardPopulation(0.0, 10));
  EXPECT_EQ(none.expected_test_error, 0.0);
  EXPECT_EQ(none.expected_disagreement, 0.0);
  const GdeCheck half = CheckGde(EasyHardPopulation(0.5, 2));
  EXPECT_NEAR(half.expected_test_error, 0.25, 1e-15);
  EXPECT_NEAR(half.expected_disagreement, 0.25, 1e-15);
  EXPECT_EQ(CodeOf([] { EasyHardPopulation(1.5, 3); }), Errc::kInvalidArgument);
}

TEST(BinaryLevelSet, IdentityAcrossGrid) {
  for (int i = 0; i <= 10; ++i) {
    const double q = i / 10.0;
    const GdeCheck g = CheckGde(BinaryLevelSet(q));
    EXPECT_EQ(g.expected_test_error, g.expected_disagreement);
    EXPECT_NEAR(g.expected_test_error, q * (1 - q) + (1 - q) * q, 1e-15);
  }
}

TEST(VarianceCertificate, IdenticalHypotheses) {
  HypothesisDistribution hd;
  hd.n_classes = 2;
  hd.probabilities = {0.5, 0.5};
  hd.predictions = {{0, 1, 1, 0}, {0, 1, 1, 0}};
  const std::vector<int> labels = {0, 1, 0, 0};
  const KappaCertificate c = VarianceCertificate(hd, labels);
  EXPECT_EQ(c.kappa_hat, 0.5);
  EXPECT_EQ(c.var_dis, 0.0);
  EXPECT_TRUE(c.holds);
}

TEST(VarianceCertificate, DisjointErrorsGiveKappaOne) {
  HypothesisDistribution hd;
  hd.n_classes = 2;
  hd.probabilities = {0.5, 0.5};
  std::vector<int> a(10, 0), b(10, 0);
  a[0] = 1;
  b[1] = 1;
  hd.predictions = {a, b};
  const KappaCertificate c = VarianceCertificate(hd, std::vector<int>(10, 0));
  EXPECT_NEAR(c.kappa_hat, 1.0, 1e-15);
  EXPECT_TRUE(c.holds);
}

TEST(VarianceCertificate, MatchesBruteForceOnRandomDistributions) {
  RandomSource rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const HypothesisDistribution hd = RandomHypothesisDistribution(3, 5, 50, rng);
    std::vector<int> labels(50);
    for (int& y : labels) y = static_cast<int>(rng.UniformIndex(3));
    const KappaCertificate c = VarianceCertificate(hd, labels);
    const Moments m = BruteForce(hd, labels);
    ASSERT_NEAR(c.ete, m.ete, 1e-12);
    ASSERT_NEAR(c.edr, m.edr, 1e-12);
    ASSERT_NEAR(c.var_err, m.var_err, 1e-12);
    ASSERT_NEAR(c.var_dis, m.var_dis, 1e-12);
    ASSERT_NEAR(c.kappa_hat, std::min(1.0, m.max_ratio), 1e-12);
    ASSERT_LE(c.var_dis, c.general_rhs + 1e-12);
  }
}

TEST(VarianceCertificate, BoundHoldsUnderCalibratedLabels) {
  RandomSource rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.UniformIndex(4));
    const HypothesisDistribution hd = RandomHypothesisDistribution(
        k, 1 + static_cast<int>(rng.UniformIndex(10)),
        1 + static_cast<int>(rng.UniformIndex(100)), rng);
    const auto labels = CalibratedLabels(hd);
    const KappaCertificate c = VarianceCertificate(hd, labels);
    ASSERT_NEAR(c.ete, c.edr, 1e-12);
    ASSERT_GE(c.kappa_hat, 0.5);
    ASSERT_LE(c.kappa_hat, 1.0);
    ASSERT_TRUE(c.holds) << c.var_dis << " > " << c.bound_rhs;
  }
}

TEST(InducedProfile, RowsAreHypothesisMarginals) {
  HypothesisDistribution hd;
  hd.n_classes = 3;
  hd.probabilities = {0.2, 0.3, 0.5};
  hd.predictions = {{0, 1}, {2, 1}, {2, 0}};
  const ProbabilityProfile p = InducedProfile(hd);
  EXPECT_NEAR(p.at(0, 0), 0.2, 1e-15);
  EXPECT_NEAR(p.at(0, 2), 0.8, 1e-15);
  EXPECT_NEAR(p.at(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(p.at(1, 1), 0.5, 1e-15);
}

TEST(RunTheorySuite, AllChecksPassAndAreDeterministic) {
  const auto a = RunTheorySuite({0, 200});
  const auto b = RunTheorySuite({0, 200});
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 7u);
  for (const TheoryResult& r : a) {
    EXPECT_TRUE(r.pass) << r.name << ": " << r.detail;
    EXPECT_GT(r.cases, 0u);
  }
}

}  // namespace
}  // namespace gdecal
