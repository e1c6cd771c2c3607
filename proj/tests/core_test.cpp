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

#include "gdecal/core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

namespace gdecal {
namespace {

std::vector<std::string> Ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
  return ids;
}

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

TEST(ValidateProfile, ExactSimplexRowIsUnchanged) {
  ProbabilityProfile p(Ids(1), 2, {0.5, 0.5});
  EXPECT_EQ(p.at(0, 0), 0.5);
  EXPECT_EQ(p.at(0, 1), 0.5);
}

TEST(ValidateProfile, RowWithinToleranceIsRenormalized) {
  ProbabilityProfile p(Ids(1), 2, {0.5000004, 0.4999996});
  long double sum = static_cast<long double>(p.at(0, 0)) + p.at(0, 1);
  EXPECT_EQ(sum, 1.0L);
  EXPECT_NEAR(p.at(0, 0), 0.5000004, 1e-15);
}

TEST(ValidateProfile, RowSummingToMoreThanOneIsRejected) {
  EXPECT_EQ(CodeOf([] { ProbabilityProfile(Ids(1), 2, {0.7, 0.7}); }),
            Errc::kNormalization);
}

TEST(ValidateProfile, EntryOutsideUnitIntervalIsRangeError) {
  EXPECT_EQ(CodeOf([] { ProbabilityProfile(Ids(1), 2, {1.5, -0.5}); }),
            Errc::kRange);
  EXPECT_EQ(CodeOf([] { ProbabilityProfile(Ids(1), 2, {NAN, 1.0}); }),
            Errc::kRange);
}

TEST(ValidateProfile, SlightlyNegativeEntryWithinToleranceIsClamped) {
  ProbabilityProfile p(Ids(1), 2, {-1e-8, 1.0 + 1e-8});
  EXPECT_EQ(p.at(0, 0), 0.0);
  EXPECT_EQ(p.at(0, 1), 1.0);
}

TEST(ValidateProfile, IsIdempotent) {
  RandomSource rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> probs;
    const int k = 2 + static_cast<int>(rng.UniformIndex(8));
    for (int i = 0; i < 5; ++i) {
      auto row = rng.UniformSimplex(k);
      // Perturb within tolerance.
      row[0] += (rng.Uniform() - 0.5) * 1e-7;
      probs.insert(probs.end(), row.begin(), row.end());
    }
    const ProbabilityProfile once(Ids(5), k, probs);
    const ProbabilityProfile twice = ValidateProfile(once);
    ASSERT_EQ(once.values(), twice.values());
  }
}

TEST(ValidateProfile, RejectsDuplicateIdsAndBadShapes) {
  EXPECT_EQ(CodeOf([] { ProbabilityProfile({"a", "a"}, 2, {1, 0, 0, 1}); }),
            Errc::kDuplicateId);
  EXPECT_EQ(CodeOf([] { ProbabilityProfile(Ids(2), 2, {1, 0, 0}); }), Errc::kSize);
  EXPECT_EQ(CodeOf([] { ProbabilityProfile(Ids(1), 1, {1}); }), Errc::kClassRange);
}

TEST(EnsembleFromPredictions, TwoModelsSplitEvenly) {
  PredictionMatrix m(Ids(1), 2, {0, 1}, 2);
  const ProbabilityProfile p = EnsembleFromPredictions(m);
  EXPECT_EQ(p.at(0, 0), 0.5);
  EXPECT_EQ(p.at(0, 1), 0.5);
}

TEST(EnsembleFromPredictions, CountsOverModels) {
  PredictionMatrix m(Ids(1), 4, {2, 2, 2, 0}, 3);
  const ProbabilityProfile p = EnsembleFromPredictions(m);
  EXPECT_EQ(p.at(0, 0), 0.25);
  EXPECT_EQ(p.at(0, 1), 0.0);
  EXPECT_EQ(p.at(0, 2), 0.75);
}

TEST(EnsembleFromPredictions, IdenticalColumnsGiveOneHotRows) {
  const std::size_t n = 7, m = 100;
  std::vector<int> classes;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) classes.push_back(static_cast<int>(i % 3));
  }
  const ProbabilityProfile p = EnsembleFromPredictions(PredictionMatrix(Ids(n), m, classes));
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(p.at(i, k), k == static_cast<int>(i % 3) ? 1.0 : 0.0);
    }
  }
}

TEST(EnsembleFromPredictions, RowsLieExactlyOnSimplex) {
  RandomSource rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.UniformIndex(30);
    const int k = 2 + static_cast<int>(rng.UniformIndex(6));
    std::vector<int> classes(10 * m);
    for (int& c : classes) c = static_cast<int>(rng.UniformIndex(static_cast<std::size_t>(k)));
    const ProbabilityProfile p =
        EnsembleFromPredictions(PredictionMatrix(Ids(10), m, classes, k));
    for (std::size_t i = 0; i < 10; ++i) {
      long double sum = 0;
      for (int c = 0; c < k; ++c) {
        // Oracle: count / M.
        const auto count = std::count(classes.begin() + static_cast<long>(i * m),
                                      classes.begin() + static_cast<long>((i + 1) * m), c);
        EXPECT_EQ(p.at(i, c), static_cast<double>(count) / static_cast<double>(m));
        sum += p.at(i, c);
      }
      EXPECT_NEAR(static_cast<double>(sum), 1.0, 1e-15);
    }
  }
}

TEST(PredictionMatrix, InfersAndChecksClassCount) {
  EXPECT_EQ(PredictionMatrix(Ids(2), 1, {0, 4}).n_classes(), 5);
  EXPECT_EQ(PredictionMatrix(Ids(2), 1, {0, 0}).n_classes(), 2);
  EXPECT_EQ(PredictionMatrix(Ids(2), 1, {0, 1}, 6).n_classes(), 6);
  EXPECT_EQ(CodeOf([] { PredictionMatrix(Ids(2), 1, {0, 4}, 3); }), Errc::kClassRange);
  EXPECT_EQ(CodeOf([] { PredictionMatrix(Ids(2), 1, {0, -1}); }), Errc::kClassRange);
}

TEST(PredictionMatrix, RejectsEmptyAndMisshapenInput) {
  EXPECT_EQ(CodeOf([] { PredictionMatrix({}, 1, {}); }), Errc::kSize);
  EXPECT_EQ(CodeOf([] { PredictionMatrix(Ids(2), 0, {}); }), Errc::kSize);
  EXPECT_EQ(CodeOf([] { PredictionMatrix(Ids(2), 2, {0, 1, 1}); }), Errc::kSize);
  EXPECT_EQ(CodeOf([] { PredictionMatrix({"x", "x"}, 1, {0, 1}); }), Errc::kDuplicateId);
}

TEST(PredictionMatrix, SelectModelsKeepsOrderAndClassCount) {
  PredictionMatrix m(Ids(2), 3, {0, 1, 2, 2, 1, 0});
  const std::size_t cols[] = {2, 0};
  const PredictionMatrix s = m.SelectModels(cols);
  EXPECT_EQ(s.n_models(), 2u);
  EXPECT_EQ(s.n_classes(), 3);
  EXPECT_EQ(s.at(0, 0), 2);
  EXPECT_EQ(s.at(0, 1), 0);
  EXPECT_EQ(s.at(1, 0), 0);
  EXPECT_EQ(s.column(1), (std::vector<int>{0, 2}));
}

TEST(LabelVector, AlignsByPointId) {
  LabelVector y({"b", "a", "c"}, {1, 0, 2});
  const LabelVector a = y.AlignedTo({"a", "b", "c"});
  EXPECT_EQ(a.labels(), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(a.point_ids(), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(LabelVector, MismatchedIdSetsAreAlignmentErrors) {
  LabelVector y({"a", "b"}, {1, 0});
  EXPECT_EQ(CodeOf([&] { y.AlignedTo({"a", "c"}); }), Errc::kAlignment);
  EXPECT_EQ(CodeOf([&] { y.AlignedTo({"a"}); }), Errc::kAlignment);
}

TEST(Population, WeightsNearOneAreRenormalized) {
  Population pop({{0.5, {1, 0}, {1, 0}}, {0.499999, {0, 1}, {0, 1}}});
  long double total = 0;
  for (const Atom& a : pop.atoms()) total += a.weight;
  EXPECT_EQ(total, 1.0L);
}

TEST(Population, RejectsSchemaAndNormalizationProblems) {
  EXPECT_EQ(CodeOf([] { Population({{1.0, {0.5, 0.5}, {0.2, 0.3, 0.5}}}); }),
            Errc::kSchema);
  EXPECT_EQ(CodeOf([] { Population({{1.0, {0.5, 0.5}, {1, 0}}, {0.0, {1, 0, 0}, {1, 0, 0}}}); }),
            Errc::kSchema);
  EXPECT_EQ(CodeOf([] { Population({{0.6, {1, 0}, {1, 0}}, {0.6, {1, 0}, {1, 0}}}); }),
            Errc::kNormalization);
  EXPECT_EQ(CodeOf([] { Population({{-0.5, {1, 0}, {1, 0}}, {1.5, {1, 0}, {1, 0}}}); }),
            Errc::kRange);
  EXPECT_EQ(CodeOf([] { Population({}); }), Errc::kSize);
}

TEST(Population, FromProfileUsesOneHotLabelsAndAlignment) {
  ProbabilityProfile p({"a", "b"}, 2, {0.25, 0.75, 1.0, 0.0});
  LabelVector y({"b", "a"}, {0, 1});
  const Population pop = Population::FromProfile(p, y);
  ASSERT_EQ(pop.size(), 2u);
  EXPECT_EQ(pop.atoms()[0].label_dist, (std::vector<double>{0, 1}));
  EXPECT_EQ(pop.atoms()[1].label_dist, (std::vector<double>{1, 0}));
  EXPECT_EQ(pop.atoms()[0].weight, 0.5);
}

TEST(RandomSource, SameSeedAndStreamReplay) {
  RandomSource a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.NextU64();
    EXPECT_EQ(x, b.NextU64());
    differs |= x != c.NextU64();
  }
  EXPECT_TRUE(differs);
}

TEST(RandomSource, DeriveIsPureInParentAndChild) {
  RandomSource parent(9);
  RandomSource d1 = parent.Derive(5);
  parent.NextU64();
  RandomSource d2 = parent.Derive(5);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(d1.NextU64(), d2.NextU64());
  EXPECT_NE(parent.Derive(5).NextU64(), parent.Derive(6).NextU64());
}

TEST(RandomSource, DrawsHaveExpectedMoments) {
  RandomSource rng(11);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.Normal();
    sn += z;
    sn2 += z * z;
    se += rng.Exponential();
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
  EXPECT_NEAR(se / n, 1.0, 0.02);
}

TEST(RandomSource, CategoricalAndUniformIndexFollowWeights) {
  RandomSource rng(12);
  const double w[] = {0.1, 0.0, 0.6, 0.3};
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.Categorical(w)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[0] / double(n), 0.1, 0.005);
  EXPECT_NEAR(counts[2] / double(n), 0.6, 0.008);
  std::vector<int> idx(7, 0);
  for (int i = 0; i < 70000; ++i) ++idx[rng.UniformIndex(7)];
  for (int c : idx) EXPECT_NEAR(c / 70000.0, 1.0 / 7, 0.006);
}

TEST(RandomSource, UniformSimplexIsOnSimplex) {
  RandomSource rng(13);
  double first = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto v = rng.UniformSimplex(4);
    double s = 0;
    for (double x : v) {
      ASSERT_GE(x, 0.0);
      s += x;
    }
    ASSERT_NEAR(s, 1.0, 1e-12);
    first += v[0];
  }
  EXPECT_NEAR(first / 10000, 0.25, 0.01);
}

TEST(RandomSource, ShuffleIsAPermutation) {
  RandomSource rng(14);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.Shuffle(v);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 50u);
  EXPECT_NE(v[0] + v[1] * 50, 0 + 1 * 50);
}

TEST(ExactSum, CompensatesCancellation) {
  ExactSum s;
  s += 1e16;
  for (int i = 0; i < 1000; ++i) s += 1.0;
  s += -1e16;
  EXPECT_EQ(s.Get(), 1000.0);
}

TEST(Errors, NamesAndMessages) {
  const Error e(Errc::kNormalization, "row 3");
  EXPECT_EQ(e.code(), Errc::kNormalization);
  EXPECT_STREQ(e.what(), "NormalizationError: row 3");
  EXPECT_EQ(ErrcName(Errc::kIo), "IoError");
}

}  // namespace
}  // namespace gdecal
