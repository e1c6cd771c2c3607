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

#include "gdecal/simulate.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gdecal/theory.hpp"

namespace gdecal {
namespace {

SyntheticTask SmallTask(std::uint64_t seed = 1) {
  return MakeGaussianTask(3, 4, 1, 2.0, 1.0, 200, 300, seed);
}

LearnerSpec SmallSpec(ModelKind model = ModelKind::kLinearSoftmax) {
  LearnerSpec s;
  s.model = model;
  s.hidden = 8;
  s.epochs = 5;
  s.batch_size = 16;
  return s;
}

TEST(Modes, NamesRoundTrip) {
  for (auto m : {StochasticityMode::kAllDiff, StochasticityMode::kDiffData,
                 StochasticityMode::kDiffInit, StochasticityMode::kDiffOrder,
                 StochasticityMode::kSameData}) {
    std::string lower(ModeName(m));
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    ASSERT_EQ(ParseMode(lower), m);
  }
  EXPECT_FALSE(ParseMode("bogus").has_value());
}

TEST(MaterializeTask, DeterministicAndSized) {
  const SyntheticTask t = SmallTask();
  const TaskData a = MaterializeTask(t);
  const TaskData b = MaterializeTask(t);
  EXPECT_EQ(a.train_pool.size(), 200u);
  EXPECT_EQ(a.test.size(), 300u);
  EXPECT_EQ(a.train_pool.x, b.train_pool.x);
  EXPECT_EQ(a.test.y, b.test.y);
}

TEST(BayesPosterior, SumsToOneAndPopulationIsCalibrated) {
  const SyntheticTask t = SmallTask();
  const TaskData d = MaterializeTask(t);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto post = BayesPosterior(t, d.test.row(i));
    EXPECT_NEAR(std::accumulate(post.begin(), post.end(), 0.0), 1.0, 1e-12);
  }
  const Population ref = BayesReferencePopulation(t, d);
  EXPECT_LE(CheckGde(ref).gap, 1e-12);
  RandomSource rng(2);
  const double bayes = BayesErrorMonteCarlo(t, 20000, rng);
  EXPECT_GE(bayes, 0.0);
  EXPECT_LT(bayes, 2.0 / 3.0);
}

TEST(TrainPair, IdenticalSeedsDisagreeNowhere) {
  const TaskData d = MaterializeTask(SmallTask());
  StochasticityConfig cfg;
  cfg.runs[0] = {11, 12, 13, DataPart::kFull};
  cfg.runs[1] = cfg.runs[0];
  for (ModelKind model : {ModelKind::kLinearSoftmax, ModelKind::kOneHidden}) {
    const PairResult r = TrainPair(d, SmallSpec(model), cfg);
    EXPECT_EQ(Disagreement(r.predictions, 0, 1), 0.0);
    EXPECT_EQ(r.runs[0].test_predictions, r.runs[1].test_predictions);
  }
}

TEST(TrainPair, DisagreementWithinErrorSum) {
  const TaskData d = MaterializeTask(SmallTask());
  RandomSource rng(3);
  const StochasticityConfig cfg = MakePairConfig(StochasticityMode::kDiffInit, rng);
  const PairResult r = TrainPair(d, SmallSpec(ModelKind::kOneHidden), cfg);
  EXPECT_LE(Disagreement(r.predictions, 0, 1),
            TestError(r.predictions, r.labels, 0) + TestError(r.predictions, r.labels, 1) +
                1e-15);
}

TEST(ModeSemantics, TrainingSetsAndOrders) {
  const TaskData d = MaterializeTask(SmallTask());
  RandomSource rng(4);
  const LearnerSpec spec = SmallSpec();
  for (int trial = 0; trial < 3; ++trial) {
    {
      const PairResult r = TrainPair(d, spec, MakePairConfig(StochasticityMode::kDiffData, rng));
      std::vector<std::size_t> both;
      std::set_intersection(r.runs[0].training_set.begin(), r.runs[0].training_set.end(),
                            r.runs[1].training_set.begin(), r.runs[1].training_set.end(),
                            std::back_inserter(both));
      EXPECT_TRUE(both.empty());
      EXPECT_EQ(r.runs[0].training_set.size() + r.runs[1].training_set.size(), 200u);
    }
    {
      const PairResult r = TrainPair(d, spec, MakePairConfig(StochasticityMode::kDiffOrder, rng));
      EXPECT_EQ(r.runs[0].training_set, r.runs[1].training_set);
      EXPECT_NE(r.runs[0].first_epoch_order, r.runs[1].first_epoch_order);
      auto a = r.runs[0].first_epoch_order, b = r.runs[1].first_epoch_order;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      EXPECT_EQ(a, b);
    }
    {
      const PairResult r = TrainPair(d, spec, MakePairConfig(StochasticityMode::kDiffInit, rng));
      EXPECT_EQ(r.runs[0].training_set, r.runs[1].training_set);
      EXPECT_EQ(r.runs[0].first_epoch_order, r.runs[1].first_epoch_order);
    }
    {
      const StochasticityConfig c = MakePairConfig(StochasticityMode::kAllDiff, rng);
      EXPECT_NE(c.runs[0].init_seed, c.runs[1].init_seed);
      EXPECT_NE(c.runs[0].order_seed, c.runs[1].order_seed);
      EXPECT_NE(c.runs[0].part, c.runs[1].part);
    }
  }
}

TEST(ModeSemantics, EnsembleMemberSeeds) {
  const RunSeeds shared{1, 2, 3, DataPart::kFull};
  const RunSeeds d0 = MakeMemberSeeds(StochasticityMode::kDiffOrder, shared, 0);
  const RunSeeds d1 = MakeMemberSeeds(StochasticityMode::kDiffOrder, shared, 1);
  EXPECT_EQ(d0.init_seed, d1.init_seed);
  EXPECT_NE(d0.order_seed, d1.order_seed);
  EXPECT_EQ(TrainingIndices(100, d0), TrainingIndices(100, d1));
  const RunSeeds i0 = MakeMemberSeeds(StochasticityMode::kDiffInit, shared, 0);
  const RunSeeds i1 = MakeMemberSeeds(StochasticityMode::kDiffInit, shared, 1);
  EXPECT_NE(i0.init_seed, i1.init_seed);
  EXPECT_EQ(i0.order_seed, i1.order_seed);
  const RunSeeds a0 = MakeMemberSeeds(StochasticityMode::kAllDiff, shared, 0);
  EXPECT_EQ(TrainingIndices(100, a0).size(), 50u);
}

TEST(TrainLearner, PureInInputs) {
  const TaskData d = MaterializeTask(SmallTask());
  const RunSeeds s{5, 6, 7, DataPart::kFirstHalf};
  const TrainedRun a = TrainLearner(d, SmallSpec(ModelKind::kOneHidden), s);
  const TrainedRun b = TrainLearner(d, SmallSpec(ModelKind::kOneHidden), s);
  EXPECT_EQ(a.test_predictions, b.test_predictions);
  EXPECT_EQ(a.train_accuracy, b.train_accuracy);
  EXPECT_EQ(a.converged, a.train_accuracy >= kInterpolationThreshold);
}

TEST(Sweep, RepeatedSingleConfigIsFlagged) {
  std::vector<SweepConfig> configs(1);
  configs[0].id = "only";
  configs[0].group = "g";
  configs[0].task = SmallTask();
  configs[0].spec = SmallSpec();
  const std::vector<StochasticityMode> modes = {StochasticityMode::kAllDiff};
  SweepOptions opt;
  opt.n_pairs = 2;
  opt.bootstrap_resamples = 20;
  const SweepResult r = Sweep(configs, modes, opt, RandomSource(1));
  ASSERT_EQ(r.scatter.size(), 1u);
  EXPECT_FALSE(r.scatter[0].single_pair.has_value());
  EXPECT_FALSE(r.scatter[0].flag.empty());
}

TEST(Sweep, DeterministicAndRowsConsistent) {
  auto configs = DefaultSweepConfigs(3, ModelKind::kLinearSoftmax, 5);
  for (auto& c : configs) {
    c.task.n_train = 150;
    c.task.n_test = 200;
    c.spec.epochs = 2;
  }
  const std::vector<StochasticityMode> modes = {StochasticityMode::kAllDiff,
                                                StochasticityMode::kDiffOrder};
  SweepOptions opt;
  opt.n_pairs = 2;
  opt.bootstrap_resamples = 20;
  const SweepResult a = Sweep(configs, modes, opt, RandomSource(2));
  const SweepResult b = Sweep(configs, modes, opt, RandomSource(2));
  ASSERT_EQ(a.rows.size(), 6u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const SweepRow& r = a.rows[i];
    EXPECT_EQ(r.test_err, b.rows[i].test_err);
    EXPECT_EQ(r.disagreement, b.rows[i].disagreement);
    EXPECT_EQ(r.bootstrap_std, b.rows[i].bootstrap_std);
    ASSERT_EQ(r.pair_test_errors.size(), 2u);
    EXPECT_EQ(r.test_err, r.pair_test_errors[0]);
    EXPECT_NEAR(r.mean_disagreement, (r.pair_disagreements[0] + r.pair_disagreements[1]) / 2,
                1e-15);
  }
}

TEST(NormalizedDeviation, Values) {
  EXPECT_EQ(NormalizedDeviation(0, 0), 0.0);
  EXPECT_NEAR(NormalizedDeviation(0.3, 0.1), 0.2 / 0.2, 1e-15);
  EXPECT_NEAR(NormalizedDeviation(0.336, 0.348), 0.012 / 0.342, 1e-12);
}

TEST(EnsembleSweep, IdentityAndDeterminism) {
  SweepConfig cfg;
  cfg.id = "e";
  cfg.task = SmallTask(9);
  cfg.spec = SmallSpec();
  EnsembleOptions opt;
  opt.members = 6;
  opt.bootstrap_resamples = 20;
  const EnsembleSweepResult a =
      EnsembleSweep(cfg, StochasticityMode::kAllDiff, opt, RandomSource(3));
  const EnsembleSweepResult b =
      EnsembleSweep(cfg, StochasticityMode::kAllDiff, opt, RandomSource(3));
  EXPECT_EQ(a.cace_by_size, b.cace_by_size);
  EXPECT_EQ(a.profile.values(), b.profile.values());
  EXPECT_EQ(a.ece, b.ece);

  const double m = static_cast<double>(opt.members);
  const double pair_mean = PairwiseDisagreements(a.predictions).mean_over_pairs;
  EXPECT_NEAR(a.expected_disagreement, (m - 1) / m * pair_mean, 1e-12);
  EXPECT_NEAR(a.expected_test_error, a.report.test_err_mean, 1e-12);
  ASSERT_EQ(a.cace_by_size.size(), 3u);
  EXPECT_EQ(a.cace_by_size[0].members, 2u);
  EXPECT_EQ(a.cace_by_size[1].members, 5u);
  EXPECT_EQ(a.cace_by_size[2].members, 6u);
  EXPECT_LE(std::abs(a.expected_test_error - a.expected_disagreement), a.cace_exact + 1e-12);
}

TEST(CalibratedSampler, DisagreementMatchesErrorWithinThreeStandardErrors) {
  RandomSource gen(10);
  const Population pop = GenClasswiseCalibrated(4, 20, gen);
  RandomSource rng(11);
  const SamplerGap g = CalibratedSamplerGap(pop, 10000, rng);
  EXPECT_GT(g.std_error, 0.0);
  EXPECT_LE(std::abs(g.difference), 3 * g.std_error);
  EXPECT_NEAR(g.mean_test_error, ExpectedTestError(pop), 5 * g.std_error + 0.01);
}

TEST(CalibratedSampler, SampledPairOnDiagonal) {
  RandomSource gen(12);
  const Population pop = GenClasswiseCalibrated(3, 10, gen);
  RandomSource rng(13);
  const SampledPair s = SampleHypothesisPair(pop, 50000, rng);
  const double te = (TestError(s.predictions, s.labels, 0) + TestError(s.predictions, s.labels, 1)) / 2;
  const double dis = Disagreement(s.predictions, 0, 1);
  // Each indicator has variance at most 1/4 over 50000 draws.
  EXPECT_NEAR(te, dis, 4 * std::sqrt(0.5 / 50000));
}

}  // namespace
}  // namespace gdecal
