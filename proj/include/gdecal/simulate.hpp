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

// Desk-scale stochastic learners. Small SGD-trained classifiers on Gaussian
// mixture tasks, run in pairs or ensembles whose members differ in
// initialization, data order and/or training split.

#ifndef GDECAL_SIMULATE_HPP_
#define GDECAL_SIMULATE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gdecal/calibration.hpp"
#include "gdecal/core.hpp"
#include "gdecal/metrics.hpp"

namespace gdecal {

enum class StochasticityMode { kAllDiff, kDiffData, kDiffInit, kDiffOrder, kSameData };

std::string_view ModeName(StochasticityMode mode);
// Accepts the lower-case names used on the command line ("alldiff", ...).
std::optional<StochasticityMode> ParseMode(std::string_view name);

// Gaussian class-conditional mixture: each class owns `components` isotropic
// Gaussian blobs with standard deviation noise_scale.
struct SyntheticTask {
  int n_classes = 4;
  int dim = 8;
  int components = 2;
  std::vector<std::vector<double>> means;  // n_classes * components entries
  double noise_scale = 1.0;
  std::size_t n_train = 1000;
  std::size_t n_test = 2000;
  std::uint64_t data_seed = 0;
};

// Means drawn as N(0, separation^2 I).
SyntheticTask MakeGaussianTask(int n_classes, int dim, int components,
                               double separation, double noise_scale,
                               std::size_t n_train, std::size_t n_test,
                               std::uint64_t seed);

struct Dataset {
  int dim = 0;
  std::vector<double> x;  // row-major
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
};

struct TaskData {
  Dataset train_pool;
  Dataset test;
};

// Deterministic in task.data_seed.
TaskData MaterializeTask(const SyntheticTask& task);

// Exact class posterior p(Y | x) of the generating mixture.
std::vector<double> BayesPosterior(const SyntheticTask& task,
                                   std::span<const double> x);

// Bayes error of the mixture estimated on `n_samples` fresh draws.
double BayesErrorMonteCarlo(const SyntheticTask& task, std::size_t n_samples,
                            RandomSource& rng);

// Test points as atoms with hhat = label_dist = Bayes posterior. The result
// is class-wise calibrated by construction.
Population BayesReferencePopulation(const SyntheticTask& task,
                                    const TaskData& data);

enum class ModelKind { kLinearSoftmax, kOneHidden };

struct LearnerSpec {
  ModelKind model = ModelKind::kLinearSoftmax;
  int hidden = 32;
  double lr = 0.1;
  int epochs = 20;
  int batch_size = 32;
  double weight_decay = 0.0;
};

// Which part of the training pool a run sees.
enum class DataPart { kFull, kFirstHalf, kSecondHalf, kRandomHalf };

struct RunSeeds {
  std::uint64_t init_seed = 0;
  std::uint64_t order_seed = 0;
  std::uint64_t data_seed = 0;
  DataPart part = DataPart::kFull;
};

struct StochasticityConfig {
  StochasticityMode mode = StochasticityMode::kAllDiff;
  std::array<RunSeeds, 2> runs;
};

// Seeds for a pair of runs with the sources of randomness that `mode` varies
// drawn independently and the rest shared. Split modes train on the two
// disjoint halves of one random split.
StochasticityConfig MakePairConfig(StochasticityMode mode, RandomSource& rng);

// Seeds for member `index` of an ensemble. Shared sources come from
// `shared`; varied sources are derived per member. Split modes give each
// member an independent random half.
RunSeeds MakeMemberSeeds(StochasticityMode mode, const RunSeeds& shared,
                         std::size_t index);

// Pool indices a run trains on, before shuffling.
std::vector<std::size_t> TrainingIndices(std::size_t pool_size,
                                         const RunSeeds& seeds);

inline constexpr double kInterpolationThreshold = 0.99;

struct TrainedRun {
  std::vector<int> test_predictions;
  std::vector<std::size_t> training_set;  // sorted pool indices
  std::vector<std::size_t> first_epoch_order;
  double train_accuracy = 0.0;
  bool converged = false;  // train_accuracy >= kInterpolationThreshold
};

// Minibatch SGD on softmax cross-entropy. Pure in (data, spec, seeds).
TrainedRun TrainLearner(const TaskData& data, const LearnerSpec& spec,
                        const RunSeeds& seeds);

struct PairResult {
  PredictionMatrix predictions;  // M = 2, test points
  LabelVector labels;
  std::array<TrainedRun, 2> runs;
  std::vector<std::string> warnings;  // convergence warnings, not fatal
};

PairResult TrainPair(const TaskData& data, const LearnerSpec& spec,
                     const StochasticityConfig& cfg);

// One point of a scatter sweep.
struct SweepConfig {
  std::string id;
  std::string group;
  SyntheticTask task;
  LearnerSpec spec;
};

// Hyperparameter grid of `n_configs` learners (width, learning rate, epochs,
// batch size, training-set size) on a shared family of tasks.
std::vector<SweepConfig> DefaultSweepConfigs(std::size_t n_configs,
                                             ModelKind model,
                                             std::uint64_t seed);

struct SweepRow {
  StochasticityMode mode = StochasticityMode::kAllDiff;
  std::string config_id;
  std::string group;
  std::vector<double> pair_test_errors;     // first run of each pair
  std::vector<double> pair_disagreements;
  double test_err = 0.0;        // first pair
  double disagreement = 0.0;    // first pair
  double mean_test_err = 0.0;   // over pairs
  double mean_disagreement = 0.0;
  double bootstrap_std = 0.0;   // of the first pair's disagreement
  std::size_t warnings = 0;
};

struct ModeScatter {
  StochasticityMode mode = StochasticityMode::kAllDiff;
  std::size_t n = 0;
  std::optional<ScatterStats> single_pair;
  std::optional<ScatterStats> averaged;
  std::string flag;  // set when scatter statistics are undefined
  double deviation_single = 0.0;  // mean |TE-Dis| / (0.5 (TE+Dis)), 1 pair
  double deviation_averaged = 0.0;  // same, averaged over all pairs
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<ModeScatter> scatter;
};

struct SweepOptions {
  std::size_t n_pairs = 1;
  std::size_t bootstrap_resamples = 200;
  unsigned threads = 0;  // 0: hardware concurrency
};

SweepResult Sweep(std::span<const SweepConfig> configs,
                  std::span<const StochasticityMode> modes,
                  const SweepOptions& options, const RandomSource& rng);

// |TE - Dis| / (0.5 (TE + Dis)); zero when both are zero.
double NormalizedDeviation(double test_err, double disagreement);

struct EnsembleSize {
  std::size_t members = 0;
  double cace = 0.0;  // binned

  bool operator==(const EnsembleSize&) const = default;
};

struct EnsembleSweepResult {
  PredictionMatrix predictions;
  LabelVector labels;
  ProbabilityProfile profile;
  GdeReport report;
  std::vector<EnsembleSize> cace_by_size;  // 2, 5 and all members
  double ece = 0.0;
  double cace_exact = 0.0;  // on the empirical population of all members
  double expected_test_error = 0.0;
  double expected_disagreement = 0.0;
  CalibrationCurve curve;
  std::size_t warnings = 0;
};

struct EnsembleOptions {
  std::size_t members = 20;
  std::size_t n_bins = kDefaultBins;
  std::size_t bootstrap_resamples = 200;
  unsigned threads = 0;
};

EnsembleSweepResult EnsembleSweep(const SweepConfig& config,
                                  StochasticityMode mode,
                                  const EnsembleOptions& options,
                                  const RandomSource& rng);

struct SampledPair {
  PredictionMatrix predictions;  // M = 2
  LabelVector labels;
};

// Draws `n_points` atoms by weight, a label from each atom's label_dist and
// two independent one-hot predictions from its hhat.
SampledPair SampleHypothesisPair(const Population& pop, std::size_t n_points,
                                 RandomSource& rng);

struct SamplerGap {
  double mean_disagreement = 0.0;
  double mean_test_error = 0.0;
  double difference = 0.0;  // disagreement - test error
  double std_error = 0.0;
  std::size_t draws_per_atom = 0;
};

// For every atom, `draws_per_atom` independent (h, h', Y) triples; the
// per-atom means are combined with the atom weights.
SamplerGap CalibratedSamplerGap(const Population& pop,
                                std::size_t draws_per_atom, RandomSource& rng);

}  // namespace gdecal

#endif  // GDECAL_SIMULATE_HPP_
