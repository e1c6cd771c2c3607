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

// Test error, disagreement and their ensemble expectations, plus bootstrap
// deviations and scatter statistics.

#ifndef GDECAL_METRICS_HPP_
#define GDECAL_METRICS_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gdecal/core.hpp"

namespace gdecal {

inline constexpr std::size_t kDefaultBootstrapResamples = 1000;

// Fraction of points where `model` disagrees with the label. Labels are
// aligned to the matrix by point id.
double TestError(const PredictionMatrix& m, const LabelVector& y,
                 std::size_t model);

// Fraction of points where models i and j disagree.
double Disagreement(const PredictionMatrix& m, std::size_t i, std::size_t j);

struct PairwiseDisagreement {
  std::size_t n_models = 0;
  std::vector<double> matrix;  // row-major M x M, symmetric, zero diagonal
  double mean_over_pairs = 0.0;

  double at(std::size_t i, std::size_t j) const {
    return matrix[i * n_models + j];
  }
};

// All pairs at once; the mean is over the M(M-1)/2 unordered pairs.
PairwiseDisagreement PairwiseDisagreements(const PredictionMatrix& m);

// E[1 - hhat_Y(X)].
double ExpectedTestError(const ProbabilityProfile& p, const LabelVector& y);
double ExpectedTestError(const Population& pop);

// E[sum_k hhat_k(X) (1 - hhat_k(X))].
double ExpectedDisagreement(const ProbabilityProfile& p);
double ExpectedDisagreement(const Population& pop);

double GdeGap(double expected_test_error, double expected_disagreement);

// Statistic evaluated on a resample, given as indices into the point set.
using ResampleMetric = std::function<double(std::span<const std::size_t>)>;

// Standard deviation (n-1 normalization) of `metric` over `n_resamples`
// with-replacement resamples of `n_points` points. Resample r draws its
// indices from rng.Derive(r), so results do not depend on execution order.
double BootstrapStd(const ResampleMetric& metric, std::size_t n_points,
                    std::size_t n_resamples, const RandomSource& rng);

// Bootstrap of a mean of per-point values, the common case.
double BootstrapStdOfMean(std::span<const double> per_point,
                          std::size_t n_resamples, const RandomSource& rng);

struct ScatterStats {
  double r_squared = 0.0;    // squared Pearson correlation
  double kendall_tau = 0.0;  // tau-a, ties counted as neither
};

// Degenerate error when either series is constant.
ScatterStats ComputeScatterStats(std::span<const double> xs,
                                 std::span<const double> ys);

double PearsonCorrelation(std::span<const double> xs,
                          std::span<const double> ys);
double KendallTauA(std::span<const double> xs, std::span<const double> ys);

// Summary of a set of models evaluated on labeled points.
struct GdeReport {
  double test_err_mean = 0.0;
  double test_err_std = 0.0;
  double dis_mean = 0.0;
  double dis_std = 0.0;
  double gap = 0.0;
  double bootstrap_std_test = 0.0;
  double bootstrap_std_dis = 0.0;
  std::optional<double> r_squared;
  std::optional<double> kendall_tau;
};

// Requires M >= 2. Test-error stats are over models, disagreement stats over
// unordered pairs. Bootstrap deviations resample points for the mean test
// error and the mean pair disagreement.
GdeReport SummarizeGde(const PredictionMatrix& m, const LabelVector& y,
                       std::size_t n_resamples, const RandomSource& rng);

// Per point: fraction of models that are wrong.
std::vector<double> PerPointErrorRate(const PredictionMatrix& m,
                                      const LabelVector& y);
// Per point: fraction of unordered model pairs that disagree.
std::vector<double> PerPointPairDisagreement(const PredictionMatrix& m);

}  // namespace gdecal

#endif  // GDECAL_METRICS_HPP_
