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

// Calibration curves and calibration errors of an ensemble.
//
// Three views are supported:
//   * class-wise: for one class k, accuracy p(Y=k | hhat_k = q) against q;
//   * class-aggregated: every (point, class) pair is one observation, so a
//     point is counted once per class whose confidence lands in a bin;
//   * top-class: the usual ECE view over argmax confidences.
//
// Exact variants group a Population by distinct confidence values. Binned
// variants use equal-width bins [i/B, (i+1)/B) with the last bin closed at 1
// and score each bin against its mean confidence.

#ifndef GDECAL_CALIBRATION_HPP_
#define GDECAL_CALIBRATION_HPP_

#include <cstddef>
#include <string_view>
#include <vector>

#include "gdecal/core.hpp"

namespace gdecal {

inline constexpr std::size_t kDefaultBins = 10;

enum class CurveKind { kClassAggregated, kClassWise, kTopClass };

std::string_view CurveKindName(CurveKind kind);

struct ConfidenceBin {
  double lower = 0.0;
  double upper = 0.0;
  double mass = 0.0;  // aggregated curves: up to K summed over bins
  double hits = 0.0;
  double mean_confidence = 0.0;

  double accuracy() const { return mass > 0.0 ? hits / mass : 0.0; }

  bool operator==(const ConfidenceBin&) const = default;
};

// Nonempty bins only, in increasing confidence order.
struct CalibrationCurve {
  CurveKind kind = CurveKind::kClassAggregated;
  int class_index = -1;  // set for class-wise curves
  std::vector<ConfidenceBin> bins;

  bool operator==(const CalibrationCurve&) const = default;
};

// Bin of confidence q among n_bins equal-width bins.
std::size_t BinIndex(double q, std::size_t n_bins);

CalibrationCurve ClassAggregatedCurve(const Population& pop,
                                      std::size_t n_bins = kDefaultBins);
CalibrationCurve ClassAggregatedCurve(const ProbabilityProfile& p,
                                      const LabelVector& y,
                                      std::size_t n_bins = kDefaultBins);

CalibrationCurve ClassWiseCurve(const Population& pop, ClassIndex k,
                                std::size_t n_bins = kDefaultBins);
CalibrationCurve ClassWiseCurve(const ProbabilityProfile& p,
                                const LabelVector& y, ClassIndex k,
                                std::size_t n_bins = kDefaultBins);

// Argmax ties go to the lowest class index.
CalibrationCurve TopClassCurve(const Population& pop,
                               std::size_t n_bins = kDefaultBins);
CalibrationCurve TopClassCurve(const ProbabilityProfile& p,
                               const LabelVector& y,
                               std::size_t n_bins = kDefaultBins);

// sum over bins of mass * |accuracy - mean_confidence|, optionally with each
// term scaled by (1 - mean_confidence).
double CurveCalibrationError(const CalibrationCurve& curve, bool refined);

// A distinct confidence value with its aggregated mass and hits.
struct LevelSet {
  double q = 0.0;
  double mass = 0.0;
  double hits = 0.0;
};

std::vector<LevelSet> AggregatedLevelSets(const Population& pop);
std::vector<LevelSet> ClassLevelSets(const Population& pop, ClassIndex k);

// sum_q |hits(q) - q mass(q)|, in [0, K].
double CaceExact(const Population& pop);
// sum_q |hits(q) - q mass(q)| (1 - q).
double CaceRefinedExact(const Population& pop);

double CaceBinned(const Population& pop, std::size_t n_bins = kDefaultBins);
double CaceBinned(const ProbabilityProfile& p, const LabelVector& y,
                  std::size_t n_bins = kDefaultBins);
double CaceRefinedBinned(const Population& pop,
                         std::size_t n_bins = kDefaultBins);
double CaceRefinedBinned(const ProbabilityProfile& p, const LabelVector& y,
                         std::size_t n_bins = kDefaultBins);

double EceBinned(const Population& pop, std::size_t n_bins = kDefaultBins);
double EceBinned(const ProbabilityProfile& p, const LabelVector& y,
                 std::size_t n_bins = kDefaultBins);

// max over classes k and confidence values q with positive mass of
// |p(Y=k | hhat_k = q) - q|. Zero exactly when the population is class-wise
// calibrated.
double MaxClassWiseDeviation(const Population& pop);

}  // namespace gdecal

#endif  // GDECAL_CALIBRATION_HPP_
