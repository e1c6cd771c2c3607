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

#include "gdecal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gdecal {

namespace {

// One (confidence, weight, label probability) observation.
struct Observation {
  double q;
  double weight;
  double label_prob;
};

void CheckBins(std::size_t n_bins) {
  if (n_bins == 0) throw Error(Errc::kInvalidArgument, "n_bins must be >= 1");
}

void CheckClass(const Population& pop, ClassIndex k) {
  if (k.value < 0 || k.value >= pop.n_classes()) {
    throw Error(Errc::kClassRange, "class " + std::to_string(k.value) +
                                       " with K=" +
                                       std::to_string(pop.n_classes()));
  }
}

int TopClass(const std::vector<double>& hhat) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(hhat.size()); ++k) {
    if (hhat[static_cast<std::size_t>(k)] > hhat[static_cast<std::size_t>(best)]) {
      best = k;
    }
  }
  return best;
}

template <typename Visit>
void ForEachAggregated(const Population& pop, Visit&& visit) {
  for (const Atom& a : pop.atoms()) {
    for (std::size_t k = 0; k < a.hhat.size(); ++k) {
      visit(Observation{a.hhat[k], a.weight, a.label_dist[k]});
    }
  }
}

template <typename Visit>
void ForEachClass(const Population& pop, ClassIndex k, Visit&& visit) {
  const auto c = static_cast<std::size_t>(k.value);
  for (const Atom& a : pop.atoms()) {
    visit(Observation{a.hhat[c], a.weight, a.label_dist[c]});
  }
}

template <typename Visit>
void ForEachTop(const Population& pop, Visit&& visit) {
  for (const Atom& a : pop.atoms()) {
    const auto top = static_cast<std::size_t>(TopClass(a.hhat));
    visit(Observation{a.hhat[top], a.weight, a.label_dist[top]});
  }
}

template <typename ForEach>
CalibrationCurve BuildCurve(CurveKind kind, int class_index,
                            std::size_t n_bins, ForEach&& for_each) {
  CheckBins(n_bins);
  std::vector<ExactSum> mass(n_bins), hits(n_bins), conf(n_bins);
  std::vector<bool> seen(n_bins, false);
  for_each([&](const Observation& o) {
    const std::size_t b = BinIndex(o.q, n_bins);
    seen[b] = true;
    mass[b] += o.weight;
    hits[b] += static_cast<long double>(o.weight) * o.label_prob;
    conf[b] += static_cast<long double>(o.weight) * o.q;
  });
  CalibrationCurve curve;
  curve.kind = kind;
  curve.class_index = class_index;
  const double width = 1.0 / static_cast<double>(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (!seen[b] || mass[b].Value() <= 0.0L) continue;
    ConfidenceBin bin;
    bin.lower = static_cast<double>(b) * width;
    bin.upper = b + 1 == n_bins ? 1.0 : static_cast<double>(b + 1) * width;
    bin.mass = mass[b].Get();
    bin.hits = hits[b].Get();
    bin.mean_confidence =
        static_cast<double>(conf[b].Value() / mass[b].Value());
    curve.bins.push_back(bin);
  }
  return curve;
}

template <typename ForEach>
std::vector<LevelSet> GroupLevelSets(ForEach&& for_each) {
  std::vector<Observation> obs;
  for_each([&](const Observation& o) { obs.push_back(o); });
  std::sort(obs.begin(), obs.end(),
            [](const Observation& a, const Observation& b) { return a.q < b.q; });
  std::vector<LevelSet> out;
  std::size_t i = 0;
  while (i < obs.size()) {
    const double q = obs[i].q;
    ExactSum mass, hits;
    for (; i < obs.size() && obs[i].q == q; ++i) {
      mass += obs[i].weight;
      hits += static_cast<long double>(obs[i].weight) * obs[i].label_prob;
    }
    if (mass.Value() > 0.0L) out.push_back({q, mass.Get(), hits.Get()});
  }
  return out;
}

double LevelSetError(const std::vector<LevelSet>& sets, bool refined) {
  ExactSum total;
  for (const LevelSet& s : sets) {
    // |hits/mass - q| * mass, evaluated without the division.
    long double dev = std::abs(static_cast<long double>(s.hits) -
                               static_cast<long double>(s.q) * s.mass);
    if (refined) dev *= 1.0L - static_cast<long double>(s.q);
    total += dev;
  }
  return total.Get();
}

}  // namespace

std::string_view CurveKindName(CurveKind kind) {
  switch (kind) {
    case CurveKind::kClassAggregated: return "class_aggregated";
    case CurveKind::kClassWise: return "class_wise";
    case CurveKind::kTopClass: return "top_class";
  }
  return "unknown";
}

std::size_t BinIndex(double q, std::size_t n_bins) {
  if (!(q > 0.0)) return 0;
  const double scaled = std::floor(q * static_cast<double>(n_bins));
  if (scaled >= static_cast<double>(n_bins)) return n_bins - 1;
  return static_cast<std::size_t>(scaled);
}

CalibrationCurve ClassAggregatedCurve(const Population& pop,
                                      std::size_t n_bins) {
  return BuildCurve(CurveKind::kClassAggregated, -1, n_bins,
                    [&](auto&& visit) { ForEachAggregated(pop, visit); });
}

CalibrationCurve ClassAggregatedCurve(const ProbabilityProfile& p,
                                      const LabelVector& y,
                                      std::size_t n_bins) {
  return ClassAggregatedCurve(Population::FromProfile(p, y), n_bins);
}

CalibrationCurve ClassWiseCurve(const Population& pop, ClassIndex k,
                                std::size_t n_bins) {
  CheckClass(pop, k);
  return BuildCurve(CurveKind::kClassWise, k.value, n_bins,
                    [&](auto&& visit) { ForEachClass(pop, k, visit); });
}

CalibrationCurve ClassWiseCurve(const ProbabilityProfile& p,
                                const LabelVector& y, ClassIndex k,
                                std::size_t n_bins) {
  return ClassWiseCurve(Population::FromProfile(p, y), k, n_bins);
}

CalibrationCurve TopClassCurve(const Population& pop, std::size_t n_bins) {
  return BuildCurve(CurveKind::kTopClass, -1, n_bins,
                    [&](auto&& visit) { ForEachTop(pop, visit); });
}

CalibrationCurve TopClassCurve(const ProbabilityProfile& p,
                               const LabelVector& y, std::size_t n_bins) {
  return TopClassCurve(Population::FromProfile(p, y), n_bins);
}

double CurveCalibrationError(const CalibrationCurve& curve, bool refined) {
  ExactSum total;
  for (const ConfidenceBin& b : curve.bins) {
    long double dev = std::abs(static_cast<long double>(b.hits) -
                               static_cast<long double>(b.mean_confidence) *
                                   b.mass);
    if (refined) dev *= 1.0L - static_cast<long double>(b.mean_confidence);
    total += dev;
  }
  return total.Get();
}

std::vector<LevelSet> AggregatedLevelSets(const Population& pop) {
  return GroupLevelSets([&](auto&& visit) { ForEachAggregated(pop, visit); });
}

std::vector<LevelSet> ClassLevelSets(const Population& pop, ClassIndex k) {
  CheckClass(pop, k);
  return GroupLevelSets([&](auto&& visit) { ForEachClass(pop, k, visit); });
}

double CaceExact(const Population& pop) {
  return LevelSetError(AggregatedLevelSets(pop), false);
}

double CaceRefinedExact(const Population& pop) {
  return LevelSetError(AggregatedLevelSets(pop), true);
}

double CaceBinned(const Population& pop, std::size_t n_bins) {
  return CurveCalibrationError(ClassAggregatedCurve(pop, n_bins), false);
}

double CaceBinned(const ProbabilityProfile& p, const LabelVector& y,
                  std::size_t n_bins) {
  return CaceBinned(Population::FromProfile(p, y), n_bins);
}

double CaceRefinedBinned(const Population& pop, std::size_t n_bins) {
  return CurveCalibrationError(ClassAggregatedCurve(pop, n_bins), true);
}

double CaceRefinedBinned(const ProbabilityProfile& p, const LabelVector& y,
                         std::size_t n_bins) {
  return CaceRefinedBinned(Population::FromProfile(p, y), n_bins);
}

double EceBinned(const Population& pop, std::size_t n_bins) {
  return CurveCalibrationError(TopClassCurve(pop, n_bins), false);
}

double EceBinned(const ProbabilityProfile& p, const LabelVector& y,
                 std::size_t n_bins) {
  return EceBinned(Population::FromProfile(p, y), n_bins);
}

double MaxClassWiseDeviation(const Population& pop) {
  double worst = 0.0;
  for (int k = 0; k < pop.n_classes(); ++k) {
    for (const LevelSet& s : ClassLevelSets(pop, ClassIndex{k})) {
      worst = std::max(worst, std::abs(s.hits / s.mass - s.q));
    }
  }
  return worst;
}

}  // namespace gdecal
