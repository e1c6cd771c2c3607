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

#include "gdecal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gdecal {

namespace {

void CheckModel(const PredictionMatrix& m, std::size_t model) {
  if (model >= m.n_models()) {
    throw Error(Errc::kIndex, "model index " + std::to_string(model) +
                                  " with M=" + std::to_string(m.n_models()));
  }
}

double SampleStd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  ExactSum sum;
  for (double v : values) sum += v;
  const long double mean = sum.Value() / static_cast<long double>(values.size());
  ExactSum sq;
  for (double v : values) sq += (v - mean) * (v - mean);
  return std::sqrt(static_cast<double>(
      sq.Value() / static_cast<long double>(values.size() - 1)));
}

int Sign(double v) { return (v > 0.0) - (v < 0.0); }

double Mean(std::span<const double> values) {
  ExactSum sum;
  for (double v : values) sum += v;
  return static_cast<double>(sum.Value() /
                             static_cast<long double>(values.size()));
}

}  // namespace

double TestError(const PredictionMatrix& m, const LabelVector& y,
                 std::size_t model) {
  CheckModel(m, model);
  const LabelVector aligned = y.AlignedTo(m.point_ids());
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < m.n_points(); ++i) {
    if (m.at(i, model) != aligned.at(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(m.n_points());
}

double Disagreement(const PredictionMatrix& m, std::size_t i, std::size_t j) {
  CheckModel(m, i);
  CheckModel(m, j);
  if (i == j) throw Error(Errc::kIndex, "disagreement needs two models");
  std::size_t differ = 0;
  for (std::size_t x = 0; x < m.n_points(); ++x) {
    if (m.at(x, i) != m.at(x, j)) ++differ;
  }
  return static_cast<double>(differ) / static_cast<double>(m.n_points());
}

PairwiseDisagreement PairwiseDisagreements(const PredictionMatrix& m) {
  const std::size_t n_models = m.n_models();
  if (n_models < 2) {
    throw Error(Errc::kSize, "pairwise disagreement needs M >= 2");
  }
  PairwiseDisagreement out;
  out.n_models = n_models;
  out.matrix.assign(n_models * n_models, 0.0);
  std::vector<std::size_t> counts(n_models * n_models, 0);
  for (std::size_t x = 0; x < m.n_points(); ++x) {
    const auto row = m.row(x);
    for (std::size_t i = 0; i < n_models; ++i) {
      for (std::size_t j = i + 1; j < n_models; ++j) {
        if (row[i] != row[j]) ++counts[i * n_models + j];
      }
    }
  }
  const double n = static_cast<double>(m.n_points());
  ExactSum total;
  for (std::size_t i = 0; i < n_models; ++i) {
    for (std::size_t j = i + 1; j < n_models; ++j) {
      const double d = static_cast<double>(counts[i * n_models + j]) / n;
      out.matrix[i * n_models + j] = d;
      out.matrix[j * n_models + i] = d;
      total += d;
    }
  }
  const double n_pairs = static_cast<double>(n_models * (n_models - 1) / 2);
  out.mean_over_pairs = static_cast<double>(total.Value() / n_pairs);
  return out;
}

double ExpectedTestError(const ProbabilityProfile& p, const LabelVector& y) {
  const LabelVector aligned = y.AlignedTo(p.point_ids());
  if (aligned.n_classes() > p.n_classes()) {
    throw Error(Errc::kClassRange, "labels use more classes than the profile");
  }
  ExactSum sum;
  for (std::size_t i = 0; i < p.n_points(); ++i) {
    sum += 1.0L - static_cast<long double>(p.at(i, aligned.at(i)));
  }
  return static_cast<double>(sum.Value() /
                             static_cast<long double>(p.n_points()));
}

double ExpectedTestError(const Population& pop) {
  ExactSum sum;
  for (const Atom& a : pop.atoms()) {
    for (std::size_t k = 0; k < a.hhat.size(); ++k) {
      sum += static_cast<long double>(a.weight) * a.label_dist[k] *
             (1.0L - static_cast<long double>(a.hhat[k]));
    }
  }
  return sum.Get();
}

double ExpectedDisagreement(const ProbabilityProfile& p) {
  ExactSum sum;
  for (std::size_t i = 0; i < p.n_points(); ++i) {
    for (double q : p.row(i)) {
      sum += static_cast<long double>(q) * (1.0L - static_cast<long double>(q));
    }
  }
  return static_cast<double>(sum.Value() /
                             static_cast<long double>(p.n_points()));
}

double ExpectedDisagreement(const Population& pop) {
  ExactSum sum;
  for (const Atom& a : pop.atoms()) {
    for (double q : a.hhat) {
      sum += static_cast<long double>(a.weight) * q *
             (1.0L - static_cast<long double>(q));
    }
  }
  return sum.Get();
}

double GdeGap(double expected_test_error, double expected_disagreement) {
  return std::abs(expected_test_error - expected_disagreement);
}

double BootstrapStd(const ResampleMetric& metric, std::size_t n_points,
                    std::size_t n_resamples, const RandomSource& rng) {
  if (n_resamples < 2) {
    throw Error(Errc::kInvalidArgument, "bootstrap needs >= 2 resamples");
  }
  if (n_points == 0) throw Error(Errc::kSize, "bootstrap over no points");
  std::vector<double> stats(n_resamples);
  std::vector<std::size_t> indices(n_points);
  for (std::size_t r = 0; r < n_resamples; ++r) {
    RandomSource stream = rng.Derive(r);
    for (auto& idx : indices) idx = stream.UniformIndex(n_points);
    stats[r] = metric(indices);
  }
  return SampleStd(stats);
}

double BootstrapStdOfMean(std::span<const double> per_point,
                          std::size_t n_resamples, const RandomSource& rng) {
  return BootstrapStd(
      [per_point](std::span<const std::size_t> idx) {
        ExactSum sum;
        for (std::size_t i : idx) sum += per_point[i];
        return static_cast<double>(sum.Value() /
                                   static_cast<long double>(idx.size()));
      },
      per_point.size(), n_resamples, rng);
}

double PearsonCorrelation(std::span<const double> xs,
                          std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(Errc::kSize, "correlation needs two equal series of length >= 2");
  }
  const long double mx = Mean(xs);
  const long double my = Mean(ys);
  ExactSum sxy, sxx, syy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const long double dx = xs[i] - mx;
    const long double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx.Value() == 0.0L || syy.Value() == 0.0L) {
    throw Error(Errc::kDegenerate, "constant series has no correlation");
  }
  return static_cast<double>(sxy.Value() /
                             std::sqrt(sxx.Value() * syy.Value()));
}

double KendallTauA(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(Errc::kSize, "tau needs two equal series of length >= 2");
  }
  long long concordant = 0;
  long long discordant = 0;
  const std::size_t n = xs.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int s = Sign(xs[i] - xs[j]) * Sign(ys[i] - ys[j]);
      if (s > 0) {
        ++concordant;
      } else if (s < 0) {
        ++discordant;
      }
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(concordant - discordant) / pairs;
}

ScatterStats ComputeScatterStats(std::span<const double> xs,
                                 std::span<const double> ys) {
  const double r = PearsonCorrelation(xs, ys);
  return {r * r, KendallTauA(xs, ys)};
}

std::vector<double> PerPointErrorRate(const PredictionMatrix& m,
                                      const LabelVector& y) {
  const LabelVector aligned = y.AlignedTo(m.point_ids());
  std::vector<double> out(m.n_points());
  const double inv_m = 1.0 / static_cast<double>(m.n_models());
  for (std::size_t i = 0; i < m.n_points(); ++i) {
    std::size_t wrong = 0;
    for (int c : m.row(i)) {
      if (c != aligned.at(i)) ++wrong;
    }
    out[i] = static_cast<double>(wrong) * inv_m;
  }
  return out;
}

std::vector<double> PerPointPairDisagreement(const PredictionMatrix& m) {
  const std::size_t n_models = m.n_models();
  if (n_models < 2) {
    throw Error(Errc::kSize, "pair disagreement needs M >= 2");
  }
  const double n_pairs = static_cast<double>(n_models * (n_models - 1) / 2);
  std::vector<double> out(m.n_points());
  std::vector<std::size_t> counts(static_cast<std::size_t>(m.n_classes()));
  for (std::size_t i = 0; i < m.n_points(); ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (int c : m.row(i)) ++counts[static_cast<std::size_t>(c)];
    // Agreeing pairs are those inside one class bucket.
    std::size_t agree = 0;
    for (std::size_t c : counts) {
      if (c > 1) agree += c * (c - 1) / 2;
    }
    const std::size_t total = n_models * (n_models - 1) / 2;
    out[i] = static_cast<double>(total - agree) / n_pairs;
  }
  return out;
}

GdeReport SummarizeGde(const PredictionMatrix& m, const LabelVector& y,
                       std::size_t n_resamples, const RandomSource& rng) {
  const LabelVector aligned = y.AlignedTo(m.point_ids());
  std::vector<double> errors(m.n_models());
  for (std::size_t j = 0; j < m.n_models(); ++j) {
    errors[j] = TestError(m, aligned, j);
  }
  const PairwiseDisagreement pairs = PairwiseDisagreements(m);
  std::vector<double> dis;
  for (std::size_t i = 0; i < m.n_models(); ++i) {
    for (std::size_t j = i + 1; j < m.n_models(); ++j) {
      dis.push_back(pairs.at(i, j));
    }
  }
  GdeReport report;
  report.test_err_mean = Mean(errors);
  report.test_err_std = SampleStd(errors);
  report.dis_mean = pairs.mean_over_pairs;
  report.dis_std = SampleStd(dis);
  report.gap = GdeGap(report.test_err_mean, report.dis_mean);
  const std::vector<double> err_pp = PerPointErrorRate(m, aligned);
  const std::vector<double> dis_pp = PerPointPairDisagreement(m);
  report.bootstrap_std_test =
      BootstrapStdOfMean(err_pp, n_resamples, rng.Derive(1));
  report.bootstrap_std_dis =
      BootstrapStdOfMean(dis_pp, n_resamples, rng.Derive(2));
  if (errors.size() >= 2 && dis.size() >= 1) {
    // Scatter of each pair's disagreement against its first model's error.
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < m.n_models(); ++i) {
      for (std::size_t j = i + 1; j < m.n_models(); ++j) {
        xs.push_back(pairs.at(i, j));
        ys.push_back(errors[i]);
      }
    }
    if (xs.size() >= 2) {
      try {
        const ScatterStats s = ComputeScatterStats(xs, ys);
        report.r_squared = s.r_squared;
        report.kendall_tau = s.kendall_tau;
      } catch (const Error& e) {
        if (e.code() != Errc::kDegenerate) throw;
      }
    }
  }
  return report;
}

}  // namespace gdecal
