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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gdecal/calibration.hpp"
#include "gdecal/metrics.hpp"

namespace gdecal {

namespace {

std::vector<double> OneHot(int n_classes, int k) {
  std::vector<double> v(static_cast<std::size_t>(n_classes), 0.0);
  v[static_cast<std::size_t>(k)] = 1.0;
  return v;
}

// Indices of the largest and second largest entries, plus any third index.
struct SwapClasses {
  std::size_t a, b, c;
};

SwapClasses PickSwapClasses(const std::vector<double>& h, RandomSource& rng) {
  std::vector<std::size_t> order(h.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return h[x] > h[y]; });
  // a and c carry the label shift, so both need room; b is any other class.
  const std::size_t b = order[2 + rng.UniformIndex(order.size() - 2)];
  return {order[0], b, order[1]};
}

std::string Fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

Population GenClasswiseCalibrated(int n_classes, int n_atoms, RandomSource& rng,
                                  bool level_set_pairs) {
  if (n_classes < 2) throw Error(Errc::kInvalidArgument, "K must be >= 2");
  if (n_atoms < 1) throw Error(Errc::kInvalidArgument, "need at least 1 atom");
  const std::vector<double> weights = rng.UniformSimplex(n_atoms);
  std::vector<Atom> atoms;
  for (int i = 0; i < n_atoms; ++i) {
    std::vector<double> h = rng.UniformSimplex(n_classes);
    if (!level_set_pairs) {
      atoms.push_back({weights[static_cast<std::size_t>(i)], h, h});
      continue;
    }
    const std::size_t a = rng.UniformIndex(static_cast<std::size_t>(n_classes));
    std::size_t b = rng.UniformIndex(static_cast<std::size_t>(n_classes - 1));
    if (b >= a) ++b;
    const double room = std::min({h[a], h[b], 1.0 - h[a], 1.0 - h[b]});
    const double d = rng.Uniform() * room;
    const double w = weights[static_cast<std::size_t>(i)] / 2.0;
    std::vector<double> up = h, down = h;
    up[a] += d;
    up[b] -= d;
    down[a] -= d;
    down[b] += d;
    atoms.push_back({w, h, std::move(up)});
    atoms.push_back({w, h, std::move(down)});
  }
  return Population(std::move(atoms));
}

Population GenAggregatedNotClasswise(int n_classes, RandomSource& rng,
                                     double min_deviation) {
  if (n_classes < 3) {
    throw Error(Errc::kConstruction,
                "class-aggregated and class-wise calibration coincide for K=2");
  }
  for (int attempt = 0; attempt < kConstructionAttempts; ++attempt) {
    const int n_filler = static_cast<int>(rng.UniformIndex(4));
    const int n_pairs = 1 + static_cast<int>(rng.UniformIndex(3));
    const std::vector<double> weights = rng.UniformSimplex(n_filler + n_pairs);
    std::vector<Atom> atoms;
    for (int i = 0; i < n_filler; ++i) {
      std::vector<double> h = rng.UniformSimplex(n_classes);
      atoms.push_back({weights[static_cast<std::size_t>(i)], h, h});
    }
    for (int p = 0; p < n_pairs; ++p) {
      const std::vector<double> h = rng.UniformSimplex(n_classes);
      const SwapClasses s = PickSwapClasses(h, rng);
      const double d = (0.5 + 0.5 * rng.Uniform()) * std::min(h[s.a], h[s.c]);
      std::vector<double> swapped = h;
      std::swap(swapped[s.a], swapped[s.b]);
      std::vector<double> label_a = h;
      label_a[s.a] += d;
      label_a[s.c] -= d;
      std::vector<double> label_b = swapped;
      label_b[s.b] -= d;
      label_b[s.c] += d;
      const double w = weights[static_cast<std::size_t>(n_filler + p)] / 2.0;
      atoms.push_back({w, h, std::move(label_a)});
      atoms.push_back({w, std::move(swapped), std::move(label_b)});
    }
    Population pop(std::move(atoms));
    if (MaxClassWiseDeviation(pop) >= min_deviation &&
        CaceExact(pop) <= kTheoryTolerance) {
      return pop;
    }
  }
  throw Error(Errc::kConstruction,
              "no class-aggregated population within " +
                  std::to_string(kConstructionAttempts) + " attempts");
}

Population TwoAtomCounterexample(double eps1, double eps2) {
  if (eps1 < 0.0 || eps1 > 1.0 || eps2 < 0.0 || eps2 > 1.0) {
    throw Error(Errc::kConstraint, "eps1 and eps2 must lie in [0, 1]");
  }
  if (std::abs(0.8 * eps1 + 0.6 * eps2 - 0.2) > 1e-12) {
    throw Error(Errc::kConstraint,
                "0.8*eps1 + 0.6*eps2 = " + Fmt(0.8 * eps1 + 0.6 * eps2) +
                    ", must equal 0.2");
  }
  std::vector<Atom> atoms;
  atoms.push_back({0.5, {0.1, 0.9}, {eps1, 1.0 - eps1}});
  atoms.push_back({0.5, {0.2, 0.8}, {eps2, 1.0 - eps2}});
  return Population(std::move(atoms));
}

Population EasyHardPopulation(double frac_hard, int n_classes) {
  if (!(frac_hard >= 0.0 && frac_hard <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "frac_hard must lie in [0, 1]");
  }
  if (n_classes < 2) throw Error(Errc::kInvalidArgument, "K must be >= 2");
  std::vector<Atom> atoms;
  if (frac_hard > 0.0) {
    std::vector<double> uniform(static_cast<std::size_t>(n_classes),
                                1.0 / static_cast<double>(n_classes));
    atoms.push_back({frac_hard, std::move(uniform), OneHot(n_classes, 0)});
  }
  if (frac_hard < 1.0) {
    atoms.push_back(
        {1.0 - frac_hard, OneHot(n_classes, 0), OneHot(n_classes, 0)});
  }
  return Population(std::move(atoms));
}

Population BinaryLevelSet(double q) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "q must lie in [0, 1]");
  }
  std::vector<Atom> atoms;
  atoms.push_back({1.0, {q, 1.0 - q}, {q, 1.0 - q}});
  return Population(std::move(atoms));
}

GdeCheck CheckGde(const Population& pop, double tol) {
  GdeCheck out;
  out.expected_test_error = ExpectedTestError(pop);
  out.expected_disagreement = ExpectedDisagreement(pop);
  out.gap = GdeGap(out.expected_test_error, out.expected_disagreement);
  out.holds = out.gap <= tol;
  return out;
}

DeviationBoundCheck CheckDeviationBound(const Population& pop) {
  DeviationBoundCheck out;
  out.gap = CheckGde(pop).gap;
  out.cace = CaceExact(pop);
  out.refined_cace = CaceRefinedExact(pop);
  out.ok = out.gap <= out.cace + kTheoryTolerance;
  out.refined_ok = out.gap <= out.refined_cace + kTheoryTolerance;
  return out;
}

Population RandomPopulation(int n_classes, int n_atoms, RandomSource& rng) {
  const std::vector<double> weights = rng.UniformSimplex(n_atoms);
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(n_atoms));
  for (int i = 0; i < n_atoms; ++i) {
    atoms.push_back({weights[static_cast<std::size_t>(i)],
                     rng.UniformSimplex(n_classes),
                     rng.UniformSimplex(n_classes)});
  }
  return Population(std::move(atoms));
}

ProbabilityProfile InducedProfile(const HypothesisDistribution& hd) {
  const std::size_t n = hd.n_points();
  const auto k = static_cast<std::size_t>(hd.n_classes);
  std::vector<double> probs(n * k, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<ExactSum> acc(k);
    for (std::size_t h = 0; h < hd.n_hypotheses(); ++h) {
      acc[static_cast<std::size_t>(hd.predictions[h][x])] +=
          hd.probabilities[h];
    }
    for (std::size_t c = 0; c < k; ++c) probs[x * k + c] = acc[c].Get();
  }
  std::vector<std::string> ids(n);
  for (std::size_t x = 0; x < n; ++x) ids[x] = std::to_string(x);
  return ProbabilityProfile(std::move(ids), hd.n_classes, std::move(probs));
}

KappaCertificate VarianceCertificate(
    const HypothesisDistribution& hd,
    std::span<const std::vector<double>> label_dists) {
  const std::size_t n_h = hd.n_hypotheses();
  const std::size_t n = hd.n_points();
  if (n_h == 0 || n == 0) {
    throw Error(Errc::kSize, "empty hypothesis distribution");
  }
  if (label_dists.size() != n) {
    throw Error(Errc::kAlignment, "labels do not match the point count");
  }
  for (const auto& pred : hd.predictions) {
    if (pred.size() != n) throw Error(Errc::kSize, "ragged hypotheses");
    for (int c : pred) {
      if (c < 0 || c >= hd.n_classes) {
        throw Error(Errc::kClassRange, "prediction outside [0, K)");
      }
    }
  }
  for (const auto& row : label_dists) {
    if (row.size() != static_cast<std::size_t>(hd.n_classes)) {
      throw Error(Errc::kSchema, "label distribution length differs from K");
    }
  }
  const long double inv_n = 1.0L / static_cast<long double>(n);

  std::vector<long double> err(n_h);
  for (std::size_t h = 0; h < n_h; ++h) {
    ExactSum s;
    for (std::size_t x = 0; x < n; ++x) {
      s += 1.0L - static_cast<long double>(
                      label_dists[x][static_cast<std::size_t>(
                          hd.predictions[h][x])]);
    }
    err[h] = s.Value() * inv_n;
  }
  std::vector<long double> dis(n_h * n_h, 0.0L);
  for (std::size_t i = 0; i < n_h; ++i) {
    for (std::size_t j = i + 1; j < n_h; ++j) {
      std::size_t differ = 0;
      for (std::size_t x = 0; x < n; ++x) {
        if (hd.predictions[i][x] != hd.predictions[j][x]) ++differ;
      }
      dis[i * n_h + j] = dis[j * n_h + i] =
          static_cast<long double>(differ) * inv_n;
    }
  }

  KappaCertificate cert;
  long double kappa = 0.5L;
  for (std::size_t i = 0; i < n_h; ++i) {
    if (hd.probabilities[i] <= 0.0) continue;
    for (std::size_t j = 0; j < n_h; ++j) {
      if (hd.probabilities[j] <= 0.0) continue;
      const long double denom = err[i] + err[j];
      const long double d = dis[i * n_h + j];
      if (denom <= 0.0L) {
        if (d > 1e-12L) {
          throw Error(Errc::kKappaRange,
                      "pair with zero error but positive disagreement");
        }
        continue;
      }
      const long double ratio = d / denom;
      if (ratio > 1.0L + 1e-12L) {
        throw Error(Errc::kKappaRange,
                    "Dis/(Err+Err') = " + Fmt(static_cast<double>(ratio)));
      }
      kappa = std::max(kappa, ratio);
    }
  }
  kappa = std::min(kappa, 1.0L);

  ExactSum e1, e2, d1, d2;
  for (std::size_t i = 0; i < n_h; ++i) {
    const long double pi = hd.probabilities[i];
    e1 += pi * err[i];
    e2 += pi * err[i] * err[i];
    for (std::size_t j = 0; j < n_h; ++j) {
      const long double pj = hd.probabilities[j];
      const long double d = dis[i * n_h + j];
      d1 += pi * pj * d;
      d2 += pi * pj * d * d;
    }
  }
  const long double ete = e1.Value();
  const long double edr = d1.Value();
  const long double var_err = std::max(0.0L, e2.Value() - ete * ete);
  const long double var_dis = std::max(0.0L, d2.Value() - edr * edr);
  const long double k2 = kappa * kappa;

  cert.kappa_hat = static_cast<double>(kappa);
  cert.ete = static_cast<double>(ete);
  cert.edr = static_cast<double>(edr);
  cert.var_err = static_cast<double>(var_err);
  cert.var_dis = static_cast<double>(var_dis);
  cert.bound_rhs =
      static_cast<double>(2.0L * k2 * var_err + (4.0L * k2 - 1.0L) * ete * ete);
  cert.general_rhs =
      static_cast<double>(k2 * (2.0L * var_err + 4.0L * ete * ete) - edr * edr);
  cert.holds = cert.var_dis <= cert.bound_rhs + kTheoryTolerance;
  return cert;
}

KappaCertificate VarianceCertificate(const HypothesisDistribution& hd,
                                     std::span<const int> labels) {
  std::vector<std::vector<double>> dists;
  dists.reserve(labels.size());
  for (int y : labels) {
    if (y < 0 || y >= hd.n_classes) {
      throw Error(Errc::kClassRange, "label outside [0, K)");
    }
    dists.push_back(OneHot(hd.n_classes, y));
  }
  return VarianceCertificate(hd, dists);
}

HypothesisDistribution RandomHypothesisDistribution(int n_classes,
                                                    int n_hypotheses,
                                                    int n_points,
                                                    RandomSource& rng) {
  HypothesisDistribution hd;
  hd.n_classes = n_classes;
  hd.probabilities = rng.UniformSimplex(n_hypotheses);
  std::vector<int> reference(static_cast<std::size_t>(n_points));
  for (int& c : reference) {
    c = static_cast<int>(rng.UniformIndex(static_cast<std::size_t>(n_classes)));
  }
  for (int h = 0; h < n_hypotheses; ++h) {
    const double flip = 0.5 * rng.Uniform();
    std::vector<int> pred = reference;
    for (int& c : pred) {
      if (rng.Uniform() < flip) {
        c = static_cast<int>(
            rng.UniformIndex(static_cast<std::size_t>(n_classes)));
      }
    }
    hd.predictions.push_back(std::move(pred));
  }
  return hd;
}

std::vector<std::vector<double>> CalibratedLabels(
    const HypothesisDistribution& hd) {
  const ProbabilityProfile p = InducedProfile(hd);
  std::vector<std::vector<double>> out;
  out.reserve(p.n_points());
  for (std::size_t x = 0; x < p.n_points(); ++x) {
    out.emplace_back(p.row(x).begin(), p.row(x).end());
  }
  return out;
}

namespace {

TheoryResult CheckClasswiseSweep(const RandomSource& root,
                                 std::size_t sweeps) {
  TheoryResult r;
  r.name = "classwise_calibration_implies_gde";
  for (std::size_t s = 0; s < sweeps; ++s) {
    RandomSource rng = root.Derive(s);
    const int k = 2 + static_cast<int>(rng.UniformIndex(9));
    const int atoms = 1 + static_cast<int>(rng.UniformIndex(100));
    for (bool pairs : {false, true}) {
      const Population pop = GenClasswiseCalibrated(k, atoms, rng, pairs);
      const GdeCheck g = CheckGde(pop);
      const double dev = std::max(g.gap, MaxClassWiseDeviation(pop));
      ++r.cases;
      r.worst = std::max(r.worst, dev);
      if (dev > kTheoryTolerance) ++r.violations;
    }
  }
  r.pass = r.violations == 0;
  r.detail = "max(|ETE-EDR|, class-wise deviation) = " + Fmt(r.worst);
  return r;
}

TheoryResult CheckAggregatedSweep(const RandomSource& root,
                                  std::size_t count) {
  TheoryResult r;
  r.name = "aggregated_calibration_implies_gde";
  std::size_t failures = 0;
  double min_dev = 1.0;
  for (std::size_t s = 0; s < count; ++s) {
    RandomSource rng = root.Derive(s);
    const int k = 3 + static_cast<int>(rng.UniformIndex(8));
    ++r.cases;
    try {
      const Population pop = GenAggregatedNotClasswise(k, rng);
      const GdeCheck g = CheckGde(pop);
      const double dev = MaxClassWiseDeviation(pop);
      min_dev = std::min(min_dev, dev);
      r.worst = std::max(r.worst, g.gap);
      if (!g.holds || dev < 0.01) ++r.violations;
    } catch (const Error& e) {
      if (e.code() != Errc::kConstruction) throw;
      ++failures;
      ++r.violations;
    }
  }
  bool binary_rejected = false;
  try {
    RandomSource rng = root.Derive(count);
    GenAggregatedNotClasswise(2, rng);
  } catch (const Error& e) {
    binary_rejected = e.code() == Errc::kConstruction;
  }
  r.pass = r.violations == 0 && binary_rejected;
  r.detail = "max gap " + Fmt(r.worst) + ", min class-wise deviation " +
             Fmt(min_dev) + ", construction failures " +
             std::to_string(failures) +
             (binary_rejected ? ", K=2 rejected" : ", K=2 NOT rejected");
  return r;
}

TheoryResult CheckBinaryLevelSets() {
  TheoryResult r;
  r.name = "binary_level_set_identity";
  for (int i = 0; i <= 10; ++i) {
    const double q = i / 10.0;
    const GdeCheck g = CheckGde(BinaryLevelSet(q));
    const double target = 2.0 * q * (1.0 - q);
    const double dev = std::abs(g.expected_test_error - target);
    ++r.cases;
    r.worst = std::max(r.worst, dev);
    if (g.expected_test_error != g.expected_disagreement || dev > 1e-15) {
      ++r.violations;
    }
  }
  r.pass = r.violations == 0;
  r.detail = "max |ETE - 2q(1-q)| = " + Fmt(r.worst);
  return r;
}

TheoryResult CheckDeviationSweep(const RandomSource& root,
                                 std::size_t sweeps) {
  TheoryResult r;
  r.name = "deviation_bound";
  double best_ratio = 0.0;
  double best_refined_ratio = 0.0;
  for (std::size_t s = 0; s < sweeps; ++s) {
    RandomSource rng = root.Derive(s);
    const int k = 2 + static_cast<int>(rng.UniformIndex(5));
    const int atoms = 1 + static_cast<int>(rng.UniformIndex(20));
    const DeviationBoundCheck c =
        CheckDeviationBound(RandomPopulation(k, atoms, rng));
    ++r.cases;
    r.worst = std::max({r.worst, c.gap - c.cace, c.gap - c.refined_cace});
    if (!c.ok || !c.refined_ok) ++r.violations;
    if (c.cace > 0.0) best_ratio = std::max(best_ratio, c.gap / c.cace);
    if (c.refined_cace > 0.0) {
      best_refined_ratio = std::max(best_refined_ratio, c.gap / c.refined_cace);
    }
  }
  r.pass = r.violations == 0;
  r.detail = "max gap/CACE " + Fmt(best_ratio) + ", max gap/refined CACE " +
             Fmt(best_refined_ratio);
  return r;
}

TheoryResult CheckCounterexample() {
  TheoryResult r;
  r.name = "gde_without_calibration";
  const Population off = TwoAtomCounterexample(0.25, 0.0);
  const Population on = TwoAtomCounterexample(0.1, 0.2);
  const GdeCheck g = CheckGde(off);
  const double cace_off = CaceExact(off);
  const double cace_on = CaceExact(on);
  r.cases = 2;
  const bool values_ok = std::abs(g.expected_test_error - 0.25) <= 1e-15 &&
                         std::abs(g.expected_disagreement - 0.25) <= 1e-15 &&
                         std::abs(cace_off - 0.35) <= 1e-12;
  if (!values_ok || !g.holds) ++r.violations;
  if (cace_on > kTheoryTolerance) ++r.violations;
  r.worst = std::max(g.gap, cace_on);
  r.pass = r.violations == 0;
  r.detail = "ETE " + Fmt(g.expected_test_error) + ", EDR " +
             Fmt(g.expected_disagreement) + ", CACE " + Fmt(cace_off) +
             "; calibrated solution CACE " + Fmt(cace_on);
  return r;
}

TheoryResult CheckEasyHard() {
  TheoryResult r;
  r.name = "easy_hard_pointwise";
  for (double frac : {0.0, 0.25, 0.5, 1.0}) {
    for (int k : {2, 3, 10}) {
      const GdeCheck g = CheckGde(EasyHardPopulation(frac, k));
      const double target = frac * (k - 1) / static_cast<double>(k);
      const double dev = std::max(g.gap, std::abs(g.expected_test_error - target));
      ++r.cases;
      r.worst = std::max(r.worst, dev);
      if (dev > 1e-15) ++r.violations;
    }
  }
  r.pass = r.violations == 0;
  r.detail = "max deviation from frac_hard*(K-1)/K = " + Fmt(r.worst);
  return r;
}

TheoryResult CheckVarianceSweep(const RandomSource& root, std::size_t count) {
  TheoryResult r;
  r.name = "variance_bound";
  double kappa_min = 1.0;
  double kappa_max = 0.5;
  for (std::size_t s = 0; s < count; ++s) {
    RandomSource rng = root.Derive(s);
    const int k = 2 + static_cast<int>(rng.UniformIndex(4));
    const int n_h = 1 + static_cast<int>(rng.UniformIndex(10));
    const int n = 1 + static_cast<int>(rng.UniformIndex(100));
    const HypothesisDistribution hd =
        RandomHypothesisDistribution(k, n_h, n, rng);
    const auto labels = CalibratedLabels(hd);
    const KappaCertificate c = VarianceCertificate(hd, labels);
    ++r.cases;
    kappa_min = std::min(kappa_min, c.kappa_hat);
    kappa_max = std::max(kappa_max, c.kappa_hat);
    r.worst = std::max(r.worst, c.var_dis - c.bound_rhs);
    if (!c.holds || c.var_dis > c.general_rhs + kTheoryTolerance) {
      ++r.violations;
    }
  }
  r.pass = r.violations == 0;
  r.detail = "kappa_hat in [" + Fmt(kappa_min) + ", " + Fmt(kappa_max) +
             "], max Var(Dis) - bound = " + Fmt(r.worst);
  return r;
}

}  // namespace

std::vector<TheoryResult> RunTheorySuite(const TheorySuiteOptions& options) {
  const RandomSource root(options.seed);
  const std::size_t sweeps = std::max<std::size_t>(options.sweeps, 1);
  const std::size_t smaller = std::max<std::size_t>(sweeps / 5, 1);
  std::vector<TheoryResult> out;
  out.push_back(CheckClasswiseSweep(root.Derive(1), sweeps));
  out.push_back(CheckAggregatedSweep(root.Derive(2), smaller));
  out.push_back(CheckBinaryLevelSets());
  out.push_back(CheckDeviationSweep(root.Derive(3), sweeps));
  out.push_back(CheckCounterexample());
  out.push_back(CheckEasyHard());
  out.push_back(CheckVarianceSweep(root.Derive(4), smaller));
  return out;
}

}  // namespace gdecal
