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

// Constructive checks of the calibration => disagreement-equality results on
// exact finite populations: population generators, the equality and
// deviation-bound checks, and the finite-support variance certificate.

#ifndef GDECAL_THEORY_HPP_
#define GDECAL_THEORY_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gdecal/core.hpp"

namespace gdecal {

inline constexpr double kTheoryTolerance = 1e-12;
inline constexpr int kConstructionAttempts = 100;

// Atoms with hhat drawn uniformly from the simplex and label_dist == hhat,
// so p(Y=k | hhat_k = q) = q holds at every atom.
//
// With `level_set_pairs` each atom is instead emitted twice with equal
// weight and labels hhat +/- d (e_a - e_b); neither copy is calibrated on its
// own but the shared level sets are.
Population GenClasswiseCalibrated(int n_classes, int n_atoms, RandomSource& rng,
                                  bool level_set_pairs = false);

// Class-aggregated calibrated population that violates class-wise
// calibration. Built from calibrated filler atoms plus swap pairs: atom A has
// hhat h with labels h + d(e_a - e_c), atom B has h with classes a and b
// swapped and labels pi(h) - d(e_b - e_c). The surplus at confidence h_a in
// A is cancelled by the deficit at h_a in B (and likewise at h_c), so every
// aggregated level set balances while class a alone is off by d.
// Throws Construction for K < 3 and when no attempt within the retry budget
// reaches the minimum class-wise deviation.
Population GenAggregatedNotClasswise(int n_classes, RandomSource& rng,
                                     double min_deviation = 0.05);

// Binary two-atom population where hhat_0 is 0.1 or 0.2 with equal mass and
// p(Y=0 | hhat_0 = 0.1) = eps1, p(Y=0 | hhat_0 = 0.2) = eps2. Requires
// 0.8 eps1 + 0.6 eps2 = 0.2 (within 1e-12), which is exactly the condition
// for expected error = expected disagreement = 0.25.
Population TwoAtomCounterexample(double eps1, double eps2);

// Hard atoms (mass frac_hard) predict uniformly at random; easy atoms are
// always right.
Population EasyHardPopulation(double frac_hard, int n_classes);

// Single binary atom with hhat = label_dist = (q, 1 - q).
Population BinaryLevelSet(double q);

struct GdeCheck {
  double expected_test_error = 0.0;
  double expected_disagreement = 0.0;
  double gap = 0.0;
  bool holds = false;
};

GdeCheck CheckGde(const Population& pop, double tol = kTheoryTolerance);

struct DeviationBoundCheck {
  double gap = 0.0;
  double cace = 0.0;
  double refined_cace = 0.0;
  bool ok = false;          // gap <= cace + 1e-12
  bool refined_ok = false;  // gap <= refined_cace + 1e-12
};

DeviationBoundCheck CheckDeviationBound(const Population& pop);

// Uniformly random population: weights, hhat rows and label rows each drawn
// from flat Dirichlet distributions.
Population RandomPopulation(int n_classes, int n_atoms, RandomSource& rng);

// Finite distribution over hypotheses, each a class vector over the same
// points.
struct HypothesisDistribution {
  std::vector<double> probabilities;
  std::vector<std::vector<int>> predictions;
  int n_classes = 2;

  std::size_t n_hypotheses() const { return probabilities.size(); }
  std::size_t n_points() const {
    return predictions.empty() ? 0 : predictions.front().size();
  }
};

// Ensemble profile hhat induced by the distribution at each point.
ProbabilityProfile InducedProfile(const HypothesisDistribution& hd);

struct KappaCertificate {
  double kappa_hat = 0.5;
  double var_dis = 0.0;
  double var_err = 0.0;
  double ete = 0.0;
  double edr = 0.0;
  // 2 k^2 Var(TestErr) + (4 k^2 - 1) ETE^2; valid when ETE = EDR.
  double bound_rhs = 0.0;
  // k^2 (2 Var(TestErr) + 4 ETE^2) - EDR^2; valid without the equality.
  double general_rhs = 0.0;
  bool holds = false;  // var_dis <= bound_rhs + 1e-12
};

// Exact variance certificate over all ordered hypothesis pairs. Labels are
// per-point distributions over classes (one-hot for hard labels); points are
// equally weighted. kappa_hat is the largest Dis/(Err+Err') over support
// pairs, clamped to [1/2, 1], with 0/0 pairs counted as 1/2. A ratio above 1
// is impossible for consistent inputs and raises KappaRange.
KappaCertificate VarianceCertificate(
    const HypothesisDistribution& hd,
    std::span<const std::vector<double>> label_dists);
KappaCertificate VarianceCertificate(const HypothesisDistribution& hd,
                                     std::span<const int> labels);

// Random distribution over `n_hypotheses` class vectors on `n_points`
// points. Hypotheses are noisy copies of a shared reference so that errors
// are correlated.
HypothesisDistribution RandomHypothesisDistribution(int n_classes,
                                                    int n_hypotheses,
                                                    int n_points,
                                                    RandomSource& rng);

// Per-point label distributions equal to the induced hhat row, i.e. a
// class-wise calibrated labelling of `hd`.
std::vector<std::vector<double>> CalibratedLabels(
    const HypothesisDistribution& hd);

// Result of one named theory check in the verification suite.
struct TheoryResult {
  std::string name;
  bool pass = false;
  std::size_t cases = 0;
  std::size_t violations = 0;
  double worst = 0.0;  // largest violation measure observed
  std::string detail;

  bool operator==(const TheoryResult&) const = default;
};

struct TheorySuiteOptions {
  std::uint64_t seed = 0;
  std::size_t sweeps = 1000;
};

// Runs every theory check and reports one result per check.
std::vector<TheoryResult> RunTheorySuite(const TheorySuiteOptions& options);

}  // namespace gdecal

#endif  // GDECAL_THEORY_HPP_
