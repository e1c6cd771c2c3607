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

// Domain types shared by every module: hard prediction matrices, label
// vectors, ensemble probability profiles, exact weighted populations and a
// reproducible random source.

#ifndef GDECAL_CORE_HPP_
#define GDECAL_CORE_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gdecal/errors.hpp"

namespace gdecal {

inline constexpr double kDefaultNormTolerance = 1e-6;

struct ClassIndex {
  int value = 0;
  auto operator<=>(const ClassIndex&) const = default;
};

// Compensated accumulator. Terms are carried in long double with a Kahan
// correction so closed-form population quantities come out correctly rounded
// for the small supports used in theory checks.
class ExactSum {
 public:
  void Add(long double term) {
    const long double y = term - carry_;
    const long double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  ExactSum& operator+=(long double term) {
    Add(term);
    return *this;
  }
  long double Value() const { return sum_; }
  double Get() const { return static_cast<double>(sum_); }

 private:
  long double sum_ = 0.0L;
  long double carry_ = 0.0L;
};

// Top-class predictions of M models on N points, stored point-major.
class PredictionMatrix {
 public:
  // `n_classes` defaults to 1 + the largest observed class. An explicit value
  // smaller than an observed class is a ClassRange error.
  PredictionMatrix(std::vector<std::string> point_ids, std::size_t n_models,
                   std::vector<int> classes,
                   std::optional<int> n_classes = std::nullopt);

  std::size_t n_points() const { return point_ids_.size(); }
  std::size_t n_models() const { return n_models_; }
  int n_classes() const { return n_classes_; }
  const std::vector<std::string>& point_ids() const { return point_ids_; }

  int at(std::size_t point, std::size_t model) const {
    return classes_[point * n_models_ + model];
  }
  std::span<const int> row(std::size_t point) const {
    return {classes_.data() + point * n_models_, n_models_};
  }
  std::vector<int> column(std::size_t model) const;

  // Matrix restricted to the given model columns, in that order.
  PredictionMatrix SelectModels(std::span<const std::size_t> models) const;

 private:
  std::vector<std::string> point_ids_;
  std::size_t n_models_;
  std::vector<int> classes_;
  int n_classes_;
};

class LabelVector {
 public:
  LabelVector(std::vector<std::string> point_ids, std::vector<int> labels,
              std::optional<int> n_classes = std::nullopt);

  std::size_t size() const { return labels_.size(); }
  int n_classes() const { return n_classes_; }
  int at(std::size_t point) const { return labels_[point]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::string>& point_ids() const { return point_ids_; }

  // Reorders to follow `point_ids`. Different id sets are an Alignment error.
  LabelVector AlignedTo(const std::vector<std::string>& point_ids) const;

 private:
  std::vector<std::string> point_ids_;
  std::vector<int> labels_;
  int n_classes_;
};

// Per-point ensemble confidences hhat_k(x); every row lies on the simplex.
class ProbabilityProfile {
 public:
  // Validates row-major `probs` (n_points x n_classes). Rows whose sum is
  // within `tol` of one are renormalized; see ValidateProfile.
  ProbabilityProfile(std::vector<std::string> point_ids, int n_classes,
                     std::vector<double> probs,
                     double tol = kDefaultNormTolerance);

  std::size_t n_points() const { return point_ids_.size(); }
  int n_classes() const { return n_classes_; }
  const std::vector<std::string>& point_ids() const { return point_ids_; }
  double at(std::size_t point, int k) const {
    return probs_[point * static_cast<std::size_t>(n_classes_) + k];
  }
  std::span<const double> row(std::size_t point) const {
    return {probs_.data() + point * static_cast<std::size_t>(n_classes_),
            static_cast<std::size_t>(n_classes_)};
  }
  const std::vector<double>& values() const { return probs_; }

 private:
  std::vector<std::string> point_ids_;
  int n_classes_;
  std::vector<double> probs_;
};

// Re-runs row validation. Validating an already validated profile is the
// identity.
ProbabilityProfile ValidateProfile(const ProbabilityProfile& profile,
                                   double tol = kDefaultNormTolerance);

// Brings one simplex row into exact normalization. Throws Range when an entry
// is outside [-tol, 1+tol] and Normalization when |sum-1| > tol. `what` is
// used as the error context.
void NormalizeSimplexRow(std::span<double> row, double tol,
                         const std::string& what);

// hhat_k(x) = (#models predicting k at x) / M.
ProbabilityProfile EnsembleFromPredictions(const PredictionMatrix& m);

struct Atom {
  double weight = 0.0;
  std::vector<double> hhat;
  std::vector<double> label_dist;
};

// Finite weighted stand-in for the data distribution together with the
// ensemble's confidences at each atom.
class Population {
 public:
  explicit Population(std::vector<Atom> atoms,
                      double tol = kDefaultNormTolerance);

  int n_classes() const { return n_classes_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  // Each point becomes an atom of weight 1/N with a one-hot label.
  static Population FromProfile(const ProbabilityProfile& profile,
                                const LabelVector& labels);

 private:
  std::vector<Atom> atoms_;
  int n_classes_;
};

// Deterministic stream of random draws addressed by (seed, stream_id).
// Uses mt19937_64 for the raw bits and hand-written transforms so sequences
// are identical across standard library implementations.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Independent child stream; the same (parent, child_id) always yields the
  // same child.
  RandomSource Derive(std::uint64_t child_id) const;

  std::uint64_t NextU64();
  // Uniform on [0, 1).
  double Uniform();
  // Uniform integer on [0, n). n must be positive.
  std::size_t UniformIndex(std::size_t n);
  double Normal();
  double Exponential();
  // Index drawn proportionally to `weights`.
  std::size_t Categorical(std::span<const double> weights);
  // Flat Dirichlet(1,...,1) draw of dimension k.
  std::vector<double> UniformSimplex(int k);
  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[UniformIndex(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

std::uint64_t MixBits(std::uint64_t x);

}  // namespace gdecal

#endif  // GDECAL_CORE_HPP_
