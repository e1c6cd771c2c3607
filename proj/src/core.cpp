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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>
#include <unordered_set>

namespace gdecal {

std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgumentError";
    case Errc::kNormalization: return "NormalizationError";
    case Errc::kRange: return "RangeError";
    case Errc::kAlignment: return "AlignmentError";
    case Errc::kIndex: return "IndexError";
    case Errc::kSize: return "SizeError";
    case Errc::kDegenerate: return "DegenerateError";
    case Errc::kParse: return "ParseError";
    case Errc::kDuplicateId: return "DuplicateIdError";
    case Errc::kClassRange: return "ClassRangeError";
    case Errc::kSchema: return "SchemaError";
    case Errc::kConstraint: return "ConstraintError";
    case Errc::kConstruction: return "ConstructionError";
    case Errc::kKappaRange: return "KappaRangeError";
    case Errc::kIo: return "IoError";
  }
  return "Error";
}

namespace {

constexpr double kRenormSlack = 0x1.0p-50;

void CheckUniqueIds(const std::vector<std::string>& ids) {
  std::unordered_set<std::string> seen;
  seen.reserve(ids.size());
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw Error(Errc::kDuplicateId, "point id '" + id + "' repeated");
    }
  }
}

int ResolveClassCount(std::span<const int> classes,
                      std::optional<int> n_classes) {
  int max_seen = -1;
  for (int c : classes) {
    if (c < 0) {
      throw Error(Errc::kClassRange,
                  "negative class " + std::to_string(c));
    }
    max_seen = std::max(max_seen, c);
  }
  if (n_classes) {
    if (*n_classes < 2) {
      throw Error(Errc::kClassRange, "K must be at least 2");
    }
    if (max_seen >= *n_classes) {
      throw Error(Errc::kClassRange,
                  "observed class " + std::to_string(max_seen) +
                      " with explicit K=" + std::to_string(*n_classes));
    }
    return *n_classes;
  }
  // A single observed class still lives in a label set of size at least 2.
  return std::max(2, max_seen + 1);
}

}  // namespace

PredictionMatrix::PredictionMatrix(std::vector<std::string> point_ids,
                                   std::size_t n_models,
                                   std::vector<int> classes,
                                   std::optional<int> n_classes)
    : point_ids_(std::move(point_ids)),
      n_models_(n_models),
      classes_(std::move(classes)) {
  if (point_ids_.empty()) throw Error(Errc::kSize, "no points");
  if (n_models_ == 0) throw Error(Errc::kSize, "no models");
  if (classes_.size() != point_ids_.size() * n_models_) {
    throw Error(Errc::kSize, "prediction count does not match N x M");
  }
  CheckUniqueIds(point_ids_);
  n_classes_ = ResolveClassCount(classes_, n_classes);
}

std::vector<int> PredictionMatrix::column(std::size_t model) const {
  if (model >= n_models_) {
    throw Error(Errc::kIndex, "model " + std::to_string(model));
  }
  std::vector<int> out(n_points());
  for (std::size_t i = 0; i < n_points(); ++i) out[i] = at(i, model);
  return out;
}

PredictionMatrix PredictionMatrix::SelectModels(
    std::span<const std::size_t> models) const {
  std::vector<int> out;
  out.reserve(n_points() * models.size());
  for (std::size_t i = 0; i < n_points(); ++i) {
    for (std::size_t m : models) {
      if (m >= n_models_) {
        throw Error(Errc::kIndex, "model " + std::to_string(m));
      }
      out.push_back(at(i, m));
    }
  }
  return PredictionMatrix(point_ids_, models.size(), std::move(out),
                          n_classes_);
}

LabelVector::LabelVector(std::vector<std::string> point_ids,
                         std::vector<int> labels, std::optional<int> n_classes)
    : point_ids_(std::move(point_ids)), labels_(std::move(labels)) {
  if (point_ids_.size() != labels_.size()) {
    throw Error(Errc::kSize, "label count does not match id count");
  }
  if (labels_.empty()) throw Error(Errc::kSize, "no labels");
  CheckUniqueIds(point_ids_);
  n_classes_ = ResolveClassCount(labels_, n_classes);
}

LabelVector LabelVector::AlignedTo(
    const std::vector<std::string>& point_ids) const {
  if (point_ids == point_ids_) return *this;
  if (point_ids.size() != point_ids_.size()) {
    throw Error(Errc::kAlignment,
                "id sets differ in size (" + std::to_string(point_ids.size()) +
                    " vs " + std::to_string(point_ids_.size()) + ")");
  }
  std::unordered_map<std::string, int> by_id;
  by_id.reserve(point_ids_.size());
  for (std::size_t i = 0; i < point_ids_.size(); ++i) {
    by_id.emplace(point_ids_[i], labels_[i]);
  }
  std::vector<int> out;
  out.reserve(point_ids.size());
  for (const auto& id : point_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error(Errc::kAlignment, "point id '" + id + "' has no label");
    }
    out.push_back(it->second);
  }
  return LabelVector(point_ids, std::move(out), n_classes_);
}

void NormalizeSimplexRow(std::span<double> row, double tol,
                         const std::string& what) {
  if (!(tol > 0.0)) throw Error(Errc::kInvalidArgument, "tolerance must be > 0");
  for (double& v : row) {
    if (!std::isfinite(v) || v < -tol || v > 1.0 + tol) {
      throw Error(Errc::kRange, what + ": entry " + std::to_string(v) +
                                    " outside [0,1]");
    }
    v = std::clamp(v, 0.0, 1.0);
  }
  ExactSum sum;
  for (double v : row) sum += v;
  const double total = sum.Get();
  // A slack of a few ulps keeps inputs written with tol-many digits (e.g.
  // 0.999999 against tol 1e-6) on the accepted side.
  if (std::abs(total - 1.0) > tol + 1e-12) {
    throw Error(Errc::kNormalization,
                what + ": sums to " + std::to_string(total));
  }
  // Rows already within a few ulps of one are left untouched, which keeps
  // validation idempotent.
  if (std::abs(total - 1.0) > kRenormSlack) {
    for (double& v : row) v /= total;
  }
}

ProbabilityProfile::ProbabilityProfile(std::vector<std::string> point_ids,
                                       int n_classes, std::vector<double> probs,
                                       double tol)
    : point_ids_(std::move(point_ids)),
      n_classes_(n_classes),
      probs_(std::move(probs)) {
  if (n_classes_ < 2) throw Error(Errc::kClassRange, "K must be at least 2");
  if (point_ids_.empty()) throw Error(Errc::kSize, "no points");
  if (probs_.size() != point_ids_.size() * static_cast<std::size_t>(n_classes_)) {
    throw Error(Errc::kSize, "probability count does not match N x K");
  }
  CheckUniqueIds(point_ids_);
  const auto k = static_cast<std::size_t>(n_classes_);
  for (std::size_t i = 0; i < point_ids_.size(); ++i) {
    NormalizeSimplexRow(std::span<double>(probs_.data() + i * k, k), tol,
                        "point '" + point_ids_[i] + "'");
  }
}

ProbabilityProfile ValidateProfile(const ProbabilityProfile& profile,
                                   double tol) {
  return ProbabilityProfile(profile.point_ids(), profile.n_classes(),
                            profile.values(), tol);
}

ProbabilityProfile EnsembleFromPredictions(const PredictionMatrix& m) {
  const auto k = static_cast<std::size_t>(m.n_classes());
  const auto n_models = static_cast<double>(m.n_models());
  std::vector<double> probs(m.n_points() * k, 0.0);
  std::vector<std::size_t> counts(k);
  for (std::size_t i = 0; i < m.n_points(); ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (int c : m.row(i)) ++counts[static_cast<std::size_t>(c)];
    for (std::size_t c = 0; c < k; ++c) {
      probs[i * k + c] = static_cast<double>(counts[c]) / n_models;
    }
  }
  return ProbabilityProfile(m.point_ids(), m.n_classes(), std::move(probs));
}

Population::Population(std::vector<Atom> atoms, double tol)
    : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw Error(Errc::kSize, "population has no atoms");
  n_classes_ = static_cast<int>(atoms_.front().hhat.size());
  if (n_classes_ < 2) throw Error(Errc::kSchema, "K must be at least 2");
  std::vector<double> weights;
  weights.reserve(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    Atom& a = atoms_[i];
    const std::string where = "atom " + std::to_string(i);
    if (a.hhat.size() != static_cast<std::size_t>(n_classes_) ||
        a.label_dist.size() != static_cast<std::size_t>(n_classes_)) {
      throw Error(Errc::kSchema, where + ": vector length differs from K=" +
                                     std::to_string(n_classes_));
    }
    if (!std::isfinite(a.weight) || a.weight < 0.0) {
      throw Error(Errc::kRange, where + ": negative weight");
    }
    NormalizeSimplexRow(a.hhat, tol, where + " hhat");
    NormalizeSimplexRow(a.label_dist, tol, where + " label_dist");
    weights.push_back(a.weight);
  }
  ExactSum total;
  for (double w : weights) total += w;
  if (std::abs(total.Get() - 1.0) > tol + 1e-12) {
    throw Error(Errc::kNormalization,
                "weights sum to " + std::to_string(total.Get()));
  }
  if (std::abs(total.Get() - 1.0) > kRenormSlack) {
    for (Atom& a : atoms_) a.weight /= total.Get();
  }
}

Population Population::FromProfile(const ProbabilityProfile& profile,
                                   const LabelVector& labels) {
  const LabelVector aligned = labels.AlignedTo(profile.point_ids());
  const int k = profile.n_classes();
  if (aligned.n_classes() > k) {
    throw Error(Errc::kClassRange, "labels use more classes than the profile");
  }
  const double w = 1.0 / static_cast<double>(profile.n_points());
  std::vector<Atom> atoms;
  atoms.reserve(profile.n_points());
  for (std::size_t i = 0; i < profile.n_points(); ++i) {
    Atom a;
    a.weight = w;
    a.hhat.assign(profile.row(i).begin(), profile.row(i).end());
    a.label_dist.assign(static_cast<std::size_t>(k), 0.0);
    a.label_dist[static_cast<std::size_t>(aligned.at(i))] = 1.0;
    atoms.push_back(std::move(a));
  }
  // Summing N copies of 1/N can miss one by an ulp; the tolerance absorbs it.
  return Population(std::move(atoms));
}

std::uint64_t MixBits(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      engine_(MixBits(seed ^ MixBits(stream_id ^ 0x5851f42d4c957f2dULL))) {}

RandomSource RandomSource::Derive(std::uint64_t child_id) const {
  return RandomSource(seed_, MixBits(stream_id_ * 0x100000001b3ULL + child_id +
                                     0x632be59bd9b4e019ULL));
}

std::uint64_t RandomSource::NextU64() { return engine_(); }

double RandomSource::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

std::size_t RandomSource::UniformIndex(std::size_t n) {
  if (n == 0) throw Error(Errc::kInvalidArgument, "UniformIndex(0)");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // Rejection removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double RandomSource::Normal() {
  // Box-Muller; one variate per call keeps the stream stateless.
  double u1;
  do {
    u1 = Uniform();
  } while (u1 <= 0.0);
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double RandomSource::Exponential() {
  double u;
  do {
    u = Uniform();
  } while (u <= 0.0);
  return -std::log(u);
}

std::size_t RandomSource::Categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error(Errc::kInvalidArgument, "zero total weight");
  const double target = Uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return i;
  }
  for (std::size_t i = weights.size(); i > 0; --i) {
    if (weights[i - 1] > 0.0) return i - 1;
  }
  return weights.size() - 1;
}

std::vector<double> RandomSource::UniformSimplex(int k) {
  std::vector<double> out(static_cast<std::size_t>(k));
  double total = 0.0;
  for (double& v : out) {
    v = Exponential();
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace gdecal
