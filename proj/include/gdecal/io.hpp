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

// File formats: CSV prediction/label/probability tables, population JSON,
// report documents and plot-data export.

#ifndef GDECAL_IO_HPP_
#define GDECAL_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gdecal/calibration.hpp"
#include "gdecal/core.hpp"
#include "gdecal/simulate.hpp"
#include "gdecal/theory.hpp"

namespace gdecal {

inline constexpr const char* kSchemaVersion = "1";

// Whole-file read and write; failures raise Errc::kIo.
std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view content);

// 64-bit FNV-1a, rendered as "fnv1a64:<16 hex digits>".
std::uint64_t Fnv1a64(std::string_view bytes);
std::string DigestString(std::string_view bytes);

enum class PredictionFormat { kWideCsv, kLongCsv };

// "wide-csv" or "long-csv".
std::optional<PredictionFormat> ParsePredictionFormat(std::string_view name);

// wide-csv: header point_id,model_0,...,model_{M-1}.
// long-csv: header point_id,model_id,class with one row per (point, model);
// model_id is either an integer or "model_<j>".
// Missing cells are rejected; every ParseError names the line or the missing
// (point, model) pair.
PredictionMatrix ParsePredictions(std::string_view text, PredictionFormat format,
                                  std::optional<int> n_classes = std::nullopt);
PredictionMatrix LoadPredictions(const std::string& path, PredictionFormat format,
                                 std::optional<int> n_classes = std::nullopt);

// Header point_id,label.
LabelVector ParseLabels(std::string_view text,
                        std::optional<int> n_classes = std::nullopt);
LabelVector LoadLabels(const std::string& path,
                       std::optional<int> n_classes = std::nullopt);

// Long CSV point_id,class,prob. Classes absent for a point count as zero
// probability.
ProbabilityProfile ParseProbabilities(std::string_view text,
                                      std::optional<int> n_classes = std::nullopt,
                                      double tol = kDefaultNormTolerance);
ProbabilityProfile LoadProbabilities(const std::string& path,
                                     std::optional<int> n_classes = std::nullopt,
                                     double tol = kDefaultNormTolerance);

// {"atoms": [{"w": ..., "hhat": [...], "label_dist": [...]}, ...]}
Population ParsePopulation(std::string_view json_text,
                           double tol = kDefaultNormTolerance);
Population LoadPopulation(const std::string& path,
                          double tol = kDefaultNormTolerance);
std::string PopulationToJson(const Population& pop);

struct InputDigest {
  std::string role;  // "predictions", "labels", ...
  std::string digest;
  std::size_t bytes = 0;

  bool operator==(const InputDigest&) const = default;
};

struct DisagreementSummary {
  std::size_t n_models = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<std::vector<double>> matrix;

  bool operator==(const DisagreementSummary&) const = default;
};

struct NamedScatterStats {
  std::string name;
  std::size_t n = 0;
  std::optional<double> r_squared;
  std::optional<double> kendall_tau;
  std::optional<double> deviation_single;
  std::optional<double> deviation_averaged;
  std::string flag;

  bool operator==(const NamedScatterStats&) const = default;
};

// One dot of a disagreement (x) vs test error (y) scatter.
struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  std::string group;
  double bootstrap_std = 0.0;

  bool operator==(const ScatterPoint&) const = default;
};

struct ReportDocument {
  std::string schema_version = kSchemaVersion;
  std::string command;
  std::optional<int> n_classes;
  std::vector<InputDigest> inputs;
  std::vector<double> model_test_errors;
  std::optional<DisagreementSummary> disagreement;
  std::optional<double> expected_test_error;
  std::optional<double> expected_disagreement;
  std::optional<double> gde_gap;
  std::vector<CalibrationCurve> curves;
  std::optional<double> cace_exact;
  std::optional<double> cace_refined_exact;
  std::optional<double> cace_binned;
  std::optional<double> cace_refined_binned;
  std::optional<double> ece;
  std::vector<EnsembleSize> cace_by_size;
  std::map<std::string, double> bootstrap_std;
  std::vector<NamedScatterStats> scatter_stats;
  std::vector<ScatterPoint> scatter_points;
  std::vector<TheoryResult> theory;
  std::vector<std::string> warnings;

  bool operator==(const ReportDocument&) const = default;
};

// Throws Schema when a rate leaves [0, 1] or a CACE leaves [0, K].
void ValidateReport(const ReportDocument& doc);

std::string SerializeReport(const ReportDocument& doc);
ReportDocument ParseReport(std::string_view json_text);

// Later documents fill and override scalar fields; list fields concatenate.
ReportDocument MergeReports(std::span<const ReportDocument> docs);

// One line of a curve export.
struct CurveRow {
  double bin_lower = 0.0;
  double bin_upper = 0.0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
  double mass = 0.0;

  bool operator==(const CurveRow&) const = default;
};

std::vector<CurveRow> CurveRows(const CalibrationCurve& curve);

// Plot-data CSV. Both raise Size on empty input. Numbers are written with 17
// significant digits so parsing returns the same doubles.
std::string ScatterCsv(std::span<const ScatterPoint> points);
std::string CurveCsv(const CalibrationCurve& curve);
std::vector<ScatterPoint> ParseScatterCsv(std::string_view text);
std::vector<CurveRow> ParseCurveCsv(std::string_view text);

void ExportScatter(std::span<const ScatterPoint> points, const std::string& path);
void ExportCurve(const CalibrationCurve& curve, const std::string& path);

}  // namespace gdecal

#endif  // GDECAL_IO_HPP_
