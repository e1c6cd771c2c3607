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

// Subcommand drivers: load inputs, run the analyses and assemble a report
// document. Shared by the C API and the command-line tool.

#ifndef GDECAL_COMMANDS_HPP_
#define GDECAL_COMMANDS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "gdecal/io.hpp"
#include "gdecal/simulate.hpp"
#include "gdecal/theory.hpp"

namespace gdecal {

struct DisagreeOptions {
  std::string predictions_path;
  PredictionFormat format = PredictionFormat::kWideCsv;
  std::optional<std::string> labels_path;
  std::optional<int> n_classes;
  std::size_t bootstrap = kDefaultBootstrapResamples;
  std::uint64_t seed = 0;
};

// Pairwise disagreement; test errors, the gap and the pair scatter as well
// when labels are given.
ReportDocument RunDisagree(const DisagreeOptions& options);

enum class CalibrationSource { kProbabilities, kPredictions, kPopulation };

struct CalibrateOptions {
  CalibrationSource source = CalibrationSource::kProbabilities;
  std::string input_path;
  PredictionFormat format = PredictionFormat::kWideCsv;  // kPredictions only
  std::optional<std::string> labels_path;  // required unless kPopulation
  std::optional<int> n_classes;
  std::size_t bins = kDefaultBins;
};

// Curves (class-aggregated, top-class and one per class), CACE variants,
// ECE, and the expected test error / disagreement.
ReportDocument RunCalibrate(const CalibrateOptions& options);

ReportDocument RunVerifyTheory(const TheorySuiteOptions& options);
bool AllTheoryChecksPass(const ReportDocument& doc);

struct SimulateOptions {
  StochasticityMode mode = StochasticityMode::kAllDiff;
  std::uint64_t seed = 0;
  std::size_t configs = 20;
  std::size_t pairs = 4;
  std::size_t members = 20;  // 0 skips the ensemble run
  std::size_t bootstrap = kDefaultBootstrapResamples;
  std::size_t bins = kDefaultBins;
  ModelKind model = ModelKind::kOneHidden;
  unsigned threads = 0;
};

// Scatter sweep over the default configuration grid plus an ensemble run on
// the first configuration.
ReportDocument RunSimulate(const SimulateOptions& options);

// Loads and merges report JSON files.
ReportDocument RunReport(std::span<const std::string> paths);

enum class OutputFormat { kJson, kCsv };

// JSON document, or plot-data CSV: the scatter when there is one, otherwise
// the first curve.
std::string RenderReport(const ReportDocument& doc, OutputFormat format);

}  // namespace gdecal

#endif  // GDECAL_COMMANDS_HPP_
