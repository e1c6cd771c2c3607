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

#include "gdecal/commands.hpp"

#include <algorithm>
#include <vector>

#include "gdecal/calibration.hpp"
#include "gdecal/metrics.hpp"

namespace gdecal {

namespace {

// Reads a file and records its digest in the report.
std::string ReadInput(ReportDocument& doc, const std::string& role,
                      const std::string& path) {
  std::string text = ReadFile(path);
  doc.inputs.push_back({role, DigestString(text), text.size()});
  return text;
}

DisagreementSummary Summarize(const PairwiseDisagreement& pw) {
  DisagreementSummary s;
  s.n_models = pw.n_models;
  s.mean = pw.mean_over_pairs;
  s.min = 1.0;
  s.max = 0.0;
  s.matrix.assign(pw.n_models, std::vector<double>(pw.n_models, 0.0));
  for (std::size_t i = 0; i < pw.n_models; ++i) {
    for (std::size_t j = 0; j < pw.n_models; ++j) {
      s.matrix[i][j] = pw.at(i, j);
      if (i < j) {
        s.min = std::min(s.min, pw.at(i, j));
        s.max = std::max(s.max, pw.at(i, j));
      }
    }
  }
  return s;
}

void FillPopulationMetrics(ReportDocument& doc, const Population& pop,
                           std::size_t bins) {
  doc.n_classes = pop.n_classes();
  const double ete = ExpectedTestError(pop);
  const double edr = ExpectedDisagreement(pop);
  doc.expected_test_error = ete;
  doc.expected_disagreement = edr;
  doc.gde_gap = GdeGap(ete, edr);
  doc.curves.push_back(ClassAggregatedCurve(pop, bins));
  doc.curves.push_back(TopClassCurve(pop, bins));
  for (int k = 0; k < pop.n_classes(); ++k) {
    doc.curves.push_back(ClassWiseCurve(pop, ClassIndex{k}, bins));
  }
  doc.cace_exact = CaceExact(pop);
  doc.cace_refined_exact = CaceRefinedExact(pop);
  doc.cace_binned = CaceBinned(pop, bins);
  doc.cace_refined_binned = CaceRefinedBinned(pop, bins);
  doc.ece = EceBinned(pop, bins);
}

void FillModelErrors(ReportDocument& doc, const PredictionMatrix& m,
                     const LabelVector& y) {
  for (std::size_t j = 0; j < m.n_models(); ++j) {
    doc.model_test_errors.push_back(TestError(m, y, j));
  }
}

std::vector<double> PairIndicator(const PredictionMatrix& m, std::size_t i,
                                  std::size_t j) {
  std::vector<double> out(m.n_points());
  for (std::size_t p = 0; p < m.n_points(); ++p) {
    out[p] = m.at(p, i) != m.at(p, j) ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace

ReportDocument RunDisagree(const DisagreeOptions& options) {
  ReportDocument doc;
  doc.command = "disagree";
  const PredictionMatrix m = ParsePredictions(
      ReadInput(doc, "predictions", options.predictions_path), options.format,
      options.n_classes);
  const PairwiseDisagreement pw = PairwiseDisagreements(m);
  doc.n_classes = m.n_classes();
  doc.disagreement = Summarize(pw);
  const RandomSource rng(options.seed);
  doc.bootstrap_std["disagreement"] = BootstrapStdOfMean(
      PerPointPairDisagreement(m), options.bootstrap, rng.Derive(2));
  if (!options.labels_path) return doc;

  const LabelVector y =
      ParseLabels(ReadInput(doc, "labels", *options.labels_path), options.n_classes)
          .AlignedTo(m.point_ids());
  doc.n_classes = std::max(m.n_classes(), y.n_classes());
  FillModelErrors(doc, m, y);
  const GdeReport g = SummarizeGde(m, y, options.bootstrap, rng);
  doc.gde_gap = g.gap;
  doc.bootstrap_std["test_error"] = g.bootstrap_std_test;
  doc.bootstrap_std["disagreement"] = g.bootstrap_std_dis;
  NamedScatterStats stats;
  stats.name = "pairs";
  for (std::size_t i = 0; i < m.n_models(); ++i) {
    for (std::size_t j = i + 1; j < m.n_models(); ++j) {
      const std::size_t pair = doc.scatter_points.size();
      doc.scatter_points.push_back(
          {pw.at(i, j), doc.model_test_errors[i],
           "model_" + std::to_string(i) + "/model_" + std::to_string(j),
           BootstrapStdOfMean(PairIndicator(m, i, j), options.bootstrap,
                              rng.Derive(100 + pair))});
    }
  }
  stats.n = doc.scatter_points.size();
  stats.r_squared = g.r_squared;
  stats.kendall_tau = g.kendall_tau;
  if (!g.r_squared) stats.flag = "scatter statistics undefined";
  doc.scatter_stats.push_back(std::move(stats));
  return doc;
}

ReportDocument RunCalibrate(const CalibrateOptions& options) {
  ReportDocument doc;
  doc.command = "calibrate";
  if (options.source == CalibrationSource::kPopulation) {
    if (options.labels_path) {
      throw Error(Errc::kInvalidArgument,
                  "a population carries its own label distributions; drop --labels");
    }
    const Population pop =
        ParsePopulation(ReadInput(doc, "population", options.input_path));
    FillPopulationMetrics(doc, pop, options.bins);
    return doc;
  }
  if (!options.labels_path) {
    throw Error(Errc::kInvalidArgument, "--labels is required");
  }
  if (options.source == CalibrationSource::kProbabilities) {
    const ProbabilityProfile profile = ParseProbabilities(
        ReadInput(doc, "probabilities", options.input_path), options.n_classes);
    const LabelVector y = ParseLabels(
        ReadInput(doc, "labels", *options.labels_path), options.n_classes);
    FillPopulationMetrics(doc, Population::FromProfile(profile, y), options.bins);
    return doc;
  }
  const PredictionMatrix m =
      ParsePredictions(ReadInput(doc, "predictions", options.input_path),
                       options.format, options.n_classes);
  const LabelVector y =
      ParseLabels(ReadInput(doc, "labels", *options.labels_path), options.n_classes);
  const LabelVector aligned = y.AlignedTo(m.point_ids());
  FillModelErrors(doc, m, aligned);
  if (m.n_models() >= 2) doc.disagreement = Summarize(PairwiseDisagreements(m));
  const ProbabilityProfile profile = EnsembleFromPredictions(m);
  if (aligned.n_classes() > profile.n_classes()) {
    // Widen the profile so labels outside the predicted classes still count.
    std::vector<double> probs;
    const int k = aligned.n_classes();
    for (std::size_t i = 0; i < profile.n_points(); ++i) {
      const auto row = profile.row(i);
      probs.insert(probs.end(), row.begin(), row.end());
      probs.insert(probs.end(), static_cast<std::size_t>(k - profile.n_classes()), 0.0);
    }
    FillPopulationMetrics(
        doc,
        Population::FromProfile(
            ProbabilityProfile(profile.point_ids(), k, std::move(probs)), aligned),
        options.bins);
  } else {
    FillPopulationMetrics(doc, Population::FromProfile(profile, aligned),
                          options.bins);
  }
  return doc;
}

ReportDocument RunVerifyTheory(const TheorySuiteOptions& options) {
  ReportDocument doc;
  doc.command = "verify-theory";
  doc.theory = RunTheorySuite(options);
  return doc;
}

bool AllTheoryChecksPass(const ReportDocument& doc) {
  return !doc.theory.empty() &&
         std::all_of(doc.theory.begin(), doc.theory.end(),
                     [](const TheoryResult& r) { return r.pass; });
}

ReportDocument RunSimulate(const SimulateOptions& options) {
  if (options.configs < 1) throw Error(Errc::kInvalidArgument, "configs >= 1");
  ReportDocument doc;
  doc.command = "simulate";
  const std::vector<SweepConfig> configs =
      DefaultSweepConfigs(options.configs, options.model, options.seed);
  doc.n_classes = configs.front().task.n_classes;
  const RandomSource root(options.seed, 0x73696d);
  const StochasticityMode modes[] = {options.mode};
  SweepOptions sweep_options;
  sweep_options.n_pairs = options.pairs;
  sweep_options.bootstrap_resamples = options.bootstrap;
  sweep_options.threads = options.threads;
  const SweepResult sweep = Sweep(configs, modes, sweep_options, root.Derive(1));

  std::size_t unconverged = 0;
  for (const SweepRow& row : sweep.rows) {
    doc.scatter_points.push_back(
        {row.disagreement, row.test_err, row.group, row.bootstrap_std});
    unconverged += row.warnings;
  }
  for (const ModeScatter& ms : sweep.scatter) {
    const std::string mode(ModeName(ms.mode));
    NamedScatterStats single;
    single.name = mode + "/single_pair";
    single.n = ms.n;
    NamedScatterStats averaged;
    averaged.name = mode + "/averaged_pairs";
    averaged.n = ms.n;
    if (ms.single_pair) {
      single.r_squared = ms.single_pair->r_squared;
      single.kendall_tau = ms.single_pair->kendall_tau;
    }
    if (ms.averaged) {
      averaged.r_squared = ms.averaged->r_squared;
      averaged.kendall_tau = ms.averaged->kendall_tau;
    }
    single.deviation_single = ms.deviation_single;
    averaged.deviation_averaged = ms.deviation_averaged;
    single.flag = ms.flag;
    averaged.flag = ms.flag;
    doc.scatter_stats.push_back(std::move(single));
    doc.scatter_stats.push_back(std::move(averaged));
  }

  if (options.members >= 2) {
    EnsembleOptions ens_options;
    ens_options.members = options.members;
    ens_options.n_bins = options.bins;
    ens_options.bootstrap_resamples = options.bootstrap;
    ens_options.threads = options.threads;
    const EnsembleSweepResult ens =
        EnsembleSweep(configs.front(), options.mode, ens_options, root.Derive(2));
    FillModelErrors(doc, ens.predictions, ens.labels);
    doc.disagreement = Summarize(PairwiseDisagreements(ens.predictions));
    doc.expected_test_error = ens.expected_test_error;
    doc.expected_disagreement = ens.expected_disagreement;
    doc.gde_gap = GdeGap(ens.expected_test_error, ens.expected_disagreement);
    doc.curves.push_back(ens.curve);
    doc.cace_exact = ens.cace_exact;
    doc.cace_binned = ens.cace_by_size.back().cace;
    doc.ece = ens.ece;
    doc.cace_by_size = ens.cace_by_size;
    doc.bootstrap_std["ensemble_test_error"] = ens.report.bootstrap_std_test;
    doc.bootstrap_std["ensemble_disagreement"] = ens.report.bootstrap_std_dis;
    unconverged += ens.warnings;
  }
  if (unconverged > 0) {
    doc.warnings.push_back("ConvergenceWarning: " + std::to_string(unconverged) +
                           " run(s) stopped below the interpolation threshold on their training set");
  }
  return doc;
}

ReportDocument RunReport(std::span<const std::string> paths) {
  if (paths.empty()) throw Error(Errc::kInvalidArgument, "no report inputs");
  std::vector<ReportDocument> docs;
  std::vector<InputDigest> digests;
  for (const std::string& path : paths) {
    const std::string text = ReadFile(path);
    digests.push_back({"report", DigestString(text), text.size()});
    docs.push_back(ParseReport(text));
  }
  ReportDocument merged = MergeReports(docs);
  merged.inputs.insert(merged.inputs.begin(), digests.begin(), digests.end());
  return merged;
}

std::string RenderReport(const ReportDocument& doc, OutputFormat format) {
  if (format == OutputFormat::kJson) return SerializeReport(doc);
  ValidateReport(doc);
  if (!doc.scatter_points.empty()) return ScatterCsv(doc.scatter_points);
  if (!doc.curves.empty()) return CurveCsv(doc.curves.front());
  throw Error(Errc::kSize, "report has no scatter or curve data for CSV export");
}

}  // namespace gdecal
