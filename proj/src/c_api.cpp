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

#include "gdecal/gdecal.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "gdecal/calibration.hpp"
#include "gdecal/commands.hpp"
#include "gdecal/io.hpp"
#include "gdecal/metrics.hpp"
#include "gdecal/theory.hpp"

struct gde_predictions {
  gdecal::PredictionMatrix value;
};
struct gde_labels {
  gdecal::LabelVector value;
};
struct gde_profile {
  gdecal::ProbabilityProfile value;
};
struct gde_population {
  gdecal::Population value;
};

namespace {

thread_local std::string last_error;

gde_status Fail(gde_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename Fn>
gde_status Guard(Fn&& fn) {
  try {
    fn();
    return GDE_OK;
  } catch (const gdecal::Error& e) {
    return Fail(static_cast<gde_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Fail(GDE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(GDE_ERR_INTERNAL, e.what());
  } catch (...) {
    return Fail(GDE_ERR_INTERNAL, "unknown error");
  }
}

void Require(bool ok, const char* what) {
  if (!ok) throw gdecal::Error(gdecal::Errc::kInvalidArgument, what);
}

std::optional<int> ClassCount(int n_classes) {
  if (n_classes <= 0) return std::nullopt;
  return n_classes;
}

gdecal::PredictionFormat Format(const char* format) {
  if (format == nullptr) return gdecal::PredictionFormat::kWideCsv;
  const auto f = gdecal::ParsePredictionFormat(format);
  if (!f) {
    throw gdecal::Error(gdecal::Errc::kInvalidArgument,
                        std::string("unknown prediction format '") + format + "'");
  }
  return *f;
}

gdecal::OutputFormat Output(gde_output_format output) {
  if (output == GDE_FORMAT_JSON) return gdecal::OutputFormat::kJson;
  if (output == GDE_FORMAT_CSV) return gdecal::OutputFormat::kCsv;
  throw gdecal::Error(gdecal::Errc::kInvalidArgument, "unknown output format");
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::optional<std::string> OptionalPath(const char* path) {
  if (path == nullptr) return std::nullopt;
  return std::string(path);
}

template <typename Handle, typename Make>
gde_status Create(Handle** out, Make&& make) {
  return Guard([&] {
    Require(out != nullptr, "null output handle");
    *out = nullptr;
    *out = new Handle{make()};
  });
}

template <typename Compute>
gde_status Scalar(double* out, Compute&& compute) {
  return Guard([&] {
    Require(out != nullptr, "null output pointer");
    *out = compute();
  });
}

}  // namespace

extern "C" {

const char* gde_version(void) { return "1.0.0"; }

const char* gde_status_name(gde_status status) {
  switch (status) {
    case GDE_OK: return "OK";
    case GDE_ERR_INTERNAL: return "InternalError";
    default: break;
  }
  if (status >= GDE_ERR_INVALID_ARGUMENT && status <= GDE_ERR_IO) {
    return gdecal::ErrcName(static_cast<gdecal::Errc>(status)).data();
  }
  return "UnknownStatus";
}

const char* gde_last_error_message(void) { return last_error.c_str(); }

void gde_string_free(char* s) { std::free(s); }

gde_status gde_predictions_load(const char* path, const char* format,
                                int n_classes, gde_predictions** out) {
  return Create(out, [&] {
    Require(path != nullptr, "null path");
    return gdecal::LoadPredictions(path, Format(format), ClassCount(n_classes));
  });
}

gde_status gde_predictions_shape(const gde_predictions* m, size_t* n_points,
                                 size_t* n_models, int* n_classes) {
  return Guard([&] {
    Require(m != nullptr, "null predictions");
    if (n_points != nullptr) *n_points = m->value.n_points();
    if (n_models != nullptr) *n_models = m->value.n_models();
    if (n_classes != nullptr) *n_classes = m->value.n_classes();
  });
}

void gde_predictions_free(gde_predictions* m) { delete m; }

gde_status gde_labels_load(const char* path, int n_classes, gde_labels** out) {
  return Create(out, [&] {
    Require(path != nullptr, "null path");
    return gdecal::LoadLabels(path, ClassCount(n_classes));
  });
}

void gde_labels_free(gde_labels* y) { delete y; }

gde_status gde_profile_load(const char* path, int n_classes, gde_profile** out) {
  return Create(out, [&] {
    Require(path != nullptr, "null path");
    return gdecal::LoadProbabilities(path, ClassCount(n_classes));
  });
}

gde_status gde_profile_from_predictions(const gde_predictions* m,
                                        gde_profile** out) {
  return Create(out, [&] {
    Require(m != nullptr, "null predictions");
    return gdecal::EnsembleFromPredictions(m->value);
  });
}

void gde_profile_free(gde_profile* p) { delete p; }

gde_status gde_population_load(const char* path, gde_population** out) {
  return Create(out, [&] {
    Require(path != nullptr, "null path");
    return gdecal::LoadPopulation(path);
  });
}

gde_status gde_population_counterexample(double eps1, double eps2,
                                         gde_population** out) {
  return Create(out, [&] { return gdecal::TwoAtomCounterexample(eps1, eps2); });
}

gde_status gde_population_from_profile(const gde_profile* p, const gde_labels* y,
                                       gde_population** out) {
  return Create(out, [&] {
    Require(p != nullptr && y != nullptr, "null profile or labels");
    return gdecal::Population::FromProfile(p->value, y->value);
  });
}

void gde_population_free(gde_population* pop) { delete pop; }

gde_status gde_test_error(const gde_predictions* m, const gde_labels* y,
                          size_t model, double* out) {
  return Scalar(out, [&] {
    Require(m != nullptr && y != nullptr, "null predictions or labels");
    return gdecal::TestError(m->value, y->value, model);
  });
}

gde_status gde_disagreement(const gde_predictions* m, size_t i, size_t j,
                            double* out) {
  return Scalar(out, [&] {
    Require(m != nullptr, "null predictions");
    return gdecal::Disagreement(m->value, i, j);
  });
}

gde_status gde_mean_pair_disagreement(const gde_predictions* m, double* out) {
  return Scalar(out, [&] {
    Require(m != nullptr, "null predictions");
    return gdecal::PairwiseDisagreements(m->value).mean_over_pairs;
  });
}

gde_status gde_expected_test_error(const gde_population* pop, double* out) {
  return Scalar(out, [&] {
    Require(pop != nullptr, "null population");
    return gdecal::ExpectedTestError(pop->value);
  });
}

gde_status gde_expected_disagreement(const gde_population* pop, double* out) {
  return Scalar(out, [&] {
    Require(pop != nullptr, "null population");
    return gdecal::ExpectedDisagreement(pop->value);
  });
}

gde_status gde_cace_exact(const gde_population* pop, double* out) {
  return Scalar(out, [&] {
    Require(pop != nullptr, "null population");
    return gdecal::CaceExact(pop->value);
  });
}

gde_status gde_cace_refined_exact(const gde_population* pop, double* out) {
  return Scalar(out, [&] {
    Require(pop != nullptr, "null population");
    return gdecal::CaceRefinedExact(pop->value);
  });
}

gde_status gde_cace_binned(const gde_population* pop, size_t bins, double* out) {
  return Scalar(out, [&] {
    Require(pop != nullptr, "null population");
    return gdecal::CaceBinned(pop->value, bins);
  });
}

gde_status gde_ece_binned(const gde_population* pop, size_t bins, double* out) {
  return Scalar(out, [&] {
    Require(pop != nullptr, "null population");
    return gdecal::EceBinned(pop->value, bins);
  });
}

gde_status gde_run_disagree(const char* predictions_path, const char* format,
                            const char* labels_path, uint64_t seed,
                            size_t bootstrap, gde_output_format output,
                            char** out) {
  return Guard([&] {
    Require(out != nullptr && predictions_path != nullptr, "null argument");
    *out = nullptr;
    gdecal::DisagreeOptions o;
    o.predictions_path = predictions_path;
    o.format = Format(format);
    o.labels_path = OptionalPath(labels_path);
    o.seed = seed;
    o.bootstrap = bootstrap;
    *out = CopyString(gdecal::RenderReport(gdecal::RunDisagree(o), Output(output)));
  });
}

gde_status gde_run_calibrate(const char* source, const char* input_path,
                             const char* format, const char* labels_path,
                             size_t bins, gde_output_format output, char** out) {
  return Guard([&] {
    Require(out != nullptr && source != nullptr && input_path != nullptr,
            "null argument");
    *out = nullptr;
    gdecal::CalibrateOptions o;
    const std::string s = source;
    if (s == "probs") {
      o.source = gdecal::CalibrationSource::kProbabilities;
    } else if (s == "preds") {
      o.source = gdecal::CalibrationSource::kPredictions;
    } else if (s == "population") {
      o.source = gdecal::CalibrationSource::kPopulation;
    } else {
      throw gdecal::Error(gdecal::Errc::kInvalidArgument,
                          "unknown calibration source '" + s + "'");
    }
    o.input_path = input_path;
    o.format = Format(format);
    o.labels_path = OptionalPath(labels_path);
    o.bins = bins;
    *out = CopyString(gdecal::RenderReport(gdecal::RunCalibrate(o), Output(output)));
  });
}

gde_status gde_run_verify_theory(uint64_t seed, size_t sweeps,
                                 gde_output_format output, char** out,
                                 int* all_passed) {
  return Guard([&] {
    Require(out != nullptr, "null argument");
    *out = nullptr;
    Require(sweeps >= 1, "sweeps must be >= 1");
    gdecal::TheorySuiteOptions o;
    o.seed = seed;
    o.sweeps = sweeps;
    const gdecal::ReportDocument doc = gdecal::RunVerifyTheory(o);
    if (all_passed != nullptr) *all_passed = gdecal::AllTheoryChecksPass(doc) ? 1 : 0;
    *out = CopyString(gdecal::RenderReport(doc, Output(output)));
  });
}

gde_status gde_run_simulate(const char* mode, uint64_t seed, size_t configs,
                            size_t pairs, size_t members, size_t bootstrap,
                            size_t bins, unsigned threads,
                            gde_output_format output, char** out) {
  return Guard([&] {
    Require(out != nullptr && mode != nullptr, "null argument");
    *out = nullptr;
    const auto parsed = gdecal::ParseMode(mode);
    if (!parsed) {
      throw gdecal::Error(gdecal::Errc::kInvalidArgument,
                          std::string("unknown mode '") + mode + "'");
    }
    gdecal::SimulateOptions o;
    o.mode = *parsed;
    o.seed = seed;
    o.configs = configs;
    o.pairs = pairs;
    o.members = members;
    o.bootstrap = bootstrap;
    o.bins = bins;
    o.threads = threads;
    *out = CopyString(gdecal::RenderReport(gdecal::RunSimulate(o), Output(output)));
  });
}

gde_status gde_run_report(const char* const* paths, size_t n_paths,
                          gde_output_format output, char** out) {
  return Guard([&] {
    Require(out != nullptr && (paths != nullptr || n_paths == 0), "null argument");
    *out = nullptr;
    std::vector<std::string> list;
    for (size_t i = 0; i < n_paths; ++i) {
      Require(paths[i] != nullptr, "null path");
      list.emplace_back(paths[i]);
    }
    *out = CopyString(gdecal::RenderReport(gdecal::RunReport(list), Output(output)));
  });
}

}  // extern "C"
