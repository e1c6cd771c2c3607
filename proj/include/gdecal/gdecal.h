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

/* C interface to libgdecal. Objects are opaque handles released with the
 * matching *_free function. Every fallible call returns a gde_status; on
 * failure gde_last_error_message() describes the problem (per thread, valid
 * until the next failing call on that thread). Strings returned through
 * char** are heap-allocated and released with gde_string_free. */

#ifndef GDECAL_GDECAL_H_
#define GDECAL_GDECAL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GDECAL_BUILDING_LIBRARY)
#    define GDE_API __declspec(dllexport)
#  else
#    define GDE_API __declspec(dllimport)
#  endif
#else
#  define GDE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gde_status {
  GDE_OK = 0,
  GDE_ERR_INVALID_ARGUMENT = 1,
  GDE_ERR_NORMALIZATION = 2,
  GDE_ERR_RANGE = 3,
  GDE_ERR_ALIGNMENT = 4,
  GDE_ERR_INDEX = 5,
  GDE_ERR_SIZE = 6,
  GDE_ERR_DEGENERATE = 7,
  GDE_ERR_PARSE = 8,
  GDE_ERR_DUPLICATE_ID = 9,
  GDE_ERR_CLASS_RANGE = 10,
  GDE_ERR_SCHEMA = 11,
  GDE_ERR_CONSTRAINT = 12,
  GDE_ERR_CONSTRUCTION = 13,
  GDE_ERR_KAPPA_RANGE = 14,
  GDE_ERR_IO = 15,
  GDE_ERR_INTERNAL = 99
} gde_status;

typedef enum gde_output_format {
  GDE_FORMAT_JSON = 0,
  GDE_FORMAT_CSV = 1
} gde_output_format;

typedef struct gde_predictions gde_predictions;
typedef struct gde_labels gde_labels;
typedef struct gde_profile gde_profile;
typedef struct gde_population gde_population;

GDE_API const char* gde_version(void);
GDE_API const char* gde_status_name(gde_status status);
GDE_API const char* gde_last_error_message(void);
GDE_API void gde_string_free(char* s);

/* n_classes <= 0 infers K from the data. format is "wide-csv" or
 * "long-csv". */
GDE_API gde_status gde_predictions_load(const char* path, const char* format,
                                        int n_classes, gde_predictions** out);
GDE_API gde_status gde_predictions_shape(const gde_predictions* m,
                                         size_t* n_points, size_t* n_models,
                                         int* n_classes);
GDE_API void gde_predictions_free(gde_predictions* m);

GDE_API gde_status gde_labels_load(const char* path, int n_classes,
                                   gde_labels** out);
GDE_API void gde_labels_free(gde_labels* y);

GDE_API gde_status gde_profile_load(const char* path, int n_classes,
                                    gde_profile** out);
GDE_API gde_status gde_profile_from_predictions(const gde_predictions* m,
                                                gde_profile** out);
GDE_API void gde_profile_free(gde_profile* p);

GDE_API gde_status gde_population_load(const char* path, gde_population** out);
/* Two-atom binary population calibrated only when eps1 = 0.1, eps2 = 0.2. */
GDE_API gde_status gde_population_counterexample(double eps1, double eps2,
                                                 gde_population** out);
GDE_API gde_status gde_population_from_profile(const gde_profile* p,
                                               const gde_labels* y,
                                               gde_population** out);
GDE_API void gde_population_free(gde_population* pop);

GDE_API gde_status gde_test_error(const gde_predictions* m, const gde_labels* y,
                                  size_t model, double* out);
GDE_API gde_status gde_disagreement(const gde_predictions* m, size_t i,
                                    size_t j, double* out);
GDE_API gde_status gde_mean_pair_disagreement(const gde_predictions* m,
                                              double* out);

GDE_API gde_status gde_expected_test_error(const gde_population* pop,
                                           double* out);
GDE_API gde_status gde_expected_disagreement(const gde_population* pop,
                                             double* out);
GDE_API gde_status gde_cace_exact(const gde_population* pop, double* out);
GDE_API gde_status gde_cace_refined_exact(const gde_population* pop,
                                          double* out);
GDE_API gde_status gde_cace_binned(const gde_population* pop, size_t bins,
                                   double* out);
GDE_API gde_status gde_ece_binned(const gde_population* pop, size_t bins,
                                  double* out);

/* Subcommand drivers. Each writes a report (JSON) or plot-data CSV to *out.
 * Optional string arguments may be NULL. */
GDE_API gde_status gde_run_disagree(const char* predictions_path,
                                    const char* format, const char* labels_path,
                                    uint64_t seed, size_t bootstrap,
                                    gde_output_format output, char** out);

/* source is "probs", "preds" or "population". */
GDE_API gde_status gde_run_calibrate(const char* source, const char* input_path,
                                     const char* format, const char* labels_path,
                                     size_t bins, gde_output_format output,
                                     char** out);

/* *all_passed is set to 1 when every theory check passes, 0 otherwise. */
GDE_API gde_status gde_run_verify_theory(uint64_t seed, size_t sweeps,
                                         gde_output_format output, char** out,
                                         int* all_passed);

/* mode is one of alldiff, diffdata, diffinit, difforder, samedata.
 * members < 2 skips the ensemble run; threads == 0 uses every core. */
GDE_API gde_status gde_run_simulate(const char* mode, uint64_t seed,
                                    size_t configs, size_t pairs,
                                    size_t members, size_t bootstrap,
                                    size_t bins, unsigned threads,
                                    gde_output_format output, char** out);

GDE_API gde_status gde_run_report(const char* const* paths, size_t n_paths,
                                  gde_output_format output, char** out);

#ifdef __cplusplus
}
#endif

#endif /* GDECAL_GDECAL_H_ */
