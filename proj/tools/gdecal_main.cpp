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

// gdecal command-line tool. Exit status: 0 success, 1 usage or validation
// error, 2 a theory check failed.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gdecal/gdecal.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitTheory = 2;

struct Common {
  std::string format = "json";
  std::string out;
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  cmd->add_option("--out", c.out, "Write output to PATH instead of stdout");
}

gde_output_format OutputFormat(const Common& c) {
  return c.format == "csv" ? GDE_FORMAT_CSV : GDE_FORMAT_JSON;
}

const char* OrNull(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

// Emits a successful result or reports the failure; returns the exit code.
int Finish(gde_status status, char* text, const Common& c) {
  if (status != GDE_OK) {
    std::cerr << "gdecal: " << gde_last_error_message() << "\n";
    gde_string_free(text);
    return kExitValidation;
  }
  int code = kExitOk;
  if (c.out.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    std::ofstream f(c.out, std::ios::binary | std::ios::trunc);
    f << text;
    f.close();
    if (!f) {
      std::cerr << "gdecal: IoError: cannot write '" << c.out << "'\n";
      code = kExitValidation;
    }
  }
  gde_string_free(text);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disagreement, calibration and generalization diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gde_version()));

  Common disagree_c;
  std::string preds, pred_format = "wide-csv", labels;
  std::uint64_t seed = 0;
  std::size_t bootstrap = 1000;
  auto* disagree = app.add_subcommand("disagree", "Pairwise disagreement of model predictions");
  disagree->add_option("--preds", preds, "Prediction CSV")->required();
  disagree->add_option("--pred-format", pred_format, "wide-csv or long-csv")
      ->check(CLI::IsMember({"wide-csv", "long-csv"}))
      ->capture_default_str();
  disagree->add_option("--labels", labels, "Label CSV (point_id,label)");
  disagree->add_option("--seed", seed, "Bootstrap seed")->capture_default_str();
  disagree->add_option("--bootstrap", bootstrap, "Bootstrap resamples")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}))
      ->capture_default_str();
  AddCommon(disagree, disagree_c);

  Common calibrate_c;
  std::string probs, cal_preds, population, cal_labels, cal_pred_format = "wide-csv";
  std::size_t bins = 10;
  auto* calibrate = app.add_subcommand("calibrate", "Calibration curves, CACE and ECE");
  auto* probs_opt = calibrate->add_option("--probs", probs, "Probability CSV (point_id,class,prob)");
  auto* preds_opt = calibrate->add_option("--preds", cal_preds, "Prediction CSV of an ensemble");
  auto* pop_opt = calibrate->add_option("--population", population, "Population JSON");
  probs_opt->excludes(preds_opt)->excludes(pop_opt);
  preds_opt->excludes(pop_opt);
  calibrate->add_option("--pred-format", cal_pred_format, "wide-csv or long-csv")
      ->check(CLI::IsMember({"wide-csv", "long-csv"}))
      ->capture_default_str();
  calibrate->add_option("--labels", cal_labels, "Label CSV (point_id,label)");
  calibrate->add_option("--bins", bins, "Equal-width confidence bins")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000}))
      ->capture_default_str();
  AddCommon(calibrate, calibrate_c);

  Common theory_c;
  std::uint64_t theory_seed = 0;
  std::size_t sweeps = 1000;
  auto* theory = app.add_subcommand("verify-theory", "Run the constructive theory checks");
  theory->add_option("--seed", theory_seed, "Suite seed")->capture_default_str();
  theory->add_option("--sweeps", sweeps, "Random populations per check")
      ->check(CLI::Range(std::size_t{1}, std::size_t{10000000}))
      ->capture_default_str();
  AddCommon(theory, theory_c);

  Common simulate_c;
  std::string mode;
  std::uint64_t sim_seed = 0;
  std::size_t configs = 20, pairs = 4, members = 20, sim_bootstrap = 1000, sim_bins = 10;
  unsigned threads = 0;
  auto* simulate = app.add_subcommand("simulate", "Train desk-scale learners and sweep");
  simulate->add_option("--mode", mode, "Stochasticity mode")
      ->required()
      ->check(CLI::IsMember({"alldiff", "diffdata", "diffinit", "difforder", "samedata"},
                            CLI::ignore_case));
  simulate->add_option("--seed", sim_seed, "Seed")->capture_default_str();
  simulate->add_option("--configs", configs, "Hyperparameter configurations")
      ->check(CLI::Range(std::size_t{1}, std::size_t{162}))
      ->capture_default_str();
  simulate->add_option("--pairs", pairs, "Independent pairs per configuration")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000}))
      ->capture_default_str();
  simulate->add_option("--members", members, "Ensemble size (0 skips the ensemble)")
      ->capture_default_str();
  simulate->add_option("--bootstrap", sim_bootstrap, "Bootstrap resamples")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}))
      ->capture_default_str();
  simulate->add_option("--bins", sim_bins, "Equal-width confidence bins")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000}))
      ->capture_default_str();
  simulate->add_option("--threads", threads, "Worker threads (0: all cores)")
      ->capture_default_str();
  AddCommon(simulate, simulate_c);

  Common report_c;
  std::vector<std::string> inputs;
  auto* report = app.add_subcommand("report", "Merge report JSON files");
  report->add_option("--in", inputs, "Report JSON files")->required()->expected(1, -1);
  AddCommon(report, report_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  char* text = nullptr;
  if (disagree->parsed()) {
    const gde_status s = gde_run_disagree(preds.c_str(), pred_format.c_str(),
                                          OrNull(labels), seed, bootstrap,
                                          OutputFormat(disagree_c), &text);
    return Finish(s, text, disagree_c);
  }
  if (calibrate->parsed()) {
    const char* source = nullptr;
    const char* input = nullptr;
    if (!probs.empty()) {
      source = "probs";
      input = probs.c_str();
    } else if (!cal_preds.empty()) {
      source = "preds";
      input = cal_preds.c_str();
    } else if (!population.empty()) {
      source = "population";
      input = population.c_str();
    } else {
      std::cerr << "gdecal: calibrate needs one of --probs, --preds, --population\n";
      return kExitValidation;
    }
    const gde_status s =
        gde_run_calibrate(source, input, cal_pred_format.c_str(), OrNull(cal_labels),
                          bins, OutputFormat(calibrate_c), &text);
    return Finish(s, text, calibrate_c);
  }
  if (theory->parsed()) {
    int all_passed = 0;
    const gde_status s = gde_run_verify_theory(theory_seed, sweeps,
                                               OutputFormat(theory_c), &text, &all_passed);
    if (s != GDE_OK) return Finish(s, text, theory_c);
    const int code = Finish(s, text, theory_c);
    if (code != kExitOk) return code;
    return all_passed ? kExitOk : kExitTheory;
  }
  if (simulate->parsed()) {
    const gde_status s =
        gde_run_simulate(mode.c_str(), sim_seed, configs, pairs, members, sim_bootstrap,
                         sim_bins, threads, OutputFormat(simulate_c), &text);
    return Finish(s, text, simulate_c);
  }
  std::vector<const char*> paths;
  for (const std::string& p : inputs) paths.push_back(p.c_str());
  const gde_status s =
      gde_run_report(paths.data(), paths.size(), OutputFormat(report_c), &text);
  return Finish(s, text, report_c);
}
