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

#include "gdecal/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "json.hpp"

namespace gdecal {

namespace {

using Json = nlohmann::ordered_json;

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Plain comma-separated rows; blank lines are skipped.
std::vector<CsvRow> SplitCsv(std::string_view text) {
  std::vector<CsvRow> rows;
  std::size_t line = 0;
  while (!text.empty()) {
    ++line;
    const std::size_t nl = text.find('\n');
    std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    if (Trim(raw).empty()) continue;
    CsvRow row;
    row.line = line;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = raw.find(',', start);
      row.fields.emplace_back(Trim(raw.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string At(std::size_t line) { return "line " + std::to_string(line) + ": "; }

const std::vector<CsvRow>& RequireRows(const std::vector<CsvRow>& rows) {
  if (rows.empty()) throw Error(Errc::kParse, "empty file (no header)");
  return rows;
}

void ExpectHeader(const CsvRow& header, const std::vector<std::string>& names) {
  if (header.fields != names) {
    std::string want;
    for (const auto& n : names) want += (want.empty() ? "" : ",") + n;
    throw Error(Errc::kParse, At(header.line) + "expected header '" + want + "'");
  }
}

void ExpectWidth(const CsvRow& row, std::size_t width) {
  if (row.fields.size() != width) {
    throw Error(Errc::kParse, At(row.line) + "expected " + std::to_string(width) +
                                  " fields, found " +
                                  std::to_string(row.fields.size()));
  }
}

long long ParseInteger(const std::string& field, std::size_t line,
                       std::string_view what) {
  long long v = 0;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw Error(Errc::kParse, At(line) + "invalid " + std::string(what) + " '" +
                                  field + "'");
  }
  return v;
}

double ParseNumber(const std::string& field, std::size_t line,
                   std::string_view what) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw Error(Errc::kParse, At(line) + "invalid " + std::string(what) + " '" +
                                  field + "'");
  }
  return v;
}

int ParseClass(const std::string& field, std::size_t line,
               std::optional<int> n_classes) {
  const long long v = ParseInteger(field, line, "class");
  if (v < 0 || v > std::numeric_limits<int>::max() ||
      (n_classes && v >= *n_classes)) {
    throw Error(Errc::kClassRange, At(line) + "class " + field + " out of range");
  }
  return static_cast<int>(v);
}

void RequireId(const CsvRow& row) {
  if (row.fields[0].empty()) throw Error(Errc::kParse, At(row.line) + "empty point_id");
}

std::size_t ParseModelId(const std::string& field, std::size_t line) {
  std::string digits = field;
  if (digits.rfind("model_", 0) == 0) digits = digits.substr(6);
  const long long v = ParseInteger(digits, line, "model_id");
  if (v < 0) throw Error(Errc::kParse, At(line) + "negative model_id");
  return static_cast<std::size_t>(v);
}

std::string MissingCell(const std::string& point, std::size_t model) {
  return "missing prediction for (point '" + point + "', model_" +
         std::to_string(model) + ")";
}

PredictionMatrix ParseWide(const std::vector<CsvRow>& rows,
                           std::optional<int> n_classes) {
  const CsvRow& header = rows.front();
  if (header.fields.empty() || header.fields[0] != "point_id") {
    throw Error(Errc::kParse, At(header.line) + "first column must be 'point_id'");
  }
  const std::size_t m = header.fields.size() - 1;
  if (m == 0) throw Error(Errc::kParse, At(header.line) + "no model columns");
  for (std::size_t j = 0; j < m; ++j) {
    const std::string want = "model_" + std::to_string(j);
    if (header.fields[j + 1] != want) {
      throw Error(Errc::kParse, At(header.line) + "expected column '" + want +
                                    "', found '" + header.fields[j + 1] +
                                    "' (model columns must be contiguous)");
    }
  }
  std::vector<std::string> ids;
  std::vector<int> classes;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    ExpectWidth(row, m + 1);
    RequireId(row);
    if (!seen.emplace(row.fields[0], row.line).second) {
      throw Error(Errc::kDuplicateId, At(row.line) + "duplicate point_id '" +
                                          row.fields[0] + "'");
    }
    ids.push_back(row.fields[0]);
    for (std::size_t j = 0; j < m; ++j) {
      const std::string& cell = row.fields[j + 1];
      if (cell.empty()) {
        throw Error(Errc::kParse, At(row.line) + MissingCell(row.fields[0], j));
      }
      classes.push_back(ParseClass(cell, row.line, n_classes));
    }
  }
  if (ids.empty()) throw Error(Errc::kParse, "no prediction rows");
  return PredictionMatrix(std::move(ids), m, std::move(classes), n_classes);
}

PredictionMatrix ParseLong(const std::vector<CsvRow>& rows,
                           std::optional<int> n_classes) {
  ExpectHeader(rows.front(), {"point_id", "model_id", "class"});
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> index;
  std::map<std::pair<std::size_t, std::size_t>, int> cells;
  std::size_t m = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    ExpectWidth(row, 3);
    RequireId(row);
    const std::size_t model = ParseModelId(row.fields[1], row.line);
    const int cls = ParseClass(row.fields[2], row.line, n_classes);
    const auto [it, fresh] = index.emplace(row.fields[0], ids.size());
    if (fresh) ids.push_back(row.fields[0]);
    if (!cells.emplace(std::make_pair(it->second, model), cls).second) {
      throw Error(Errc::kDuplicateId, At(row.line) + "duplicate cell (point '" +
                                          row.fields[0] + "', model_" +
                                          std::to_string(model) + ")");
    }
    m = std::max(m, model + 1);
  }
  if (ids.empty()) throw Error(Errc::kParse, "no prediction rows");
  std::vector<int> classes(ids.size() * m);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto it = cells.find({i, j});
      if (it == cells.end()) throw Error(Errc::kParse, MissingCell(ids[i], j));
      classes[i * m + j] = it->second;
    }
  }
  return PredictionMatrix(std::move(ids), m, std::move(classes), n_classes);
}

std::string FormatNumber(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json CurveToJson(const CalibrationCurve& c) {
  Json bins = Json::array();
  for (const ConfidenceBin& b : c.bins) {
    bins.push_back({{"lower", b.lower},
                    {"upper", b.upper},
                    {"mass", b.mass},
                    {"hits", b.hits},
                    {"mean_confidence", b.mean_confidence},
                    {"accuracy", b.accuracy()}});
  }
  Json j = {{"kind", std::string(CurveKindName(c.kind))}};
  if (c.class_index >= 0) j["class_index"] = c.class_index;
  j["bins"] = std::move(bins);
  return j;
}

CurveKind ParseCurveKind(const std::string& name) {
  for (CurveKind k : {CurveKind::kClassAggregated, CurveKind::kClassWise,
                      CurveKind::kTopClass}) {
    if (CurveKindName(k) == name) return k;
  }
  throw Error(Errc::kSchema, "unknown curve kind '" + name + "'");
}

CalibrationCurve CurveFromJson(const Json& j) {
  CalibrationCurve c;
  c.kind = ParseCurveKind(j.at("kind").get<std::string>());
  c.class_index = j.value("class_index", -1);
  for (const Json& b : j.at("bins")) {
    ConfidenceBin bin;
    bin.lower = b.at("lower").get<double>();
    bin.upper = b.at("upper").get<double>();
    bin.mass = b.at("mass").get<double>();
    bin.hits = b.at("hits").get<double>();
    bin.mean_confidence = b.at("mean_confidence").get<double>();
    c.bins.push_back(bin);
  }
  return c;
}

template <typename T>
void PutOptional(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void GetOptional(const Json& j, const char* key, std::optional<T>& v) {
  if (j.contains(key)) v = j.at(key).get<T>();
}

Json ReportToJson(const ReportDocument& d) {
  Json j;
  j["schema_version"] = d.schema_version;
  j["command"] = d.command;
  PutOptional(j, "n_classes", d.n_classes);
  Json inputs = Json::array();
  for (const InputDigest& in : d.inputs) {
    inputs.push_back({{"role", in.role}, {"digest", in.digest}, {"bytes", in.bytes}});
  }
  j["inputs"] = std::move(inputs);
  j["model_test_errors"] = d.model_test_errors;
  if (d.disagreement) {
    j["disagreement"] = {{"n_models", d.disagreement->n_models},
                         {"mean", d.disagreement->mean},
                         {"min", d.disagreement->min},
                         {"max", d.disagreement->max},
                         {"matrix", d.disagreement->matrix}};
  }
  PutOptional(j, "expected_test_error", d.expected_test_error);
  PutOptional(j, "expected_disagreement", d.expected_disagreement);
  PutOptional(j, "gde_gap", d.gde_gap);
  Json curves = Json::array();
  for (const CalibrationCurve& c : d.curves) curves.push_back(CurveToJson(c));
  j["curves"] = std::move(curves);
  PutOptional(j, "cace_exact", d.cace_exact);
  PutOptional(j, "cace_refined_exact", d.cace_refined_exact);
  PutOptional(j, "cace_binned", d.cace_binned);
  PutOptional(j, "cace_refined_binned", d.cace_refined_binned);
  PutOptional(j, "ece", d.ece);
  Json sizes = Json::array();
  for (const EnsembleSize& s : d.cace_by_size) {
    sizes.push_back({{"members", s.members}, {"cace", s.cace}});
  }
  j["cace_by_size"] = std::move(sizes);
  Json boot = Json::object();
  for (const auto& [k, v] : d.bootstrap_std) boot[k] = v;
  j["bootstrap_std"] = std::move(boot);
  Json stats = Json::array();
  for (const NamedScatterStats& s : d.scatter_stats) {
    Json e = {{"name", s.name}, {"n", s.n}};
    PutOptional(e, "r_squared", s.r_squared);
    PutOptional(e, "kendall_tau", s.kendall_tau);
    PutOptional(e, "deviation_single", s.deviation_single);
    PutOptional(e, "deviation_averaged", s.deviation_averaged);
    if (!s.flag.empty()) e["flag"] = s.flag;
    stats.push_back(std::move(e));
  }
  j["scatter_stats"] = std::move(stats);
  Json points = Json::array();
  for (const ScatterPoint& p : d.scatter_points) {
    points.push_back({{"x", p.x},
                      {"y", p.y},
                      {"group", p.group},
                      {"bootstrap_std", p.bootstrap_std}});
  }
  j["scatter_points"] = std::move(points);
  Json theory = Json::array();
  for (const TheoryResult& t : d.theory) {
    theory.push_back({{"name", t.name},
                      {"status", t.pass ? "pass" : "fail"},
                      {"cases", t.cases},
                      {"violations", t.violations},
                      {"worst", t.worst},
                      {"detail", t.detail}});
  }
  j["theory"] = std::move(theory);
  j["warnings"] = d.warnings;
  return j;
}

ReportDocument ReportFromJson(const Json& j) {
  ReportDocument d;
  d.schema_version = j.at("schema_version").get<std::string>();
  d.command = j.value("command", std::string());
  GetOptional(j, "n_classes", d.n_classes);
  for (const Json& in : j.value("inputs", Json::array())) {
    d.inputs.push_back({in.at("role").get<std::string>(),
                        in.at("digest").get<std::string>(),
                        in.at("bytes").get<std::size_t>()});
  }
  d.model_test_errors =
      j.value("model_test_errors", std::vector<double>());
  if (j.contains("disagreement")) {
    const Json& s = j.at("disagreement");
    d.disagreement = DisagreementSummary{
        s.at("n_models").get<std::size_t>(), s.at("mean").get<double>(),
        s.at("min").get<double>(), s.at("max").get<double>(),
        s.at("matrix").get<std::vector<std::vector<double>>>()};
  }
  GetOptional(j, "expected_test_error", d.expected_test_error);
  GetOptional(j, "expected_disagreement", d.expected_disagreement);
  GetOptional(j, "gde_gap", d.gde_gap);
  for (const Json& c : j.value("curves", Json::array())) {
    d.curves.push_back(CurveFromJson(c));
  }
  GetOptional(j, "cace_exact", d.cace_exact);
  GetOptional(j, "cace_refined_exact", d.cace_refined_exact);
  GetOptional(j, "cace_binned", d.cace_binned);
  GetOptional(j, "cace_refined_binned", d.cace_refined_binned);
  GetOptional(j, "ece", d.ece);
  for (const Json& s : j.value("cace_by_size", Json::array())) {
    d.cace_by_size.push_back(
        {s.at("members").get<std::size_t>(), s.at("cace").get<double>()});
  }
  const Json stds = j.value("bootstrap_std", Json::object());
  for (const auto& [k, v] : stds.items()) {
    d.bootstrap_std[k] = v.get<double>();
  }
  for (const Json& e : j.value("scatter_stats", Json::array())) {
    NamedScatterStats s;
    s.name = e.at("name").get<std::string>();
    s.n = e.at("n").get<std::size_t>();
    GetOptional(e, "r_squared", s.r_squared);
    GetOptional(e, "kendall_tau", s.kendall_tau);
    GetOptional(e, "deviation_single", s.deviation_single);
    GetOptional(e, "deviation_averaged", s.deviation_averaged);
    s.flag = e.value("flag", std::string());
    d.scatter_stats.push_back(std::move(s));
  }
  for (const Json& p : j.value("scatter_points", Json::array())) {
    d.scatter_points.push_back({p.at("x").get<double>(), p.at("y").get<double>(),
                                p.at("group").get<std::string>(),
                                p.at("bootstrap_std").get<double>()});
  }
  for (const Json& t : j.value("theory", Json::array())) {
    TheoryResult r;
    r.name = t.at("name").get<std::string>();
    const std::string status = t.at("status").get<std::string>();
    if (status != "pass" && status != "fail") {
      throw Error(Errc::kSchema, "theory status must be pass or fail");
    }
    r.pass = status == "pass";
    r.cases = t.at("cases").get<std::size_t>();
    r.violations = t.at("violations").get<std::size_t>();
    r.worst = t.at("worst").get<double>();
    r.detail = t.value("detail", std::string());
    d.theory.push_back(std::move(r));
  }
  d.warnings = j.value("warnings", std::vector<std::string>());
  return d;
}

void CheckIn(double v, double lo, double hi, const std::string& what) {
  constexpr double kSlack = 1e-12;
  if (!(v >= lo - kSlack && v <= hi + kSlack)) {
    throw Error(Errc::kSchema, what + " = " + FormatNumber(v) + " outside [" +
                                   FormatNumber(lo) + ", " + FormatNumber(hi) +
                                   "]");
  }
}

void CheckRate(const std::optional<double>& v, const std::string& what) {
  if (v) CheckIn(*v, 0.0, 1.0, what);
}

std::vector<double> ParseRowNumbers(const CsvRow& row, std::size_t first,
                                    std::size_t count) {
  std::vector<double> out;
  for (std::size_t i = first; i < first + count; ++i) {
    out.push_back(ParseNumber(row.fields[i], row.line, "number"));
  }
  return out;
}

}  // namespace

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(Errc::kIo, "read failed for '" + path + "'");
  return buf.str();
}

void WriteFile(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw Error(Errc::kIo, "write failed for '" + path + "'");
}

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string DigestString(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(Fnv1a64(bytes)));
  return buf;
}

std::optional<PredictionFormat> ParsePredictionFormat(std::string_view name) {
  if (name == "wide-csv") return PredictionFormat::kWideCsv;
  if (name == "long-csv") return PredictionFormat::kLongCsv;
  return std::nullopt;
}

PredictionMatrix ParsePredictions(std::string_view text, PredictionFormat format,
                                  std::optional<int> n_classes) {
  const auto rows = SplitCsv(text);
  RequireRows(rows);
  return format == PredictionFormat::kWideCsv ? ParseWide(rows, n_classes)
                                              : ParseLong(rows, n_classes);
}

PredictionMatrix LoadPredictions(const std::string& path, PredictionFormat format,
                                 std::optional<int> n_classes) {
  return ParsePredictions(ReadFile(path), format, n_classes);
}

LabelVector ParseLabels(std::string_view text, std::optional<int> n_classes) {
  const auto rows = SplitCsv(text);
  ExpectHeader(RequireRows(rows).front(), {"point_id", "label"});
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    ExpectWidth(row, 2);
    RequireId(row);
    if (!seen.emplace(row.fields[0], row.line).second) {
      throw Error(Errc::kDuplicateId, At(row.line) + "duplicate point_id '" +
                                          row.fields[0] + "'");
    }
    ids.push_back(row.fields[0]);
    labels.push_back(ParseClass(row.fields[1], row.line, n_classes));
  }
  if (ids.empty()) throw Error(Errc::kParse, "no label rows");
  return LabelVector(std::move(ids), std::move(labels), n_classes);
}

LabelVector LoadLabels(const std::string& path, std::optional<int> n_classes) {
  return ParseLabels(ReadFile(path), n_classes);
}

ProbabilityProfile ParseProbabilities(std::string_view text,
                                      std::optional<int> n_classes, double tol) {
  const auto rows = SplitCsv(text);
  ExpectHeader(RequireRows(rows).front(), {"point_id", "class", "prob"});
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> index;
  std::map<std::pair<std::size_t, int>, double> cells;
  int k = n_classes.value_or(2);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    ExpectWidth(row, 3);
    RequireId(row);
    const int cls = ParseClass(row.fields[1], row.line, n_classes);
    const double p = ParseNumber(row.fields[2], row.line, "prob");
    const auto [it, fresh] = index.emplace(row.fields[0], ids.size());
    if (fresh) ids.push_back(row.fields[0]);
    if (!cells.emplace(std::make_pair(it->second, cls), p).second) {
      throw Error(Errc::kDuplicateId, At(row.line) + "duplicate entry (point '" +
                                          row.fields[0] + "', class " +
                                          row.fields[1] + ")");
    }
    if (!n_classes) k = std::max(k, cls + 1);
  }
  if (ids.empty()) throw Error(Errc::kParse, "no probability rows");
  std::vector<double> probs(ids.size() * static_cast<std::size_t>(k), 0.0);
  for (const auto& [key, p] : cells) {
    probs[key.first * static_cast<std::size_t>(k) +
          static_cast<std::size_t>(key.second)] = p;
  }
  return ProbabilityProfile(std::move(ids), k, std::move(probs), tol);
}

ProbabilityProfile LoadProbabilities(const std::string& path,
                                     std::optional<int> n_classes, double tol) {
  return ParseProbabilities(ReadFile(path), n_classes, tol);
}

Population ParsePopulation(std::string_view json_text, double tol) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::kParse, std::string("population JSON: ") + e.what());
  }
  std::vector<Atom> atoms;
  try {
    if (!j.is_object() || !j.contains("atoms") || !j.at("atoms").is_array()) {
      throw Error(Errc::kSchema, "population JSON needs an 'atoms' array");
    }
    if (j.contains("schema_version") &&
        j.at("schema_version").get<std::string>() != kSchemaVersion) {
      throw Error(Errc::kSchema, "unsupported schema_version");
    }
    for (const Json& a : j.at("atoms")) {
      Atom atom;
      atom.weight = a.at("w").get<double>();
      atom.hhat = a.at("hhat").get<std::vector<double>>();
      atom.label_dist = a.at("label_dist").get<std::vector<double>>();
      atoms.push_back(std::move(atom));
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::kSchema, std::string("population JSON: ") + e.what());
  }
  return Population(std::move(atoms), tol);
}

Population LoadPopulation(const std::string& path, double tol) {
  return ParsePopulation(ReadFile(path), tol);
}

std::string PopulationToJson(const Population& pop) {
  Json atoms = Json::array();
  for (const Atom& a : pop.atoms()) {
    atoms.push_back({{"w", a.weight}, {"hhat", a.hhat}, {"label_dist", a.label_dist}});
  }
  Json j = {{"schema_version", kSchemaVersion}, {"atoms", std::move(atoms)}};
  return j.dump(2) + "\n";
}

void ValidateReport(const ReportDocument& d) {
  if (d.schema_version != kSchemaVersion) {
    throw Error(Errc::kSchema, "unsupported schema_version '" +
                                   d.schema_version + "'");
  }
  const double k_max = d.n_classes ? static_cast<double>(*d.n_classes)
                                   : std::numeric_limits<double>::infinity();
  if (d.n_classes && *d.n_classes < 2) throw Error(Errc::kSchema, "n_classes < 2");
  for (std::size_t i = 0; i < d.model_test_errors.size(); ++i) {
    CheckIn(d.model_test_errors[i], 0.0, 1.0,
            "model_test_errors[" + std::to_string(i) + "]");
  }
  if (d.disagreement) {
    CheckIn(d.disagreement->mean, 0.0, 1.0, "disagreement.mean");
    CheckIn(d.disagreement->min, 0.0, 1.0, "disagreement.min");
    CheckIn(d.disagreement->max, 0.0, 1.0, "disagreement.max");
    for (const auto& row : d.disagreement->matrix) {
      for (double v : row) CheckIn(v, 0.0, 1.0, "disagreement.matrix");
    }
  }
  CheckRate(d.expected_test_error, "expected_test_error");
  CheckRate(d.expected_disagreement, "expected_disagreement");
  CheckRate(d.gde_gap, "gde_gap");
  CheckRate(d.ece, "ece");
  for (const auto& [name, v] : {std::pair{"cace_exact", d.cace_exact},
                                {"cace_refined_exact", d.cace_refined_exact},
                                {"cace_binned", d.cace_binned},
                                {"cace_refined_binned", d.cace_refined_binned}}) {
    if (v) CheckIn(*v, 0.0, k_max, name);
  }
  for (const EnsembleSize& s : d.cace_by_size) {
    CheckIn(s.cace, 0.0, k_max, "cace_by_size");
  }
  for (const CalibrationCurve& c : d.curves) {
    for (const ConfidenceBin& b : c.bins) {
      CheckIn(b.lower, 0.0, 1.0, "bin.lower");
      CheckIn(b.upper, 0.0, 1.0, "bin.upper");
      CheckIn(b.mean_confidence, 0.0, 1.0, "bin.mean_confidence");
      CheckIn(b.mass, 0.0, k_max, "bin.mass");
      CheckIn(b.accuracy(), 0.0, 1.0, "bin.accuracy");
    }
  }
  for (const auto& [name, v] : d.bootstrap_std) {
    CheckIn(v, 0.0, std::numeric_limits<double>::max(), "bootstrap_std." + name);
  }
  for (const ScatterPoint& p : d.scatter_points) {
    CheckIn(p.x, 0.0, 1.0, "scatter x");
    CheckIn(p.y, 0.0, 1.0, "scatter y");
  }
}

std::string SerializeReport(const ReportDocument& doc) {
  ValidateReport(doc);
  return ReportToJson(doc).dump(2) + "\n";
}

ReportDocument ParseReport(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::kParse, std::string("report JSON: ") + e.what());
  }
  ReportDocument d;
  try {
    if (!j.is_object()) throw Error(Errc::kSchema, "report must be a JSON object");
    d = ReportFromJson(j);
  } catch (const Json::exception& e) {
    throw Error(Errc::kSchema, std::string("report JSON: ") + e.what());
  }
  ValidateReport(d);
  return d;
}

ReportDocument MergeReports(std::span<const ReportDocument> docs) {
  if (docs.empty()) throw Error(Errc::kSize, "nothing to merge");
  ReportDocument out;
  out.command = "report";
  auto take = [](auto& dst, const auto& src) {
    if (src) dst = src;
  };
  auto append = [](auto& dst, const auto& src) {
    dst.insert(dst.end(), src.begin(), src.end());
  };
  for (const ReportDocument& d : docs) {
    ValidateReport(d);
    if (d.n_classes) {
      out.n_classes = std::max(out.n_classes.value_or(0), *d.n_classes);
    }
    append(out.inputs, d.inputs);
    append(out.model_test_errors, d.model_test_errors);
    take(out.disagreement, d.disagreement);
    take(out.expected_test_error, d.expected_test_error);
    take(out.expected_disagreement, d.expected_disagreement);
    take(out.gde_gap, d.gde_gap);
    append(out.curves, d.curves);
    take(out.cace_exact, d.cace_exact);
    take(out.cace_refined_exact, d.cace_refined_exact);
    take(out.cace_binned, d.cace_binned);
    take(out.cace_refined_binned, d.cace_refined_binned);
    take(out.ece, d.ece);
    append(out.cace_by_size, d.cace_by_size);
    for (const auto& [k, v] : d.bootstrap_std) out.bootstrap_std[k] = v;
    append(out.scatter_stats, d.scatter_stats);
    append(out.scatter_points, d.scatter_points);
    append(out.theory, d.theory);
    append(out.warnings, d.warnings);
  }
  return out;
}

std::vector<CurveRow> CurveRows(const CalibrationCurve& curve) {
  std::vector<CurveRow> rows;
  for (const ConfidenceBin& b : curve.bins) {
    rows.push_back({b.lower, b.upper, b.mean_confidence, b.accuracy(), b.mass});
  }
  return rows;
}

std::string ScatterCsv(std::span<const ScatterPoint> points) {
  if (points.empty()) throw Error(Errc::kSize, "no scatter points to export");
  std::string out = "x,y,group,bootstrap_std\n";
  for (const ScatterPoint& p : points) {
    if (p.group.find_first_of(",\n\r") != std::string::npos) {
      throw Error(Errc::kInvalidArgument, "group '" + p.group +
                                              "' contains a separator");
    }
    out += FormatNumber(p.x) + "," + FormatNumber(p.y) + "," + p.group + "," +
           FormatNumber(p.bootstrap_std) + "\n";
  }
  return out;
}

std::string CurveCsv(const CalibrationCurve& curve) {
  if (curve.bins.empty()) throw Error(Errc::kSize, "curve has no bins to export");
  std::string out = "bin_lower,bin_upper,mean_confidence,accuracy,mass\n";
  for (const CurveRow& r : CurveRows(curve)) {
    out += FormatNumber(r.bin_lower) + "," + FormatNumber(r.bin_upper) + "," +
           FormatNumber(r.mean_confidence) + "," + FormatNumber(r.accuracy) +
           "," + FormatNumber(r.mass) + "\n";
  }
  return out;
}

std::vector<ScatterPoint> ParseScatterCsv(std::string_view text) {
  const auto rows = SplitCsv(text);
  ExpectHeader(RequireRows(rows).front(), {"x", "y", "group", "bootstrap_std"});
  std::vector<ScatterPoint> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    ExpectWidth(rows[r], 4);
    const CsvRow& row = rows[r];
    out.push_back({ParseNumber(row.fields[0], row.line, "x"),
                   ParseNumber(row.fields[1], row.line, "y"), row.fields[2],
                   ParseNumber(row.fields[3], row.line, "bootstrap_std")});
  }
  return out;
}

std::vector<CurveRow> ParseCurveCsv(std::string_view text) {
  const auto rows = SplitCsv(text);
  ExpectHeader(RequireRows(rows).front(),
               {"bin_lower", "bin_upper", "mean_confidence", "accuracy", "mass"});
  std::vector<CurveRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    ExpectWidth(rows[r], 5);
    const auto v = ParseRowNumbers(rows[r], 0, 5);
    out.push_back({v[0], v[1], v[2], v[3], v[4]});
  }
  return out;
}

void ExportScatter(std::span<const ScatterPoint> points, const std::string& path) {
  WriteFile(path, ScatterCsv(points));
}

void ExportCurve(const CalibrationCurve& curve, const std::string& path) {
  WriteFile(path, CurveCsv(curve));
}

}  // namespace gdecal
