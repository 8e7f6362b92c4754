//
// Copyright 2026 The lpicp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpicp/core.hpp"
#include "lpicp/icp.hpp"
#include "lpicp/metrics.hpp"

/// File formats and run configuration shared by the CLI and its tests.
///
/// Score files:   `#labels=<d>` then rows `instance_id,score_1,...,score_d`.
/// Label files:   `#labels=<d>` then rows `instance_id,bit_1,...,bit_d`.
/// Columns are in label order 1..d; scores are plain decimal literals so
/// any classifier stack can export them. p-values are serialized with 12
/// significant digits (their exact values are rationals k/(n_cal+1)).
namespace lpicp::io {

/// Malformed-input error carrying file, 1-based line, and 1-based field.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, std::size_t column,
             const std::string& message)
      : std::runtime_error(file + ":" + std::to_string(line) + ":" +
                           std::to_string(column) + ": " + message),
        file_(file),
        line_(line),
        column_(column) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::string file_;
  std::size_t line_;
  std::size_t column_;
};

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

/// Shortest decimal that parses back to exactly the same double. Score
/// files use this so generated data round-trips losslessly.
inline std::string format_exact(double x) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, static_cast<std::size_t>(ptr - buf));
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view field, const std::string& file,
                           std::size_t line, std::size_t column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw ParseError(file, line, column,
                     "expected a decimal number, got '" + std::string(field) + "'");
  return value;
}

inline std::uint64_t parse_uint(std::string_view field, const std::string& file,
                                std::size_t line, std::size_t column) {
  std::uint64_t value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw ParseError(file, line, column,
                     "expected an unsigned integer, got '" + std::string(field) + "'");
  return value;
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline int parse_labels_header(const std::string& line, const std::string& file) {
  constexpr std::string_view prefix = "#labels=";
  if (line.rfind(prefix, 0) != 0)
    throw ParseError(file, 1, 1, "expected '#labels=<d>' header line");
  const std::uint64_t d = parse_uint(std::string_view(line).substr(prefix.size()),
                                     file, 1, 1);
  if (d < 1 || d > 1'000'000)
    throw ParseError(file, 1, 1, "label count out of range");
  return static_cast<int>(d);
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

}  // namespace detail

struct ScoreFile {
  int d = 0;
  std::vector<std::string> ids;
  std::vector<ScoreVector> rows;
};

struct LabelFile {
  int d = 0;
  std::vector<std::string> ids;
  std::vector<LabelSet> rows;
};

inline ScoreFile read_score_file(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  ScoreFile out;
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(path, 1, 1, "empty file");
  out.d = detail::parse_labels_header(detail::strip_cr(line), path);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != static_cast<std::size_t>(out.d) + 1)
      throw ParseError(path, line_no, fields.size(),
                       "expected " + std::to_string(out.d + 1) + " fields, got " +
                           std::to_string(fields.size()));
    if (fields[0].empty())
      throw ParseError(path, line_no, 1, "empty instance id");
    std::vector<double> values(static_cast<std::size_t>(out.d));
    for (int k = 0; k < out.d; ++k) {
      const double v = detail::parse_double(fields[static_cast<std::size_t>(k) + 1],
                                            path, line_no,
                                            static_cast<std::size_t>(k) + 2);
      if (!(v >= 0.0 && v <= 1.0))
        throw ParseError(path, line_no, static_cast<std::size_t>(k) + 2,
                         "score out of [0,1]");
      values[static_cast<std::size_t>(k)] = v;
    }
    out.ids.emplace_back(fields[0]);
    out.rows.emplace_back(std::move(values));
  }
  return out;
}

inline LabelFile read_label_file(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  LabelFile out;
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(path, 1, 1, "empty file");
  out.d = detail::parse_labels_header(detail::strip_cr(line), path);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != static_cast<std::size_t>(out.d) + 1)
      throw ParseError(path, line_no, fields.size(),
                       "expected " + std::to_string(out.d + 1) + " fields, got " +
                           std::to_string(fields.size()));
    if (fields[0].empty())
      throw ParseError(path, line_no, 1, "empty instance id");
    LabelSet row(out.d);
    for (int k = 0; k < out.d; ++k) {
      const std::string_view f = fields[static_cast<std::size_t>(k) + 1];
      if (f == "1") {
        row.set(k, true);
      } else if (f != "0") {
        throw ParseError(path, line_no, static_cast<std::size_t>(k) + 2,
                         "label bit must be 0 or 1");
      }
    }
    out.ids.emplace_back(fields[0]);
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline void write_score_file(const std::string& path,
                             const std::vector<std::string>& ids,
                             const std::vector<ScoreVector>& rows, int d) {
  std::ofstream out = detail::open_output(path);
  out << "#labels=" << d << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << ids[i];
    for (int k = 0; k < d; ++k) out << ',' << format_exact(rows[i][k]);
    out << "\n";
  }
}

inline void write_label_file(const std::string& path,
                             const std::vector<std::string>& ids,
                             const std::vector<LabelSet>& rows, int d) {
  std::ofstream out = detail::open_output(path);
  out << "#labels=" << d << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << ids[i];
    for (int k = 0; k < d; ++k) out << ',' << (rows[i].test(k) ? '1' : '0');
    out << "\n";
  }
}

/// Prediction-run configuration (CLI surface).
enum class Mode { kOriginal, kEfficient };

inline std::string mode_name(Mode m) {
  return m == Mode::kOriginal ? "original" : "efficient";
}

struct RunConfig {
  std::vector<double> epsilon_grid;
  double p = 2.0;
  Mode mode = Mode::kEfficient;
  std::uint64_t candidate_cap = kDefaultCandidateCap;
  int jobs = 0;  // 0 = auto
  std::string output_dir;

  void validate() const {
    if (epsilon_grid.empty())
      throw std::invalid_argument("RunConfig: epsilon grid must be non-empty");
    double prev = 0.0;
    for (double e : epsilon_grid) {
      if (!(e > 0.0 && e < 1.0))
        throw std::invalid_argument("RunConfig: epsilons must lie in (0, 1)");
      if (e <= prev)
        throw std::invalid_argument("RunConfig: epsilons must be strictly ascending");
      prev = e;
    }
    if (!(p >= 1.0))
      throw std::invalid_argument("RunConfig: p must be >= 1");
    if (candidate_cap < 1)
      throw std::invalid_argument("RunConfig: candidate cap must be >= 1");
    if (jobs < 0) throw std::invalid_argument("RunConfig: jobs must be >= 0");
  }
};

/// Per-epsilon outcome within one instance record.
struct EpsilonOutcome {
  std::uint64_t retained_count = 0;
  int t_used = 0;
  std::uint64_t candidates_evaluated = 0;
  bool prohibitive = false;
};

/// One row of the predict results file.
struct InstanceRecord {
  std::string id;
  LabelSet prediction;
  double credibility = 0.0;
  double confidence = 0.0;
  std::vector<EpsilonOutcome> by_epsilon;  // aligned with the grid

  InstanceRecord() : prediction(1) {}
};

struct ResultsFile {
  int d = 0;
  std::vector<double> epsilons;
  std::string mode;
  double p = 2.0;
  std::uint64_t n_cal = 0;
  int max_cardinality = 0;
  std::vector<InstanceRecord> records;
};

inline void write_results_header(std::ostream& out, const ResultsFile& rf) {
  out << "#labels=" << rf.d << "\n";
  out << "#epsilons=";
  for (std::size_t i = 0; i < rf.epsilons.size(); ++i)
    out << (i ? "," : "") << format_double(rf.epsilons[i]);
  out << "\n#mode=" << rf.mode << "\n#p=" << format_double(rf.p)
      << "\n#n_cal=" << rf.n_cal << "\n#max_cardinality=" << rf.max_cardinality
      << "\n";
  out << "id,prediction,credibility,confidence";
  for (double e : rf.epsilons) {
    const std::string tag = format_double(e);
    out << ",n_" << tag << ",t_" << tag << ",cq_" << tag << ",prohibitive_" << tag;
  }
  out << "\n";
}

inline void write_results_record(std::ostream& out, const InstanceRecord& rec) {
  out << rec.id << ',' << rec.prediction.to_bit_string() << ','
      << format_double(rec.credibility) << ',' << format_double(rec.confidence);
  for (const EpsilonOutcome& eo : rec.by_epsilon) {
    out << ',' << eo.retained_count << ',' << eo.t_used << ','
        << eo.candidates_evaluated << ',' << (eo.prohibitive ? 1 : 0);
  }
  out << "\n";
}

inline ResultsFile read_results_file(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  ResultsFile rf;
  std::string line;
  std::size_t line_no = 0;

  auto expect_header = [&](const char* prefix) -> std::string {
    if (!std::getline(in, line))
      throw ParseError(path, line_no + 1, 1, "truncated header");
    ++line_no;
    line = detail::strip_cr(line);
    const std::string_view pv(prefix);
    if (line.rfind(prefix, 0) != 0)
      throw ParseError(path, line_no, 1,
                       "expected header '" + std::string(prefix) + "'");
    return line.substr(pv.size());
  };

  rf.d = static_cast<int>(detail::parse_uint(expect_header("#labels="), path, 1, 1));
  const std::string eps_line = expect_header("#epsilons=");
  for (const auto f : detail::split_fields(eps_line))
    rf.epsilons.push_back(detail::parse_double(f, path, line_no, 1));
  rf.mode = expect_header("#mode=");
  rf.p = detail::parse_double(expect_header("#p="), path, line_no, 1);
  rf.n_cal = detail::parse_uint(expect_header("#n_cal="), path, line_no, 1);
  rf.max_cardinality = static_cast<int>(
      detail::parse_uint(expect_header("#max_cardinality="), path, line_no, 1));
  expect_header("id,prediction");  // column header line

  const std::size_t expected =
      4 + 4 * rf.epsilons.size();
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != expected)
      throw ParseError(path, line_no, fields.size(),
                       "expected " + std::to_string(expected) + " fields");
    InstanceRecord rec;
    rec.id = std::string(fields[0]);
    if (fields[1].size() != static_cast<std::size_t>(rf.d))
      throw ParseError(path, line_no, 2, "prediction width mismatch");
    rec.prediction = LabelSet::from_bits(fields[1]);
    rec.credibility = detail::parse_double(fields[2], path, line_no, 3);
    rec.confidence = detail::parse_double(fields[3], path, line_no, 4);
    for (std::size_t e = 0; e < rf.epsilons.size(); ++e) {
      EpsilonOutcome eo;
      const std::size_t base = 4 + 4 * e;
      eo.retained_count = detail::parse_uint(fields[base], path, line_no, base + 1);
      eo.t_used = static_cast<int>(
          detail::parse_uint(fields[base + 1], path, line_no, base + 2));
      eo.candidates_evaluated =
          detail::parse_uint(fields[base + 2], path, line_no, base + 3);
      eo.prohibitive =
          detail::parse_uint(fields[base + 3], path, line_no, base + 4) != 0;
      rec.by_epsilon.push_back(eo);
    }
    rf.records.push_back(std::move(rec));
  }
  return rf;
}

/// Retained-sets dump: one row per (instance, epsilon, retained set).
struct RetainedDumpRow {
  std::string id;
  double epsilon = 0.0;
  LabelSet labels;
  double p_value = 0.0;

  RetainedDumpRow() : labels(1) {}
};

inline void write_retained_dump(const std::string& path,
                                const std::vector<RetainedDumpRow>& rows, int d) {
  std::ofstream out = detail::open_output(path);
  out << "#labels=" << d << "\n";
  out << "id,epsilon,labelset,p_value\n";
  for (const RetainedDumpRow& r : rows) {
    out << r.id << ',' << format_double(r.epsilon) << ','
        << r.labels.to_bit_string() << ',' << format_double(r.p_value) << "\n";
  }
}

inline std::vector<RetainedDumpRow> read_retained_dump(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, 1, "empty file");
  const int d = detail::parse_labels_header(detail::strip_cr(line), path);
  std::getline(in, line);  // column header
  std::vector<RetainedDumpRow> rows;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 4)
      throw ParseError(path, line_no, fields.size(), "expected 4 fields");
    RetainedDumpRow r;
    r.id = std::string(fields[0]);
    r.epsilon = detail::parse_double(fields[1], path, line_no, 2);
    if (fields[2].size() != static_cast<std::size_t>(d))
      throw ParseError(path, line_no, 3, "labelset width mismatch");
    r.labels = LabelSet::from_bits(fields[2]);
    r.p_value = detail::parse_double(fields[3], path, line_no, 4);
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Full p-value table dump (original mode): one row per (instance, candidate).
struct PValueTableRow {
  std::string id;
  LabelSet labels;
  double p_value = 0.0;

  PValueTableRow() : labels(1) {}
};

inline void write_pvalue_table(const std::string& path,
                               const std::vector<PValueTableRow>& rows, int d) {
  std::ofstream out = detail::open_output(path);
  out << "#labels=" << d << "\n";
  out << "id,labelset,p_value\n";
  for (const PValueTableRow& r : rows)
    out << r.id << ',' << r.labels.to_bit_string() << ','
        << format_double(r.p_value) << "\n";
}

inline std::vector<PValueTableRow> read_pvalue_table(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, 1, "empty file");
  const int d = detail::parse_labels_header(detail::strip_cr(line), path);
  std::getline(in, line);  // column header
  std::vector<PValueTableRow> rows;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 3)
      throw ParseError(path, line_no, fields.size(), "expected 3 fields");
    PValueTableRow r;
    r.id = std::string(fields[0]);
    if (fields[1].size() != static_cast<std::size_t>(d))
      throw ParseError(path, line_no, 2, "labelset width mismatch");
    r.labels = LabelSet::from_bits(fields[1]);
    r.p_value = detail::parse_double(fields[2], path, line_no, 3);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json report_to_json(const metrics::EvaluationReport& report) {
  nlohmann::json j;
  j["forced_prediction"] = {
      {"classification_accuracy", report.ca},
      {"f1_micro", report.f1_micro},
      {"f1_macro", report.f1_macro},
      {"hamming_loss", report.hamming_loss},
      {"avg_confidence", report.avg_confidence},
      {"avg_credibility", report.avg_credibility},
  };
  nlohmann::json sets;
  if (report.s_criterion) sets["s_criterion"] = *report.s_criterion;
  if (report.of_criterion) sets["of_criterion"] = *report.of_criterion;
  auto map_to_json = [](const std::map<double, double>& m) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : m) out[format_double(k)] = v;
    return out;
  };
  sets["n_by_epsilon"] = map_to_json(report.n_by_epsilon);
  sets["n_median_by_epsilon"] = map_to_json(report.n_median_by_epsilon);
  if (!report.error_rate_by_epsilon.empty())
    sets["error_rate_by_epsilon"] = map_to_json(report.error_rate_by_epsilon);
  sets["prohibitive_fraction"] = report.prohibitive_fraction;
  j["prediction_sets"] = sets;
  return j;
}

inline void write_report(const std::string& path,
                         const metrics::EvaluationReport& report) {
  std::ofstream out = detail::open_output(path);
  out << report_to_json(report).dump(2) << "\n";
}

/// Plot-ready curve tables.
inline void write_n_curve(const std::string& path,
                          const std::map<double, double>& n_mean,
                          const std::map<double, double>& n_median) {
  std::ofstream out = detail::open_output(path);
  out << "epsilon,n_mean,n_median\n";
  for (const auto& [eps, mean] : n_mean) {
    out << format_double(eps) << ',' << format_double(mean) << ','
        << format_double(n_median.at(eps)) << "\n";
  }
}

inline void write_error_curve(const std::string& path,
                              const std::map<double, double>& curve) {
  std::ofstream out = detail::open_output(path);
  out << "epsilon,error_rate\n";
  for (const auto& [eps, rate] : curve)
    out << format_double(eps) << ',' << format_double(rate) << "\n";
}

}  // namespace lpicp::io
