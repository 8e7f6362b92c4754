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

// lpicp: label-powerset inductive conformal prediction over classifier
// score matrices.
//
// Subcommands: gen, predict, evaluate, count, verify.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lpicp/enumeration.hpp"
#include "lpicp/io.hpp"
#include "lpicp/lpicp.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerification = 3;

/// Thrown for malformed or inconsistent input data (exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& body) {
  int workers = jobs <= 0
                    ? static_cast<int>(std::thread::hardware_concurrency())
                    : jobs;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n ? n : 1)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto run = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenOptions {
  std::string config_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed_override;
};

int run_gen(const GenOptions& opt) {
  std::ifstream in(opt.config_path);
  if (!in) throw DataError("cannot open config: " + opt.config_path);
  json cfg_json;
  try {
    in >> cfg_json;
  } catch (const json::exception& e) {
    throw DataError("config is not valid JSON: " + std::string(e.what()));
  }

  lpicp::synth::GeneratorConfig cfg;
  int cal_count = 0;
  double proper_fraction = 0.5;
  try {
    cfg.d = cfg_json.at("d").get<int>();
    cfg.l = cfg_json.at("l").get<int>();
    cfg.n_instances = cfg_json.at("n_instances").get<int>();
    cfg.seed = cfg_json.value("seed", 0ULL);
    if (cfg_json.at("label_prevalence").is_array()) {
      cfg.label_prevalence =
          cfg_json.at("label_prevalence").get<std::vector<double>>();
    } else {
      cfg.label_prevalence = lpicp::synth::uniform_prevalence(
          cfg.d, cfg_json.at("label_prevalence").get<double>());
    }
    cfg.noise_scale = cfg_json.value("noise_scale", 0.1);
    cfg.quality = cfg_json.value("quality", 1.0);
    cal_count = cfg_json.at("cal_count").get<int>();
    proper_fraction = cfg_json.value("proper_fraction", 0.5);
  } catch (const json::exception& e) {
    throw DataError("config field error: " + std::string(e.what()));
  }
  if (opt.seed_override) cfg.seed = *opt.seed_override;

  std::vector<lpicp::LabeledInstance> instances;
  try {
    instances = lpicp::synth::generate(cfg);
  } catch (const std::exception& e) {
    throw DataError(std::string("generation failed: ") + e.what());
  }
  lpicp::synth::SplitResult parts;
  try {
    parts = lpicp::synth::split(std::move(instances), proper_fraction, cal_count,
                                cfg.seed);
  } catch (const std::exception& e) {
    throw DataError(std::string("split failed: ") + e.what());
  }

  fs::create_directories(opt.output_dir);
  const auto write_pair = [&](const std::string& stem, const char* prefix,
                              const std::vector<lpicp::LabeledInstance>& bucket) {
    std::vector<std::string> ids;
    std::vector<lpicp::ScoreVector> scores;
    std::vector<lpicp::LabelSet> labels;
    for (std::size_t i = 0; i < bucket.size(); ++i) {
      ids.push_back(prefix + std::to_string(i));
      scores.push_back(bucket[i].scores);
      labels.push_back(*bucket[i].truth);
    }
    lpicp::io::write_score_file(
        (fs::path(opt.output_dir) / (stem + "_scores.csv")).string(), ids, scores,
        cfg.d);
    lpicp::io::write_label_file(
        (fs::path(opt.output_dir) / (stem + "_labels.csv")).string(), ids, labels,
        cfg.d);
  };
  write_pair("proper", "p", parts.proper);
  write_pair("calibration", "c", parts.calibration);
  write_pair("test", "t", parts.test);

  std::cout << "wrote " << parts.proper.size() << " proper, "
            << parts.calibration.size() << " calibration, " << parts.test.size()
            << " test instances (d=" << cfg.d << ", l=" << cfg.l << ") to "
            << opt.output_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictOptions {
  std::string calibration_scores;
  std::string calibration_labels;
  std::string test_scores;
  lpicp::io::RunConfig run;
  int max_cardinality = 0;  // 0: derive from calibration truths
  bool dump_sets = false;
  bool dump_pvalues = false;
  std::uint64_t dump_cap = 100'000;  // rows per (instance, epsilon)
};

struct InstanceOutput {
  lpicp::io::InstanceRecord record;
  std::vector<lpicp::io::RetainedDumpRow> set_rows;
  std::vector<lpicp::io::PValueTableRow> table_rows;
  bool truncated = false;
};

int run_predict(const PredictOptions& opt) {
  const auto cal_scores = lpicp::io::read_score_file(opt.calibration_scores);
  const auto cal_labels = lpicp::io::read_label_file(opt.calibration_labels);
  const auto test_scores = lpicp::io::read_score_file(opt.test_scores);

  if (cal_scores.d != cal_labels.d)
    throw DataError("calibration score/label width mismatch: " +
                    std::to_string(cal_scores.d) + " vs " +
                    std::to_string(cal_labels.d));
  if (cal_scores.d != test_scores.d)
    throw DataError("calibration/test width mismatch: " +
                    std::to_string(cal_scores.d) + " vs " +
                    std::to_string(test_scores.d));
  if (cal_scores.ids != cal_labels.ids)
    throw DataError("calibration score/label instance ids do not match");
  if (cal_scores.ids.empty()) throw DataError("empty calibration set");
  if (test_scores.ids.empty()) throw DataError("empty test set");

  const int d = cal_scores.d;
  int l = opt.max_cardinality;
  if (l == 0) {
    for (const auto& y : cal_labels.rows) l = std::max(l, y.count());
  }
  if (l < 1 || l > d)
    throw DataError("max cardinality " + std::to_string(l) +
                    " outside [1, d]; check --max-cardinality or labels");

  const lpicp::LabelSpace space(d, l, opt.run.candidate_cap);
  const lpicp::LpMeasure measure(opt.run.p);
  const lpicp::CandidateBudget budget{lpicp::BigCount(opt.run.candidate_cap)};

  std::vector<lpicp::LabeledInstance> cal_instances;
  cal_instances.reserve(cal_scores.rows.size());
  for (std::size_t i = 0; i < cal_scores.rows.size(); ++i) {
    if (cal_labels.rows[i].count() < 1)
      throw DataError("calibration instance " + cal_scores.ids[i] +
                      " has an empty label-set");
    cal_instances.emplace_back(cal_scores.rows[i], cal_labels.rows[i]);
  }
  const auto model = lpicp::calibrate(cal_instances, measure, space);

  if (opt.run.mode == lpicp::io::Mode::kOriginal) {
    const lpicp::BigCount total = lpicp::count_label_sets(d, l);
    if (total > budget.max_candidates)
      throw DataError("original mode needs " + total.str() +
                      " candidate evaluations per instance, over the cap of " +
                      budget.max_candidates.str() +
                      "; raise --cap or use --mode efficient");
  } else if (opt.dump_pvalues) {
    throw DataError(
        "--dump-pvalues requires --mode original: the efficient mode only "
        "computes p-values inside Q(t), so complete tables do not exist");
  }

  const auto& grid = opt.run.epsilon_grid;
  const std::size_t g = test_scores.rows.size();
  std::vector<InstanceOutput> outputs(g);

  const auto t_start = std::chrono::steady_clock::now();
  parallel_for(g, opt.run.jobs, [&](std::size_t i) {
    InstanceOutput& out = outputs[i];
    const lpicp::ScoreVector& o = test_scores.rows[i];
    out.record.id = test_scores.ids[i];

    const auto forced = lpicp::forced_prediction(model, o);
    out.record.prediction = forced.prediction;
    out.record.credibility = forced.credibility;
    out.record.confidence = forced.confidence;

    // Original mode: one pass assigns every candidate its p-value (the
    // epsilon below the p-value floor retains everything); each grid
    // epsilon then filters that table, exactly as running the full stream
    // per epsilon would.
    std::vector<lpicp::ScoredCandidate> full_table;
    lpicp::BigCount original_count = 0;
    if (opt.run.mode == lpicp::io::Mode::kOriginal) {
      const double below_floor =
          1.0 / (2.0 * (static_cast<double>(model.size()) + 1.0));
      lpicp::AllSetsEnumerator all(space);
      auto base =
          lpicp::prediction_set_from_candidates(model, o, all, below_floor);
      original_count = lpicp::BigCount(base.candidates_evaluated);
      full_table = std::move(base.retained);
      if (opt.dump_pvalues) {
        for (const auto& item : full_table) {
          lpicp::io::PValueTableRow row;
          row.id = out.record.id;
          row.labels = item.labels;
          row.p_value = item.p.value;
          out.table_rows.push_back(std::move(row));
        }
      }
    }

    for (const double epsilon : grid) {
      lpicp::PredictionSetResult r;
      if (opt.run.mode == lpicp::io::Mode::kEfficient) {
        r = lpicp::efficient_prediction_set(model, o, epsilon, budget);
      } else {
        r.epsilon = epsilon;
        r.candidates_evaluated =
            static_cast<std::uint64_t>(original_count);
        for (const auto& item : full_table)
          if (item.p.value > epsilon) r.retained.push_back(item);
      }

      lpicp::io::EpsilonOutcome eo;
      eo.retained_count = r.retained.size();
      eo.t_used = r.t_used;
      eo.candidates_evaluated = r.candidates_evaluated;
      eo.prohibitive = r.prohibitive;
      out.record.by_epsilon.push_back(eo);

      if (opt.dump_sets) {
        std::uint64_t written = 0;
        for (const auto& item : r.retained) {
          if (written >= opt.dump_cap) {
            out.truncated = true;
            break;
          }
          lpicp::io::RetainedDumpRow row;
          row.id = out.record.id;
          row.epsilon = epsilon;
          row.labels = item.labels;
          row.p_value = item.p.value;
          out.set_rows.push_back(std::move(row));
          ++written;
        }
      }
    }
  });
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  fs::create_directories(opt.run.output_dir);
  lpicp::io::ResultsFile rf;
  rf.d = d;
  rf.epsilons = grid;
  rf.mode = lpicp::io::mode_name(opt.run.mode);
  rf.p = opt.run.p;
  rf.n_cal = model.size();
  rf.max_cardinality = l;

  const std::string results_path =
      (fs::path(opt.run.output_dir) / "results.csv").string();
  {
    std::ofstream out(results_path);
    if (!out) throw DataError("cannot write " + results_path);
    lpicp::io::write_results_header(out, rf);
    for (const auto& io_out : outputs)
      lpicp::io::write_results_record(out, io_out.record);
  }

  if (opt.dump_sets) {
    std::vector<lpicp::io::RetainedDumpRow> rows;
    for (auto& io_out : outputs)
      for (auto& row : io_out.set_rows) rows.push_back(std::move(row));
    lpicp::io::write_retained_dump(
        (fs::path(opt.run.output_dir) / "retained_sets.csv").string(), rows, d);
  }
  if (opt.dump_pvalues) {
    std::vector<lpicp::io::PValueTableRow> rows;
    for (auto& io_out : outputs)
      for (auto& row : io_out.table_rows) rows.push_back(std::move(row));
    lpicp::io::write_pvalue_table(
        (fs::path(opt.run.output_dir) / "pvalue_table.csv").string(), rows, d);
  }

  // Run summary, one tree per epsilon.
  json summary;
  summary["d"] = d;
  summary["max_cardinality"] = l;
  summary["n_cal"] = model.size();
  summary["n_test"] = g;
  summary["mode"] = rf.mode;
  summary["p"] = opt.run.p;
  summary["candidate_cap"] = opt.run.candidate_cap;
  summary["elapsed_seconds"] = elapsed;
  summary["pvalue_note"] =
      "p-values are exact rationals k/(n_cal+1), serialized to 12 "
      "significant digits";
  std::uint64_t total_candidates = 0;
  json per_eps = json::object();
  for (std::size_t e = 0; e < grid.size(); ++e) {
    std::uint64_t prohibitive = 0;
    std::vector<int> ts;
    std::vector<std::uint64_t> cqs;
    for (const auto& io_out : outputs) {
      const auto& eo = io_out.record.by_epsilon[e];
      total_candidates += eo.candidates_evaluated;
      if (eo.prohibitive) {
        ++prohibitive;
      } else {
        ts.push_back(eo.t_used);
        cqs.push_back(eo.candidates_evaluated);
      }
    }
    json stats;
    stats["prohibitive_count"] = prohibitive;
    stats["prohibitive_fraction"] =
        static_cast<double>(prohibitive) / static_cast<double>(g);
    if (!ts.empty()) {
      std::sort(ts.begin(), ts.end());
      std::sort(cqs.begin(), cqs.end());
      stats["median_t"] = ts[ts.size() / 2];
      stats["median_candidates"] = cqs[cqs.size() / 2];
    }
    per_eps[lpicp::io::format_double(grid[e])] = stats;
  }
  summary["by_epsilon"] = per_eps;
  summary["total_candidates_evaluated"] = total_candidates;
  summary["candidates_per_second"] =
      elapsed > 0.0 ? static_cast<double>(total_candidates) / elapsed : 0.0;
  bool any_truncated = false;
  for (const auto& io_out : outputs) any_truncated |= io_out.truncated;
  summary["retained_dump_truncated"] = any_truncated;

  const std::string summary_path =
      (fs::path(opt.run.output_dir) / "summary.json").string();
  {
    std::ofstream out(summary_path);
    if (!out) throw DataError("cannot write " + summary_path);
    out << summary.dump(2) << "\n";
  }
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOptions {
  std::string results_path;
  std::string truth_path;
  std::vector<double> epsilons;  // empty: use the results grid
  std::string sets_path;
  std::string pvalues_path;
  std::string output_dir;
};

int run_evaluate(const EvaluateOptions& opt) {
  const auto rf = lpicp::io::read_results_file(opt.results_path);
  const auto truth_file = lpicp::io::read_label_file(opt.truth_path);
  if (rf.d != truth_file.d)
    throw DataError("results/truth width mismatch: " + std::to_string(rf.d) +
                    " vs " + std::to_string(truth_file.d));
  if (rf.records.empty()) throw DataError("results file has no records");

  std::map<std::string, std::size_t> truth_index;
  for (std::size_t i = 0; i < truth_file.ids.size(); ++i)
    truth_index[truth_file.ids[i]] = i;

  std::vector<lpicp::LabelSet> truths;
  std::vector<lpicp::LabelSet> predictions;
  std::vector<lpicp::ForcedPrediction> forced;
  for (const auto& rec : rf.records) {
    const auto it = truth_index.find(rec.id);
    if (it == truth_index.end())
      throw DataError("instance id '" + rec.id + "' missing from truth file");
    truths.push_back(truth_file.rows[it->second]);
    predictions.push_back(rec.prediction);
    forced.push_back(
        lpicp::ForcedPrediction{rec.prediction, rec.credibility, rec.confidence});
  }

  // Grid selection: default to the full grid recorded by predict.
  std::vector<double> grid = opt.epsilons.empty() ? rf.epsilons : opt.epsilons;
  std::vector<std::size_t> grid_index;
  for (double e : grid) {
    const auto it = std::find(rf.epsilons.begin(), rf.epsilons.end(), e);
    if (it == rf.epsilons.end())
      throw DataError("epsilon " + lpicp::io::format_double(e) +
                      " was not part of the prediction run");
    grid_index.push_back(static_cast<std::size_t>(it - rf.epsilons.begin()));
  }

  lpicp::metrics::EvaluationReport report;
  report.ca = lpicp::metrics::subset_accuracy(predictions, truths);
  report.f1_micro = lpicp::metrics::f1_micro(predictions, truths);
  report.f1_macro = lpicp::metrics::f1_macro(predictions, truths);
  report.hamming_loss = lpicp::metrics::hamming_loss(predictions, truths);
  report.avg_confidence = lpicp::metrics::avg_confidence(forced);
  report.avg_credibility = lpicp::metrics::avg_credibility(forced);

  std::uint64_t prohibitive_total = 0;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const std::size_t e = grid_index[gi];
    std::vector<std::uint64_t> sizes;
    for (const auto& rec : rf.records) {
      const auto& eo = rec.by_epsilon[e];
      if (eo.prohibitive) {
        ++prohibitive_total;
        continue;
      }
      sizes.push_back(eo.retained_count);
    }
    if (sizes.empty())
      throw DataError("every instance is prohibitive at epsilon " +
                      lpicp::io::format_double(grid[gi]));
    std::sort(sizes.begin(), sizes.end());
    double sum = 0.0;
    for (auto s : sizes) sum += static_cast<double>(s);
    report.n_by_epsilon[grid[gi]] = sum / static_cast<double>(sizes.size());
    report.n_median_by_epsilon[grid[gi]] =
        sizes.size() % 2 == 1
            ? static_cast<double>(sizes[sizes.size() / 2])
            : (static_cast<double>(sizes[sizes.size() / 2 - 1]) +
               static_cast<double>(sizes[sizes.size() / 2])) /
                  2.0;
  }
  report.prohibitive_fraction =
      static_cast<double>(prohibitive_total) /
      (static_cast<double>(rf.records.size()) * static_cast<double>(grid.size()));

  // Error curve from the retained-sets dump, when provided.
  if (!opt.sets_path.empty()) {
    const auto rows = lpicp::io::read_retained_dump(opt.sets_path);
    std::map<std::pair<std::string, double>, std::vector<const lpicp::io::RetainedDumpRow*>>
        by_key;
    for (const auto& row : rows)
      by_key[{row.id, row.epsilon}].push_back(&row);

    std::map<double, std::vector<lpicp::PredictionSetResult>> grid_results;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      const std::size_t e = grid_index[gi];
      auto& bucket = grid_results[grid[gi]];
      for (const auto& rec : rf.records) {
        lpicp::PredictionSetResult r;
        r.epsilon = grid[gi];
        r.prohibitive = rec.by_epsilon[e].prohibitive;
        if (!r.prohibitive) {
          const auto it = by_key.find({rec.id, rf.epsilons[e]});
          const std::size_t dumped = it == by_key.end() ? 0 : it->second.size();
          if (dumped != rec.by_epsilon[e].retained_count)
            throw DataError(
                "retained-set dump is incomplete for instance '" + rec.id +
                "' at epsilon " + lpicp::io::format_double(grid[gi]) +
                " (dump truncated? rerun predict with a larger --dump-cap)");
          if (it != by_key.end()) {
            for (const auto* row : it->second)
              r.retained.push_back(
                  lpicp::ScoredCandidate{row->labels, lpicp::PValue{row->p_value}});
          }
        }
        bucket.push_back(std::move(r));
      }
    }
    report.error_rate_by_epsilon =
        lpicp::metrics::empirical_error_curve(grid_results, truths);
  }

  // S/OF from the complete p-value tables, when provided.
  if (!opt.pvalues_path.empty()) {
    if (rf.mode != "original")
      throw DataError(
          "S/OF criteria need complete p-value tables from an original-mode "
          "run");
    const auto rows = lpicp::io::read_pvalue_table(opt.pvalues_path);
    std::map<std::string, std::vector<lpicp::ScoredCandidate>> by_id;
    for (const auto& row : rows)
      by_id[row.id].push_back(
          lpicp::ScoredCandidate{row.labels, lpicp::PValue{row.p_value}});
    std::vector<std::vector<lpicp::ScoredCandidate>> tables;
    for (const auto& rec : rf.records) {
      const auto it = by_id.find(rec.id);
      if (it == by_id.end())
        throw DataError("p-value table lacks instance '" + rec.id + "'");
      tables.push_back(it->second);
    }
    try {
      const auto sof = lpicp::metrics::s_of_criteria(tables, truths);
      report.s_criterion = sof.s;
      report.of_criterion = sof.of;
    } catch (const lpicp::metrics::UnsupportedInEfficientModeError& e) {
      throw DataError(e.what());
    }
  }

  fs::create_directories(opt.output_dir);
  lpicp::io::write_report((fs::path(opt.output_dir) / "report.json").string(),
                          report);
  lpicp::io::write_n_curve((fs::path(opt.output_dir) / "n_criterion.csv").string(),
                           report.n_by_epsilon, report.n_median_by_epsilon);
  if (!report.error_rate_by_epsilon.empty())
    lpicp::io::write_error_curve(
        (fs::path(opt.output_dir) / "error_rate.csv").string(),
        report.error_rate_by_epsilon);

  std::cout << lpicp::io::report_to_json(report).dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// count
// ---------------------------------------------------------------------------

struct CountOptions {
  int d = 0;
  int l = 0;
  std::optional<int> t;
  int z_cardinality = -1;  // -1: min(2, l)
};

int run_count(const CountOptions& opt) {
  lpicp::BigCount c;
  try {
    c = lpicp::count_label_sets(opt.d, opt.l);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  std::cout << "c(" << opt.d << "," << opt.l << ") = " << c.str() << "\n";
  if (opt.t) {
    const int zc = opt.z_cardinality < 0 ? std::min(2, opt.l) : opt.z_cardinality;
    if (zc < 0 || zc > opt.d) throw DataError("z cardinality outside [0, d]");
    lpicp::LabelSet z(opt.d);
    for (int k = 0; k < zc; ++k) z.set(k, true);
    const lpicp::BigCount q =
        lpicp::q_size(lpicp::LabelSpace(opt.d, opt.l), z, *opt.t);
    std::cout << "|Q(" << *opt.t << ")| = " << q.str() << "  (d=" << opt.d
              << ", l=" << opt.l << ", |z|=" << zc << ")\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyOptions {
  int cases = 400;
  int max_d = 8;
  std::uint64_t seed = 1;
};

struct VerifyState {
  std::mt19937_64 eng;
  std::uniform_real_distribution<double> unif{0.0, 1.0};

  explicit VerifyState(std::uint64_t seed) : eng(seed) {}

  lpicp::ScoreVector scores(int d) {
    std::vector<double> v(static_cast<std::size_t>(d));
    for (double& x : v) x = unif(eng);
    return lpicp::ScoreVector(std::move(v));
  }
  lpicp::CalibrationModel model(int d, int l, int n, double p) {
    std::vector<double> s;
    for (int i = 0; i < n; ++i) s.push_back(2.0 * unif(eng));
    return lpicp::CalibrationModel(std::move(s), lpicp::LpMeasure(p),
                                   lpicp::LabelSpace(d, l));
  }
  double pick_p() {
    static const double kP[] = {1.0, 2.0, 4.0, 8.0};
    return kP[eng() % 4];
  }
};

int run_verify(const VerifyOptions& opt) {
  VerifyState st(opt.seed);
  bool all_ok = true;
  const auto check = [&](const std::string& name, std::uint64_t cases,
                         std::uint64_t violations) {
    const bool ok = violations == 0;
    all_ok &= ok;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  (" << cases
              << " cases" << (ok ? "" : (", " + std::to_string(violations) +
                                         " violations"))
              << ")\n";
  };

  // 1. Thresholded z minimizes the L_p score over the full powerset.
  {
    std::uint64_t cases = 0, bad = 0;
    for (int rep = 0; rep < opt.cases; ++rep) {
      const int d = 1 + static_cast<int>(st.eng() % opt.max_d);
      const double p = st.pick_p();
      const lpicp::LpMeasure m(p);
      const auto o = st.scores(d);
      const auto z = lpicp::threshold_prediction(o);
      const double z_score = lpicp::score(o, z, m);
      for (std::uint64_t mask = 0; mask < (1ULL << d); ++mask) {
        lpicp::LabelSet y(d);
        for (int k = 0; k < d; ++k)
          if ((mask >> k) & 1ULL) y.set(k, true);
        ++cases;
        if (z_score > lpicp::score(o, y, m) + 1e-12) ++bad;
      }
    }
    check("min-nonconformity: threshold prediction is the argmin", cases, bad);
  }

  // 2. Certainty ordering == single-flip score ordering.
  {
    std::uint64_t cases = 0, bad = 0;
    for (int rep = 0; rep < opt.cases; ++rep) {
      const int d = 2 + static_cast<int>(st.eng() % (opt.max_d - 1));
      const double p = st.pick_p();
      const lpicp::LpMeasure m(p);
      const auto o = st.scores(d);
      const auto z = lpicp::threshold_prediction(o);
      const auto u = lpicp::certainty_vector(o);
      for (int f = 0; f < d; ++f)
        for (int h = 0; h < d; ++h) {
          ++cases;
          const double sf = lpicp::score(o, lpicp::flip(z, f), m);
          const double sh = lpicp::score(o, lpicp::flip(z, h), m);
          const bool u_le = u[static_cast<std::size_t>(f)] <=
                            u[static_cast<std::size_t>(h)];
          if (u_le && sf > sh + 1e-12) ++bad;
          if (!u_le && sf < sh - 1e-12) ++bad;
        }
    }
    check("flip ordering: certainty order matches flip-score order", cases, bad);
  }

  // 3. Everything outside Q(t) scores above alpha_i0.
  {
    std::uint64_t cases = 0, bad = 0;
    for (int rep = 0; rep < opt.cases; ++rep) {
      const int d = 1 + static_cast<int>(st.eng() % opt.max_d);
      const double p = st.pick_p();
      const auto model = st.model(d, d, 30, p);
      const auto o = st.scores(d);
      const double epsilon = 0.05 + 0.6 * st.unif(st.eng);
      const auto alpha = lpicp::threshold_alpha(model, epsilon);
      if (!alpha) continue;
      const auto t = lpicp::find_t(model, o, *alpha);
      if (!t) continue;
      const auto z = lpicp::threshold_prediction(o);
      for (std::uint64_t mask = 0; mask < (1ULL << d); ++mask) {
        lpicp::LabelSet y(d);
        for (int k = 0; k < d; ++k)
          if ((mask >> k) & 1ULL) y.set(k, true);
        if (lpicp::symdiff_size(y, z) < *t) continue;
        ++cases;
        if (!(lpicp::score(o, y, model.measure()) > *alpha)) ++bad;
      }
    }
    check("pruning: complement of Q(t) exceeds alpha_i0", cases, bad);
  }

  // 4. Efficient prediction sets match the exhaustive oracle bit-for-bit.
  {
    std::uint64_t cases = 0, bad = 0;
    for (int rep = 0; rep < opt.cases; ++rep) {
      const int d = 1 + static_cast<int>(st.eng() % opt.max_d);
      const int l = 1 + static_cast<int>(st.eng() % d);
      const double p = st.pick_p();
      const auto model = st.model(d, l, 30, p);
      const auto o = st.scores(d);
      const double epsilon = 0.02 + 0.7 * st.unif(st.eng);
      ++cases;
      const auto fast = lpicp::efficient_prediction_set(model, o, epsilon);
      const auto brute = lpicp::oracle::brute_force_prediction_set(
          model, o, epsilon, model.space());
      auto sort_canonical = [](std::vector<lpicp::ScoredCandidate> v) {
        std::sort(v.begin(), v.end(),
                  [](const lpicp::ScoredCandidate& a, const lpicp::ScoredCandidate& b) {
                    return lpicp::enumeration_less(a.labels, b.labels);
                  });
        return v;
      };
      const auto a = sort_canonical(fast.retained);
      const auto b = sort_canonical(brute.retained);
      bool same = a.size() == b.size() && !fast.prohibitive;
      for (std::size_t i = 0; same && i < a.size(); ++i)
        same = a[i].labels == b[i].labels && a[i].p.value == b[i].p.value;
      if (!same) ++bad;
    }
    check("exactness: efficient == exhaustive prediction sets", cases, bad);
  }

  // 5. find_t equals the literal flip-and-rescore recursion.
  {
    std::uint64_t cases = 0, bad = 0;
    for (int rep = 0; rep < opt.cases; ++rep) {
      const int d = 1 + static_cast<int>(st.eng() % opt.max_d);
      const double p = st.pick_p();
      const auto model = st.model(d, d, 30, p);
      const auto o = st.scores(d);
      const double alpha = 3.0 * st.unif(st.eng);
      ++cases;
      if (lpicp::find_t(model, o, alpha) !=
          lpicp::oracle::brute_force_find_t(o, model, alpha, model.space()))
        ++bad;
    }
    check("find-t: incremental search equals literal recursion", cases, bad);
  }

  // 6. Forced prediction equals the exhaustive scan.
  {
    std::uint64_t cases = 0, bad = 0;
    for (int rep = 0; rep < opt.cases; ++rep) {
      const int d = 1 + static_cast<int>(st.eng() % opt.max_d);
      const int l = 1 + static_cast<int>(st.eng() % d);
      const double p = st.pick_p();
      const auto model = st.model(d, l, 30, p);
      const auto o = st.scores(d);
      ++cases;
      const auto fast = lpicp::forced_prediction(model, o);
      const auto brute = lpicp::oracle::brute_force_forced_prediction(
          model, o, model.space());
      if (!(fast.prediction == brute.prediction) ||
          fast.credibility != brute.credibility ||
          fast.confidence != brute.confidence)
        ++bad;
    }
    check("forced prediction: closed form equals exhaustive scan", cases, bad);
  }

  // 7. Set-T threshold equals the order-statistic shortcut.
  {
    std::uint64_t cases = 0, bad = 0;
    for (int rep = 0; rep < opt.cases; ++rep) {
      const int n = 1 + static_cast<int>(st.eng() % 150);
      std::vector<double> s;
      for (int i = 0; i < n; ++i)
        s.push_back(std::floor(st.unif(st.eng) * 16.0) / 16.0);
      const lpicp::CalibrationModel model(std::move(s), lpicp::LpMeasure(2.0),
                                          lpicp::LabelSpace(2, 2));
      const double epsilon = 0.013 + 0.97 * st.unif(st.eng);
      ++cases;
      const auto got = lpicp::threshold_alpha(model, epsilon);
      const double rank_real = std::ceil((1.0 - epsilon) * (n + 1));
      const auto rank = static_cast<std::size_t>(rank_real);
      if (rank > static_cast<std::size_t>(n)) {
        if (got.has_value()) ++bad;
      } else if (!got || *got != model.sorted_scores()[rank - 1]) {
        ++bad;
      }
    }
    check("threshold: set-T definition equals order statistic", cases, bad);
  }

  std::cout << (all_ok ? "verification passed" : "verification FAILED") << "\n";
  return all_ok ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Label-powerset inductive conformal prediction over precomputed "
      "classifier score matrices"};
  app.require_subcommand(1);

  // gen
  GenOptions gen_opt;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen", "Generate synthetic score/label files");
  gen->add_option("--config", gen_opt.config_path, "Generator config (JSON)")
      ->required();
  gen->add_option("--output", gen_opt.output_dir, "Output directory")->required();
  auto* gen_seed_opt =
      gen->add_option("--seed", gen_seed, "Override the config seed");

  // predict
  PredictOptions pr;
  std::string mode_str = "efficient";
  auto* predict = app.add_subcommand(
      "predict", "Run LP-ICP over calibration + test score matrices");
  predict->add_option("--calibration-scores", pr.calibration_scores)->required();
  predict->add_option("--calibration-labels", pr.calibration_labels)->required();
  predict->add_option("--test-scores", pr.test_scores)->required();
  predict
      ->add_option("--epsilon", pr.run.epsilon_grid,
                   "Significance level (repeatable, ascending)")
      ->required();
  predict->add_option("--p", pr.run.p, "L_p norm exponent (presets: 2, 4, 8)")
      ->default_val(2.0);
  predict->add_option("--mode", mode_str, "original | efficient")
      ->default_val("efficient");
  predict->add_option("--cap", pr.run.candidate_cap,
                      "Candidate evaluation cap per instance")
      ->default_val(lpicp::kDefaultCandidateCap);
  predict->add_option("--jobs", pr.run.jobs, "Worker threads (0 = auto)")
      ->default_val(0);
  predict->add_option("--output", pr.run.output_dir, "Output directory")
      ->required();
  predict->add_option("--max-cardinality", pr.max_cardinality,
                      "Candidate cardinality bound l (0: derive from "
                      "calibration labels)")
      ->default_val(0);
  predict->add_flag("--dump-sets", pr.dump_sets,
                    "Dump retained sets per (instance, epsilon)");
  predict->add_option("--dump-cap", pr.dump_cap,
                      "Max dumped rows per (instance, epsilon)")
      ->default_val(100'000);
  predict->add_flag("--dump-pvalues", pr.dump_pvalues,
                    "Dump complete p-value tables (original mode only)");

  // evaluate
  EvaluateOptions ev;
  auto* evaluate =
      app.add_subcommand("evaluate", "Compute metrics from prediction results");
  evaluate->add_option("--results", ev.results_path, "results.csv from predict")
      ->required();
  evaluate->add_option("--truth", ev.truth_path, "True label file")->required();
  evaluate->add_option("--epsilon", ev.epsilons,
                       "Subset of the prediction grid (default: all)");
  evaluate->add_option("--sets", ev.sets_path,
                       "retained_sets.csv (enables the error-rate curve)");
  evaluate->add_option("--pvalues", ev.pvalues_path,
                       "pvalue_table.csv (enables S/OF criteria)");
  evaluate->add_option("--output", ev.output_dir, "Output directory")->required();

  // count
  CountOptions co;
  int count_t = -1;
  auto* count = app.add_subcommand("count", "Exact candidate-space counts");
  count->add_option("d", co.d, "Number of labels")->required();
  count->add_option("l", co.l, "Maximum label cardinality")->required();
  auto* count_t_opt = count->add_option("t", count_t, "Q(t) flip radius");
  count->add_option("--z-cardinality", co.z_cardinality,
                    "|z| used for the Q(t) count (default: min(2, l))");

  // verify
  VerifyOptions vo;
  auto* verify = app.add_subcommand(
      "verify", "Self-check: oracle equivalence and algorithm properties");
  verify->add_option("--cases", vo.cases, "Randomized cases per property")
      ->default_val(400);
  verify->add_option("--max-d", vo.max_d, "Largest label count exercised")
      ->default_val(8)
      ->check(CLI::Range(2, 12));
  verify->add_option("--seed", vo.seed, "Random seed")->default_val(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      if (gen_seed_opt->count() > 0) gen_opt.seed_override = gen_seed;
      return run_gen(gen_opt);
    }
    if (predict->parsed()) {
      if (mode_str == "original") {
        pr.run.mode = lpicp::io::Mode::kOriginal;
      } else if (mode_str == "efficient") {
        pr.run.mode = lpicp::io::Mode::kEfficient;
      } else {
        std::cerr << "error: --mode must be 'original' or 'efficient'\n";
        return kExitUsage;
      }
      try {
        pr.run.validate();
      } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
      }
      return run_predict(pr);
    }
    if (evaluate->parsed()) return run_evaluate(ev);
    if (count->parsed()) {
      if (count_t_opt->count() > 0) co.t = count_t;
      return run_count(co);
    }
    if (verify->parsed()) return run_verify(vo);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const lpicp::io::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
