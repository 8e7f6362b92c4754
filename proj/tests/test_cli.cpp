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

// End-to-end smoke tests driving the installed CLI binary.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lpicp/io.hpp"

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(LPICP_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lpicp_cli_" +
            std::string(
                ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write_config(int d = 6, int l = 3, int n = 500, int cal = 199) {
    std::ofstream cfg(path("cfg.json"));
    cfg << "{\"d\": " << d << ", \"l\": " << l << ", \"n_instances\": " << n
        << ", \"seed\": 77, \"label_prevalence\": 0.25, \"noise_scale\": 0.2, "
           "\"quality\": 0.9, \"cal_count\": "
        << cal << ", \"proper_fraction\": 0.0}";
  }

  fs::path dir_;
};

TEST_F(CliTest, FullPipeline) {
  write_config();
  ASSERT_EQ(run("gen --config " + path("cfg.json") + " --output " + path("data") +
                " > /dev/null"),
            0);
  for (const char* f :
       {"proper_scores.csv", "proper_labels.csv", "calibration_scores.csv",
        "calibration_labels.csv", "test_scores.csv", "test_labels.csv"})
    EXPECT_TRUE(fs::exists(dir_ / "data" / f)) << f;

  ASSERT_EQ(run("predict --calibration-scores " + path("data/calibration_scores.csv") +
                " --calibration-labels " + path("data/calibration_labels.csv") +
                " --test-scores " + path("data/test_scores.csv") +
                " --epsilon 0.05 --epsilon 0.2 --mode efficient --dump-sets" +
                " --output " + path("eff") + " > /dev/null"),
            0);
  EXPECT_TRUE(fs::exists(dir_ / "eff" / "results.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "eff" / "summary.json"));
  EXPECT_TRUE(fs::exists(dir_ / "eff" / "retained_sets.csv"));

  ASSERT_EQ(run("evaluate --results " + path("eff/results.csv") + " --truth " +
                path("data/test_labels.csv") + " --sets " +
                path("eff/retained_sets.csv") + " --output " + path("eval") +
                " > /dev/null"),
            0);
  EXPECT_TRUE(fs::exists(dir_ / "eval" / "report.json"));
  EXPECT_TRUE(fs::exists(dir_ / "eval" / "n_criterion.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "eval" / "error_rate.csv"));

  const auto report = nlohmann::json::parse(slurp(dir_ / "eval" / "report.json"));
  EXPECT_TRUE(report.contains("forced_prediction"));
  EXPECT_TRUE(report["prediction_sets"].contains("error_rate_by_epsilon"));
  // Efficient mode never produces S/OF.
  EXPECT_FALSE(report["prediction_sets"].contains("s_criterion"));
  const double err = report["prediction_sets"]["error_rate_by_epsilon"]["0.2"];
  EXPECT_GE(err, 0.0);
  EXPECT_LE(err, 0.35);

  // Evaluating a subset of the prediction grid works; an unknown epsilon
  // is a data error.
  ASSERT_EQ(run("evaluate --results " + path("eff/results.csv") + " --truth " +
                path("data/test_labels.csv") + " --epsilon 0.2 --output " +
                path("eval2") + " > /dev/null"),
            0);
  const auto sub = nlohmann::json::parse(slurp(dir_ / "eval2" / "report.json"));
  EXPECT_EQ(sub["prediction_sets"]["n_by_epsilon"].size(), 1u);
  EXPECT_EQ(run("evaluate --results " + path("eff/results.csv") + " --truth " +
                path("data/test_labels.csv") + " --epsilon 0.33 --output " +
                path("eval3") + " 2> /dev/null"),
            2);
}

TEST_F(CliTest, OriginalAndEfficientModesProduceIdenticalSets) {
  write_config(5, 2, 260, 99);
  ASSERT_EQ(run("gen --config " + path("cfg.json") + " --output " + path("data") +
                " > /dev/null"),
            0);
  const std::string common =
      " --calibration-scores " + path("data/calibration_scores.csv") +
      " --calibration-labels " + path("data/calibration_labels.csv") +
      " --test-scores " + path("data/test_scores.csv") +
      " --epsilon 0.05 --epsilon 0.3 --dump-sets > /dev/null";
  ASSERT_EQ(run("predict --mode efficient --output " + path("eff") + common), 0);
  ASSERT_EQ(run("predict --mode original --dump-pvalues --output " + path("orig") +
                common),
            0);

  const auto eff = lpicp::io::read_retained_dump(path("eff/retained_sets.csv"));
  const auto orig = lpicp::io::read_retained_dump(path("orig/retained_sets.csv"));
  ASSERT_EQ(eff.size(), orig.size());
  auto key = [](const lpicp::io::RetainedDumpRow& r) {
    return r.id + "|" + lpicp::io::format_double(r.epsilon) + "|" +
           r.labels.to_bit_string() + "|" + lpicp::io::format_double(r.p_value);
  };
  std::vector<std::string> ke, ko;
  for (const auto& r : eff) ke.push_back(key(r));
  for (const auto& r : orig) ko.push_back(key(r));
  std::sort(ke.begin(), ke.end());
  std::sort(ko.begin(), ko.end());
  EXPECT_EQ(ke, ko);

  // Original mode evaluates the whole space; efficient evaluates less.
  const auto eff_rf = lpicp::io::read_results_file(path("eff/results.csv"));
  const auto orig_rf = lpicp::io::read_results_file(path("orig/results.csv"));
  std::uint64_t eff_total = 0, orig_total = 0;
  for (std::size_t i = 0; i < eff_rf.records.size(); ++i)
    for (std::size_t e = 0; e < 2; ++e) {
      eff_total += eff_rf.records[i].by_epsilon[e].candidates_evaluated;
      orig_total += orig_rf.records[i].by_epsilon[e].candidates_evaluated;
      EXPECT_EQ(orig_rf.records[i].by_epsilon[e].candidates_evaluated, 15u);
    }
  EXPECT_LT(eff_total, orig_total);

  // S/OF only evaluable from the original-mode table.
  ASSERT_EQ(run("evaluate --results " + path("orig/results.csv") + " --truth " +
                path("data/test_labels.csv") + " --pvalues " +
                path("orig/pvalue_table.csv") + " --output " + path("ev") +
                " > /dev/null"),
            0);
  const auto report = nlohmann::json::parse(slurp(dir_ / "ev" / "report.json"));
  ASSERT_TRUE(report["prediction_sets"].contains("s_criterion"));
  const double s = report["prediction_sets"]["s_criterion"];
  const double of = report["prediction_sets"]["of_criterion"];
  EXPECT_GT(s, of);
  EXPECT_GT(s - of, 0.0);
  EXPECT_LE(s - of, 1.0);
}

TEST_F(CliTest, DeterministicAcrossRunsAndJobCounts) {
  write_config(5, 2, 300, 99);
  ASSERT_EQ(run("gen --config " + path("cfg.json") + " --output " + path("a") + " > /dev/null"), 0);
  ASSERT_EQ(run("gen --config " + path("cfg.json") + " --output " + path("b") + " > /dev/null"), 0);
  for (const char* f : {"calibration_scores.csv", "test_scores.csv"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;

  // --seed overrides the config seed and changes the stream.
  ASSERT_EQ(run("gen --config " + path("cfg.json") + " --seed 555 --output " +
                path("c") + " > /dev/null"),
            0);
  EXPECT_NE(slurp(dir_ / "a" / "test_scores.csv"),
            slurp(dir_ / "c" / "test_scores.csv"));

  const std::string common =
      " --calibration-scores " + path("a/calibration_scores.csv") +
      " --calibration-labels " + path("a/calibration_labels.csv") +
      " --test-scores " + path("a/test_scores.csv") +
      " --epsilon 0.1 --mode efficient > /dev/null";
  ASSERT_EQ(run("predict --jobs 1 --output " + path("j1") + common), 0);
  ASSERT_EQ(run("predict --jobs 3 --output " + path("j3") + common), 0);
  EXPECT_EQ(slurp(dir_ / "j1" / "results.csv"), slurp(dir_ / "j3" / "results.csv"));
}

TEST_F(CliTest, CountSubcommand) {
  ASSERT_EQ(run("count 20 7 > " + path("out.txt")), 0);
  EXPECT_NE(slurp(dir_ / "out.txt").find("c(20,7) = 137979"), std::string::npos);
  ASSERT_EQ(run("count 20 6 > " + path("out6.txt")), 0);
  EXPECT_NE(slurp(dir_ / "out6.txt").find("c(20,6) = 60459"), std::string::npos);
  ASSERT_EQ(run("count 90 15 3 --z-cardinality 2 > " + path("outq.txt")), 0);
  EXPECT_NE(slurp(dir_ / "outq.txt").find("|Q(3)| = 4095"), std::string::npos);
  // l > d is a data error.
  EXPECT_EQ(run("count 3 4 2> /dev/null"), 2);
}

TEST_F(CliTest, VerifySubcommandPasses) {
  EXPECT_EQ(run("verify --cases 60 --max-d 6 --seed 5 > /dev/null"), 0);
}

TEST_F(CliTest, ExitCodes) {
  // Usage errors.
  EXPECT_EQ(run("predict 2> /dev/null"), 1);
  EXPECT_EQ(run("bogus-subcommand 2> /dev/null"), 1);
  EXPECT_EQ(run("--help > /dev/null"), 0);

  // Data errors: malformed score file.
  {
    std::ofstream bad(path("bad.csv"));
    bad << "#labels=2\nx,0.5,nope\n";
  }
  {
    std::ofstream labels(path("labels.csv"));
    labels << "#labels=2\nx,1,0\n";
  }
  EXPECT_EQ(run("predict --calibration-scores " + path("bad.csv") +
                " --calibration-labels " + path("labels.csv") +
                " --test-scores " + path("bad.csv") +
                " --epsilon 0.1 --output " + path("out") + " 2> /dev/null"),
            2);

  // Data error: epsilon grid not ascending is usage.
  write_config(4, 2, 120, 49);
  ASSERT_EQ(run("gen --config " + path("cfg.json") + " --output " + path("d") +
                " > /dev/null"),
            0);
  EXPECT_EQ(run("predict --calibration-scores " + path("d/calibration_scores.csv") +
                " --calibration-labels " + path("d/calibration_labels.csv") +
                " --test-scores " + path("d/test_scores.csv") +
                " --epsilon 0.2 --epsilon 0.1 --output " + path("o") +
                " 2> /dev/null"),
            1);

  // --dump-pvalues in efficient mode is a data error.
  EXPECT_EQ(run("predict --calibration-scores " + path("d/calibration_scores.csv") +
                " --calibration-labels " + path("d/calibration_labels.csv") +
                " --test-scores " + path("d/test_scores.csv") +
                " --epsilon 0.1 --mode efficient --dump-pvalues --output " +
                path("o2") + " 2> /dev/null"),
            2);

  // Original mode over the cap is a data error.
  EXPECT_EQ(run("predict --calibration-scores " + path("d/calibration_scores.csv") +
                " --calibration-labels " + path("d/calibration_labels.csv") +
                " --test-scores " + path("d/test_scores.csv") +
                " --epsilon 0.1 --mode original --cap 3 --output " + path("o3") +
                " 2> /dev/null"),
            2);
}

}  // namespace
