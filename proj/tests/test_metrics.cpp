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

#include "lpicp/metrics.hpp"

#include <gtest/gtest.h>

#include <random>

namespace lpicp {
namespace {

std::vector<LabelSet> sets(std::initializer_list<const char*> bits) {
  std::vector<LabelSet> out;
  for (const char* b : bits) out.push_back(LabelSet::from_bits(b));
  return out;
}

PredictionSetResult result_of_size(std::size_t n, int d = 3) {
  PredictionSetResult r;
  r.epsilon = 0.1;
  for (std::size_t i = 0; i < n; ++i)
    r.retained.push_back(ScoredCandidate{LabelSet(d), PValue{0.5}});
  return r;
}

TEST(SubsetAccuracy, KnownCases) {
  EXPECT_DOUBLE_EQ(metrics::subset_accuracy(sets({"10", "01"}), sets({"10", "01"})),
                   1.0);
  EXPECT_DOUBLE_EQ(metrics::subset_accuracy(sets({"10", "01"}), sets({"01", "10"})),
                   0.0);
  EXPECT_DOUBLE_EQ(metrics::subset_accuracy(sets({"10", "01", "11", "10"}),
                                            sets({"10", "01", "11", "01"})),
                   0.75);
  EXPECT_THROW(metrics::subset_accuracy({}, {}), std::invalid_argument);
  EXPECT_THROW(metrics::subset_accuracy(sets({"10"}), sets({"10", "01"})),
               std::invalid_argument);
}

TEST(F1Micro, KnownCases) {
  EXPECT_DOUBLE_EQ(metrics::f1_micro(sets({"10", "11"}), sets({"10", "11"})), 1.0);
  EXPECT_DOUBLE_EQ(metrics::f1_micro(sets({"00", "00"}), sets({"10", "11"})), 0.0);
  // truths {10, 11}, preds {10, 10} -> 2*2/(3+2) = 0.8
  EXPECT_DOUBLE_EQ(metrics::f1_micro(sets({"10", "10"}), sets({"10", "11"})), 0.8);
}

TEST(F1Macro, KnownCases) {
  EXPECT_DOUBLE_EQ(metrics::f1_macro(sets({"10", "11"}), sets({"10", "11"})), 1.0);
  // Label 1: F1 = 2*2/(2+2) = 1; label 2: 2*0/(1+0) = 0 -> mean 0.5.
  EXPECT_DOUBLE_EQ(metrics::f1_macro(sets({"10", "10"}), sets({"10", "11"})), 0.5);
  // A label never predicted nor true contributes 0 by the
  // zero-denominator convention.
  EXPECT_DOUBLE_EQ(metrics::f1_macro(sets({"10"}), sets({"10"})), 0.5);
}

TEST(HammingLoss, KnownCases) {
  EXPECT_DOUBLE_EQ(metrics::hamming_loss(sets({"1010"}), sets({"1010"})), 0.0);
  EXPECT_DOUBLE_EQ(metrics::hamming_loss(sets({"1010"}), sets({"0101"})), 1.0);
  EXPECT_DOUBLE_EQ(
      metrics::hamming_loss(sets({"1000000000"}), sets({"0000000000"})), 0.1);
}

TEST(F1Micro, OneIffIdenticalGivenNonemptyTruths) {
  std::mt19937_64 eng(211);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 1 + static_cast<int>(eng() % 8);
    const int g = 1 + static_cast<int>(eng() % 5);
    std::vector<LabelSet> preds, truths;
    for (int i = 0; i < g; ++i) {
      LabelSet t(d), z(d);
      do {
        for (int k = 0; k < d; ++k) t.set(k, eng() & 1);
      } while (t.count() == 0);
      for (int k = 0; k < d; ++k) z.set(k, eng() & 1);
      truths.push_back(t);
      preds.push_back(eng() % 3 == 0 ? t : z);
    }
    const bool identical = metrics::subset_accuracy(preds, truths) == 1.0;
    EXPECT_EQ(metrics::f1_micro(preds, truths) == 1.0, identical);
  }
}

TEST(HammingLoss, ZeroIffExactMatch) {
  std::mt19937_64 eng(109);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 1 + static_cast<int>(eng() % 12);
    const int g = 1 + static_cast<int>(eng() % 6);
    std::vector<LabelSet> preds, truths;
    for (int i = 0; i < g; ++i) {
      LabelSet a(d), b(d);
      for (int k = 0; k < d; ++k) {
        a.set(k, eng() & 1);
        b.set(k, eng() & 1);
      }
      preds.push_back(a);
      truths.push_back(b);
    }
    const bool zero_loss = metrics::hamming_loss(preds, truths) == 0.0;
    const bool full_accuracy = metrics::subset_accuracy(preds, truths) == 1.0;
    EXPECT_EQ(zero_loss, full_accuracy);
  }
}

TEST(Averages, KnownCases) {
  std::vector<ForcedPrediction> one{{LabelSet(2), 0.4, 0.9}};
  EXPECT_DOUBLE_EQ(metrics::avg_confidence(one), 0.9);
  std::vector<ForcedPrediction> two{{LabelSet(2), 0.3, 0.8},
                                    {LabelSet(2), 0.5, 1.0}};
  EXPECT_DOUBLE_EQ(metrics::avg_confidence(two), 0.9);
  EXPECT_DOUBLE_EQ(metrics::avg_credibility(two), 0.4);
  EXPECT_THROW(metrics::avg_confidence({}), std::invalid_argument);
}

TEST(SOfCriteria, KnownCases) {
  // Single instance with p-values {true: 0.5, others: 0.1, 0.2}.
  std::vector<std::vector<ScoredCandidate>> tables(1);
  tables[0].push_back({LabelSet::from_bits("100"), PValue{0.5}});
  tables[0].push_back({LabelSet::from_bits("010"), PValue{0.1}});
  tables[0].push_back({LabelSet::from_bits("001"), PValue{0.2}});
  const auto r = metrics::s_of_criteria(tables, sets({"100"}));
  EXPECT_DOUBLE_EQ(r.s, 0.8);
  EXPECT_NEAR(r.of, 0.3, 1e-15);
}

TEST(SOfCriteria, RefusesIncompleteTables) {
  std::vector<std::vector<ScoredCandidate>> tables(1);
  tables[0].push_back({LabelSet::from_bits("010"), PValue{0.1}});
  EXPECT_THROW(metrics::s_of_criteria(tables, sets({"100"})),
               metrics::UnsupportedInEfficientModeError);
}

TEST(SOfCriteria, DifferenceEqualsMeanTruePValue) {
  std::mt19937_64 eng(113);
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  std::vector<std::vector<ScoredCandidate>> tables;
  std::vector<LabelSet> truths;
  double true_sum = 0.0;
  for (int i = 0; i < 50; ++i) {
    std::vector<ScoredCandidate> table;
    for (int c = 0; c < 7; ++c) {
      LabelSet y(3);
      for (int k = 0; k < 3; ++k) y.set(k, (c + 1) >> k & 1);
      table.push_back({y, PValue{unif(eng)}});
    }
    const int truth_idx = static_cast<int>(eng() % 7);
    truths.push_back(table[static_cast<std::size_t>(truth_idx)].labels);
    true_sum += table[static_cast<std::size_t>(truth_idx)].p.value;
    tables.push_back(std::move(table));
  }
  const auto r = metrics::s_of_criteria(tables, truths);
  EXPECT_NEAR(r.s - r.of, true_sum / 50.0, 1e-12);
  EXPECT_GT(r.s, r.of);
}

TEST(SOfCriteria, DegenerateFloorModel) {
  // Every candidate except the truth sits at the p-value floor 1/(n+1):
  // OF is exactly (candidates - 1) * floor.
  const double floor_p = 1.0 / 100.0;
  std::vector<std::vector<ScoredCandidate>> tables(1);
  tables[0].push_back({LabelSet::from_bits("100"), PValue{1.0}});  // truth
  for (const char* bits : {"010", "001", "110", "101", "011", "111"})
    tables[0].push_back({LabelSet::from_bits(bits), PValue{floor_p}});
  const auto r = metrics::s_of_criteria(tables, sets({"100"}));
  EXPECT_NEAR(r.of, 6.0 * floor_p, 1e-15);
  EXPECT_NEAR(r.s, 1.0 + 6.0 * floor_p, 1e-15);
}

TEST(NCriteria, KnownCases) {
  {
    const std::vector<PredictionSetResult> rs{result_of_size(1), result_of_size(1),
                                              result_of_size(1)};
    const auto n = metrics::n_criteria(rs);
    EXPECT_DOUBLE_EQ(n.mean, 1.0);
    EXPECT_DOUBLE_EQ(n.median, 1.0);
  }
  {
    const std::vector<PredictionSetResult> rs{result_of_size(1), result_of_size(3)};
    const auto n = metrics::n_criteria(rs);
    EXPECT_DOUBLE_EQ(n.mean, 2.0);
    EXPECT_DOUBLE_EQ(n.median, 2.0);  // even count: mean of middle two
  }
  {
    const std::vector<PredictionSetResult> rs{result_of_size(1), result_of_size(1),
                                              result_of_size(100)};
    const auto n = metrics::n_criteria(rs);
    EXPECT_DOUBLE_EQ(n.mean, 34.0);
    EXPECT_DOUBLE_EQ(n.median, 1.0);
  }
  EXPECT_THROW(metrics::n_criteria({}), std::invalid_argument);
  PredictionSetResult bad;
  bad.prohibitive = true;
  EXPECT_THROW(metrics::n_criteria({bad}), std::invalid_argument);
}

TEST(EmpiricalErrorCurve, BasicAndMonotone) {
  // Two instances; truth retained at eps=0.1 for both, only one at 0.5.
  const LabelSet truth0 = LabelSet::from_bits("100");
  const LabelSet truth1 = LabelSet::from_bits("010");
  PredictionSetResult a01, b01, a05, b05;
  a01.retained.push_back({truth0, PValue{0.9}});
  b01.retained.push_back({truth1, PValue{0.3}});
  a05.retained.push_back({truth0, PValue{0.9}});
  // b05 drops the truth.
  std::map<double, std::vector<PredictionSetResult>> grid;
  grid[0.1] = {a01, b01};
  grid[0.5] = {a05, b05};
  const auto curve = metrics::empirical_error_curve(grid, {truth0, truth1});
  EXPECT_DOUBLE_EQ(curve.at(0.1), 0.0);
  EXPECT_DOUBLE_EQ(curve.at(0.5), 0.5);

  std::map<double, std::vector<PredictionSetResult>> bad;
  bad[0.1] = {a01};
  EXPECT_THROW(metrics::empirical_error_curve(bad, {truth0, truth1}),
               std::invalid_argument);
}

TEST(EmpiricalErrorCurve, SkipsProhibitiveInstances) {
  const LabelSet truth = LabelSet::from_bits("100");
  PredictionSetResult ok;
  ok.retained.push_back({truth, PValue{0.9}});
  PredictionSetResult prohibitive;
  prohibitive.prohibitive = true;
  std::map<double, std::vector<PredictionSetResult>> grid;
  grid[0.2] = {ok, prohibitive};
  const auto curve = metrics::empirical_error_curve(grid, {truth, truth});
  EXPECT_DOUBLE_EQ(curve.at(0.2), 0.0);
}

}  // namespace
}  // namespace lpicp
