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

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lpicp/core.hpp"
#include "lpicp/icp.hpp"

/// Forced-prediction and prediction-set evaluation metrics, plus the
/// empirical error-rate curve. All pure aggregations with fixed summation
/// order, so parallel callers get deterministic results.
namespace lpicp::metrics {

/// Raised when a criterion needs complete per-candidate p-value tables
/// but was handed the partial tables the efficient mode produces.
class UnsupportedInEfficientModeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

inline void check_paired(std::size_t a, std::size_t b, const char* what) {
  if (a == 0) throw std::invalid_argument(std::string(what) + ": empty input");
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": length mismatch");
}

}  // namespace detail

/// Fraction of instances whose prediction matches the truth exactly.
inline double subset_accuracy(const std::vector<LabelSet>& preds,
                              const std::vector<LabelSet>& truths) {
  detail::check_paired(preds.size(), truths.size(), "subset_accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == truths[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

/// Micro-averaged F1: pooled true-positive/support counts, so frequent
/// labels weigh more. 0 when the denominator vanishes.
inline double f1_micro(const std::vector<LabelSet>& preds,
                       const std::vector<LabelSet>& truths) {
  detail::check_paired(preds.size(), truths.size(), "f1_micro");
  long long tp = 0, t_total = 0, z_total = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    check_same_width(preds[i].width(), truths[i].width(), "f1_micro");
    for (int j = 0; j < preds[i].width(); ++j) {
      const bool t = truths[i].test(j);
      const bool z = preds[i].test(j);
      tp += (t && z) ? 1 : 0;
      t_total += t ? 1 : 0;
      z_total += z ? 1 : 0;
    }
  }
  const long long denom = t_total + z_total;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

/// Macro-averaged F1: per-label F1 averaged over labels with equal
/// weight; labels never predicted nor present contribute 0.
inline double f1_macro(const std::vector<LabelSet>& preds,
                       const std::vector<LabelSet>& truths) {
  detail::check_paired(preds.size(), truths.size(), "f1_macro");
  const int d = truths.front().width();
  double total = 0.0;
  for (int j = 0; j < d; ++j) {
    long long tp = 0, t_total = 0, z_total = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool t = truths[i].test(j);
      const bool z = preds[i].test(j);
      tp += (t && z) ? 1 : 0;
      t_total += t ? 1 : 0;
      z_total += z ? 1 : 0;
    }
    const long long denom = t_total + z_total;
    if (denom != 0) total += 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return total / static_cast<double>(d);
}

/// Mean per-bit disagreement: (1/(g*d)) * sum of symmetric differences.
inline double hamming_loss(const std::vector<LabelSet>& preds,
                           const std::vector<LabelSet>& truths) {
  detail::check_paired(preds.size(), truths.size(), "hamming_loss");
  long long bits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    bits += symdiff_size(preds[i], truths[i]);
  return static_cast<double>(bits) /
         (static_cast<double>(preds.size()) *
          static_cast<double>(truths.front().width()));
}

inline double avg_confidence(const std::vector<ForcedPrediction>& forced) {
  if (forced.empty()) throw std::invalid_argument("avg_confidence: empty input");
  double sum = 0.0;
  for (const ForcedPrediction& f : forced) sum += f.confidence;
  return sum / static_cast<double>(forced.size());
}

inline double avg_credibility(const std::vector<ForcedPrediction>& forced) {
  if (forced.empty()) throw std::invalid_argument("avg_credibility: empty input");
  double sum = 0.0;
  for (const ForcedPrediction& f : forced) sum += f.credibility;
  return sum / static_cast<double>(forced.size());
}

struct SOfCriteria {
  double s = 0.0;
  double of = 0.0;
};

/// S = mean per-instance sum of p-values over all candidates; OF = the
/// same excluding the true label-set's p-value. Requires complete
/// per-candidate tables (full-enumeration mode only); a table missing
/// its truth signals efficient-mode input and is refused.
inline SOfCriteria s_of_criteria(
    const std::vector<std::vector<ScoredCandidate>>& pvalue_tables,
    const std::vector<LabelSet>& truths) {
  detail::check_paired(pvalue_tables.size(), truths.size(), "s_of_criteria");
  double s_total = 0.0;
  double true_total = 0.0;
  for (std::size_t i = 0; i < pvalue_tables.size(); ++i) {
    double row = 0.0;
    const double* true_p = nullptr;
    for (const ScoredCandidate& c : pvalue_tables[i]) {
      row += c.p.value;
      if (c.labels == truths[i]) true_p = &c.p.value;
    }
    if (true_p == nullptr)
      throw UnsupportedInEfficientModeError(
          "s_of_criteria: table lacks the true label-set; complete "
          "p-value tables exist only in original (full-enumeration) mode");
    s_total += row;
    true_total += *true_p;
  }
  const double g = static_cast<double>(pvalue_tables.size());
  return SOfCriteria{s_total / g, (s_total - true_total) / g};
}

struct NCriteria {
  double mean = 0.0;
  double median = 0.0;
};

/// Mean and median prediction-set size. Callers exclude prohibitive
/// instances first; passing one here is an error. Even-count medians are
/// the mean of the two middle values.
inline NCriteria n_criteria(const std::vector<PredictionSetResult>& results) {
  if (results.empty()) throw std::invalid_argument("n_criteria: empty input");
  std::vector<std::size_t> sizes;
  sizes.reserve(results.size());
  double sum = 0.0;
  for (const PredictionSetResult& r : results) {
    if (r.prohibitive)
      throw std::invalid_argument(
          "n_criteria: prohibitive results must be excluded by the caller");
    sizes.push_back(r.retained.size());
    sum += static_cast<double>(r.retained.size());
  }
  std::sort(sizes.begin(), sizes.end());
  const std::size_t n = sizes.size();
  const double median =
      n % 2 == 1 ? static_cast<double>(sizes[n / 2])
                 : (static_cast<double>(sizes[n / 2 - 1]) +
                    static_cast<double>(sizes[n / 2])) /
                       2.0;
  return NCriteria{sum / static_cast<double>(n), median};
}

/// Error rate per significance level: the fraction of instances whose
/// truth is absent from the retained set. Prohibitive instances are
/// excluded from both numerator and denominator (they never produced a
/// prediction set).
inline std::map<double, double> empirical_error_curve(
    const std::map<double, std::vector<PredictionSetResult>>& results_by_epsilon,
    const std::vector<LabelSet>& truths) {
  if (results_by_epsilon.empty())
    throw std::invalid_argument("empirical_error_curve: empty grid");
  std::map<double, double> curve;
  for (const auto& [epsilon, results] : results_by_epsilon) {
    detail::check_paired(results.size(), truths.size(), "empirical_error_curve");
    std::size_t considered = 0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i].prohibitive) continue;
      ++considered;
      bool found = false;
      for (const ScoredCandidate& c : results[i].retained) {
        if (c.labels == truths[i]) {
          found = true;
          break;
        }
      }
      if (!found) ++errors;
    }
    if (considered == 0)
      throw std::invalid_argument(
          "empirical_error_curve: no usable instances at one grid point");
    curve[epsilon] =
        static_cast<double>(errors) / static_cast<double>(considered);
  }
  return curve;
}

/// Aggregate report over one test set. S/OF are present only for
/// full-enumeration runs; the error-rate map may be empty when retained
/// sets were not kept. prohibitive_fraction is over (instance, epsilon)
/// evaluations.
struct EvaluationReport {
  double ca = 0.0;
  double f1_micro = 0.0;
  double f1_macro = 0.0;
  double hamming_loss = 0.0;
  double avg_confidence = 0.0;
  double avg_credibility = 0.0;
  std::optional<double> s_criterion;
  std::optional<double> of_criterion;
  std::map<double, double> n_by_epsilon;
  std::map<double, double> n_median_by_epsilon;
  std::map<double, double> error_rate_by_epsilon;
  double prohibitive_fraction = 0.0;
};

}  // namespace lpicp::metrics
