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
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lpicp/core.hpp"
#include "lpicp/icp.hpp"

/// Brute-force reference implementations, used only by tests and the
/// `verify` CLI command. Everything here is literal exhaustive iteration
/// with no shortcuts: no binary search, no power-space tricks, no shared
/// algorithm code with the production paths, so agreement between the
/// two is meaningful evidence. Hard size caps keep these from being used
/// at scale by accident.
namespace lpicp::oracle {

namespace detail {

/// Plain linear-scan p-value.
inline double linear_p_value(const std::vector<double>& calibration_scores,
                             double alpha) {
  std::size_t count = 0;
  for (double s : calibration_scores)
    if (s >= alpha) ++count;
  return (static_cast<double>(count) + 1.0) /
         (static_cast<double>(calibration_scores.size()) + 1.0);
}

/// Direct ||o - y||_p evaluation.
inline double direct_score(const ScoreVector& o, const LabelSet& y, double p) {
  double sum = 0.0;
  for (int k = 0; k < o.width(); ++k)
    sum += std::pow(std::fabs(o[k] - (y.test(k) ? 1.0 : 0.0)), p);
  return std::pow(sum, 1.0 / p);
}

/// Visits every label-set with cardinality in [1, l] in (cardinality,
/// lexicographic) order via its own recursion.
inline void for_each_valid_set(int d, int l,
                               const std::function<void(const LabelSet&)>& fn) {
  LabelSet current(d);
  std::function<void(int, int)> rec = [&](int start, int remaining) {
    if (remaining == 0) {
      fn(current);
      return;
    }
    for (int pos = start; pos <= d - remaining; ++pos) {
      current.set(pos, true);
      rec(pos + 1, remaining - 1);
      current.set(pos, false);
    }
  };
  for (int k = 1; k <= l; ++k) rec(0, k);
}

/// Saturating candidate-space size, just for the safety caps.
inline std::uint64_t saturating_count(int d, int l, std::uint64_t cap) {
  std::uint64_t total = 0;
  for (int k = 1; k <= l; ++k) {
    long double c = 1.0L;
    for (int i = 1; i <= k; ++i) c = c * (d - k + i) / i;
    if (c > static_cast<long double>(cap)) return cap + 1;
    total += static_cast<std::uint64_t>(c + 0.5L);
    if (total > cap) return cap + 1;
  }
  return total;
}

}  // namespace detail

/// Original label-powerset procedure replayed literally: every valid
/// label-set gets a p-value by linear scan; those with p > epsilon are
/// retained, in (cardinality, lexicographic) order. Refuses spaces over
/// 10^6 candidates.
inline PredictionSetResult brute_force_prediction_set(
    const CalibrationModel& model, const ScoreVector& o, double epsilon,
    const LabelSpace& space) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("brute_force_prediction_set: epsilon in (0,1)");
  check_same_width(o.width(), space.num_labels(), "brute_force_prediction_set");
  const std::uint64_t kCap = 1'000'000;
  if (detail::saturating_count(space.num_labels(), space.max_cardinality(),
                               kCap) > kCap)
    throw std::invalid_argument(
        "brute_force_prediction_set: candidate space too large");

  PredictionSetResult result;
  result.epsilon = epsilon;
  const double p = model.measure().p;
  detail::for_each_valid_set(
      space.num_labels(), space.max_cardinality(), [&](const LabelSet& y) {
        ++result.candidates_evaluated;
        const double alpha = detail::direct_score(o, y, p);
        const double pv = detail::linear_p_value(model.sorted_scores(), alpha);
        if (pv > epsilon)
          result.retained.push_back(ScoredCandidate{y, PValue{pv}});
      });
  return result;
}

/// Exhaustive argmin of the nonconformity score over all valid label-sets
/// (cardinality in [1, l]); ties resolve to the smaller set under
/// positional lexicographic order. Capped at d <= 20.
inline std::pair<LabelSet, double> brute_force_min_nonconformity(
    const ScoreVector& o, const LpMeasure& m, const LabelSpace& space) {
  const int d = space.num_labels();
  check_same_width(o.width(), d, "brute_force_min_nonconformity");
  if (d > 20)
    throw std::invalid_argument("brute_force_min_nonconformity: d too large");
  const int l = space.max_cardinality();

  std::optional<LabelSet> best;
  double best_score = 0.0;
  for (std::uint64_t mask = 1; mask < (1ULL << d); ++mask) {
    if (std::popcount(mask) > l) continue;
    LabelSet y(d);
    for (int k = 0; k < d; ++k)
      if ((mask >> k) & 1ULL) y.set(k, true);
    const double s = detail::direct_score(o, y, m.p);
    if (!best || s < best_score ||
        (s == best_score && lex_bit_less(y, *best))) {
      best = y;
      best_score = s;
    }
  }
  return {*best, best_score};
}

/// The find-t recursion replayed literally: flip the least-certain label,
/// rescore the whole set, repeat until alpha_i0 is surpassed. Returns 0
/// when z itself already exceeds the threshold, nullopt when no number of
/// flips does (or when there is no threshold at all).
inline std::optional<int> brute_force_find_t(const ScoreVector& o,
                                             const CalibrationModel& model,
                                             std::optional<double> alpha_i0,
                                             const LabelSpace& space) {
  const int d = space.num_labels();
  check_same_width(o.width(), d, "brute_force_find_t");
  if (d > 64) throw std::invalid_argument("brute_force_find_t: d too large");
  if (!alpha_i0) return std::nullopt;
  const double p = model.measure().p;

  // z_k = floor(o_k + 0.5)
  LabelSet current(d);
  for (int k = 0; k < d; ++k)
    if (std::floor(o[k] + 0.5) >= 1.0) current.set(k, true);

  if (detail::direct_score(o, current, p) > *alpha_i0) return 0;

  // Certainty ordering, ties by label index.
  std::vector<std::pair<double, int>> u(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k)
    u[static_cast<std::size_t>(k)] = {std::fabs(o[k] - 0.5), k};
  std::sort(u.begin(), u.end());

  for (int nu = 1; nu <= d; ++nu) {
    current.toggle(u[static_cast<std::size_t>(nu - 1)].second);
    if (detail::direct_score(o, current, p) > *alpha_i0) return nu;
  }
  return std::nullopt;
}

/// Forced prediction by exhaustive scan: the highest-p-value candidate
/// (ties: smaller score, then positional lexicographic order), its
/// p-value as credibility, and 1 - the best remaining p-value as
/// confidence (1.0 when no other candidate exists).
inline ForcedPrediction brute_force_forced_prediction(
    const CalibrationModel& model, const ScoreVector& o,
    const LabelSpace& space) {
  check_same_width(o.width(), space.num_labels(),
                   "brute_force_forced_prediction");
  const std::uint64_t kCap = 1'000'000;
  if (detail::saturating_count(space.num_labels(), space.max_cardinality(),
                               kCap) > kCap)
    throw std::invalid_argument(
        "brute_force_forced_prediction: candidate space too large");
  const double p = model.measure().p;

  std::optional<LabelSet> best;
  double best_p = 0.0;
  double best_score = 0.0;
  detail::for_each_valid_set(
      space.num_labels(), space.max_cardinality(), [&](const LabelSet& y) {
        const double s = detail::direct_score(o, y, p);
        const double pv = detail::linear_p_value(model.sorted_scores(), s);
        if (!best || pv > best_p || (pv == best_p && s < best_score) ||
            (pv == best_p && s == best_score && lex_bit_less(y, *best))) {
          best = y;
          best_p = pv;
          best_score = s;
        }
      });

  double second_p = -1.0;
  detail::for_each_valid_set(
      space.num_labels(), space.max_cardinality(), [&](const LabelSet& y) {
        if (y == *best) return;
        const double s = detail::direct_score(o, y, p);
        const double pv = detail::linear_p_value(model.sorted_scores(), s);
        if (pv > second_p) second_p = pv;
      });

  ForcedPrediction out{*best, best_p, 0.0};
  out.confidence = second_p < 0.0 ? 1.0 : 1.0 - second_p;
  return out;
}

}  // namespace lpicp::oracle
