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
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lpicp/core.hpp"
#include "lpicp/nonconformity.hpp"

/// Inductive conformal machinery: the calibration-score model ("general
/// rule"), p-values, significance thresholds, prediction sets over a
/// candidate stream, and forced prediction with confidence/credibility.
namespace lpicp {

/// Sorted nonconformity scores of the calibration set plus the measure
/// and label space they were computed under. Immutable and shareable;
/// prediction over distinct test instances is embarrassingly parallel.
class CalibrationModel {
 public:
  CalibrationModel(std::vector<double> scores, LpMeasure measure,
                   LabelSpace space)
      : sorted_scores_(std::move(scores)),
        measure_(measure),
        space_(space) {
    if (sorted_scores_.empty())
      throw std::invalid_argument("CalibrationModel: no calibration scores");
    for (double s : sorted_scores_) {
      if (!std::isfinite(s) || s < 0.0)
        throw std::invalid_argument(
            "CalibrationModel: scores must be finite and >= 0");
    }
    std::sort(sorted_scores_.begin(), sorted_scores_.end());
  }

  const std::vector<double>& sorted_scores() const { return sorted_scores_; }
  const LpMeasure& measure() const { return measure_; }
  const LabelSpace& space() const { return space_; }
  std::size_t size() const { return sorted_scores_.size(); }

 private:
  std::vector<double> sorted_scores_;
  LpMeasure measure_;
  LabelSpace space_;
};

/// Scores every calibration instance against its true label-set.
inline CalibrationModel calibrate(const std::vector<LabeledInstance>& instances,
                                  const LpMeasure& m, const LabelSpace& space) {
  if (instances.empty())
    throw std::invalid_argument("calibrate: empty calibration set");
  std::vector<double> scores;
  scores.reserve(instances.size());
  for (const LabeledInstance& inst : instances) {
    if (!inst.truth)
      throw std::invalid_argument("calibrate: calibration instance without truth");
    check_same_width(inst.scores.width(), space.num_labels(), "calibrate");
    scores.push_back(score(inst.scores, *inst.truth, m));
  }
  return CalibrationModel(std::move(scores), m, space);
}

/// p = (#{calibration scores >= alpha} + 1) / (n_cal + 1), always in
/// [1/(n_cal+1), 1].
struct PValue {
  double value = 0.0;
};

namespace detail {

/// Tie-inclusive count of sorted values >= x.
inline std::size_t count_at_least(const std::vector<double>& sorted, double x) {
  return static_cast<std::size_t>(
      sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), x));
}

inline double p_from_count(std::size_t count, std::size_t n_cal) {
  return (static_cast<double>(count) + 1.0) / (static_cast<double>(n_cal) + 1.0);
}

}  // namespace detail

inline PValue p_value(const CalibrationModel& model, double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0)
    throw std::invalid_argument("p_value: alpha must be finite and >= 0");
  const std::size_t count = detail::count_at_least(model.sorted_scores(), alpha);
  return PValue{detail::p_from_count(count, model.size())};
}

/// The exclusion threshold alpha_i0(epsilon): the largest calibration
/// score whose tie-inclusive exceedance count stays above
/// epsilon*(n_cal+1) - 1. Any candidate scoring strictly above it has
/// p-value <= epsilon and is provably outside the prediction set.
///
/// Returns nullopt when epsilon < 1/(n_cal+1): the p-value floor then
/// exceeds epsilon, no candidate can ever be excluded, and no finite
/// threshold exists (callers must evaluate the whole candidate space).
/// Equivalently: alpha_i0 is the ceil((1-eps)(n_cal+1))-th smallest
/// calibration score, nullopt when that rank exceeds n_cal.
inline std::optional<double> threshold_alpha(const CalibrationModel& model,
                                             double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("threshold_alpha: epsilon must be in (0, 1)");
  const std::vector<double>& s = model.sorted_scores();
  const double n1 = static_cast<double>(s.size()) + 1.0;
  if (epsilon * n1 < 1.0) return std::nullopt;
  const double bound = epsilon * n1 - 1.0;
  for (std::size_t i = s.size(); i-- > 0;) {
    const double v = s[i];
    const std::size_t count = detail::count_at_least(s, v);
    if (static_cast<double>(count) > bound) return v;
    while (i > 0 && s[i - 1] == v) --i;  // duplicates share the count
  }
  return std::nullopt;  // unreachable for epsilon in (0, 1)
}

/// A candidate label-set together with its p-value.
struct ScoredCandidate {
  LabelSet labels;
  PValue p;
};

/// Per-instance prediction-set output. When prohibitive is set the
/// instance exceeded the candidate budget: retained is empty, nothing was
/// evaluated, and the result must not enter validity statistics.
struct PredictionSetResult {
  std::vector<ScoredCandidate> retained;
  int t_used = 0;
  std::uint64_t candidates_evaluated = 0;  // c^q
  bool prohibitive = false;
  double epsilon = 0.0;
};

/// Assigns a p-value to every candidate from the stream and keeps those
/// with p > epsilon. This is the original label-powerset procedure; the
/// stream is typically the full cardinality-[1,l] space.
///
/// Enumerator contract: bool next(LabelSet&) filling width-d sets with
/// cardinality in [1, l], each exactly once.
template <typename Enumerator>
PredictionSetResult prediction_set_from_candidates(const CalibrationModel& model,
                                                   const ScoreVector& o,
                                                   Enumerator&& candidates,
                                                   double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument(
        "prediction_set_from_candidates: epsilon must be in (0, 1)");
  check_same_width(o.width(), model.space().num_labels(),
                   "prediction_set_from_candidates");
  PredictionSetResult result;
  result.epsilon = epsilon;
  LabelSet y(o.width());
  while (candidates.next(y)) {
    ++result.candidates_evaluated;
    const double alpha = score(o, y, model.measure());
    const PValue p = p_value(model, alpha);
    if (p.value > epsilon) result.retained.push_back(ScoredCandidate{y, p});
  }
  return result;
}

/// Single best label-set plus how much to trust it: credibility is its
/// own p-value, confidence is one minus the runner-up's p-value.
struct ForcedPrediction {
  LabelSet prediction;
  double credibility = 0.0;
  double confidence = 0.0;
};

namespace detail {

/// Minimal-nonconformity label-set with cardinality in [1, l]. z itself
/// when valid; otherwise the nearest valid repair: the single best label
/// when z is empty, the l highest-scoring labels when z is too large.
/// Equal-certainty ties resolve so the positional-lex-smallest set wins.
inline LabelSet best_valid_candidate(const ScoreProfile& profile,
                                     const LabelSpace& space) {
  const int zc = profile.z.count();
  const int l = space.max_cardinality();
  if (zc >= 1 && zc <= l) return profile.z;
  if (zc == 0) {
    // All scores below 0.5: the cheapest valid set is the singleton of the
    // least-certain (= highest-scoring) label.
    LabelSet out(profile.z.width());
    out.set(profile.order.front(), true);
    return out;
  }
  // zc > l: drop the zc - l on-bits with the cheapest flip cost; on ties
  // drop the higher label index so smaller indices stay set.
  std::vector<int> on_bits;
  for (int k = 0; k < profile.z.width(); ++k)
    if (profile.z.test(k)) on_bits.push_back(k);
  std::sort(on_bits.begin(), on_bits.end(), [&](int a, int b) {
    const double ia = profile.increment[static_cast<std::size_t>(a)];
    const double ib = profile.increment[static_cast<std::size_t>(b)];
    return ia < ib || (ia == ib && a > b);
  });
  LabelSet out = profile.z;
  for (int i = 0; i < zc - l; ++i) out.set(on_bits[static_cast<std::size_t>(i)], false);
  return out;
}

/// Second-lowest-nonconformity valid label-set, derived in closed form
/// from the certainty ordering (no enumeration). nullopt when the valid
/// space has a single member.
inline std::optional<LabelSet> runner_up_candidate(const ScoreProfile& profile,
                                                   const LabelSpace& space) {
  const int d = profile.z.width();
  const int l = space.max_cardinality();
  const int zc = profile.z.count();

  if (zc >= 1 && zc <= l) {
    // Best is z; the runner-up is the first cardinality-valid flip in
    // certainty order.
    for (int k : profile.order) {
      const int card = zc + (profile.z.test(k) ? -1 : +1);
      if (card >= 1 && card <= l) return flip(profile.z, k);
    }
    // No single flip is valid: only possible when l == 1 and zc == 1.
    // The runner-up swaps the on-bit for the cheapest off-bit.
    int on_bit = -1;
    for (int k = 0; k < d; ++k)
      if (profile.z.test(k)) on_bit = k;
    for (int k : profile.order) {
      if (!profile.z.test(k)) {
        LabelSet out = profile.z;
        out.set(on_bit, false);
        out.set(k, true);
        return out;
      }
    }
    return std::nullopt;  // d == 1: nothing else to predict
  }

  if (zc == 0) {
    // Best is the singleton of order[0]; next best is the next singleton.
    if (d < 2) return std::nullopt;
    LabelSet out(d);
    out.set(profile.order[1], true);
    return out;
  }

  // zc > l: best drops the m cheapest on-bits; the runner-up swaps the
  // m-th cheapest dropped bit for the (m+1)-th.
  std::vector<int> on_bits;
  for (int k = 0; k < d; ++k)
    if (profile.z.test(k)) on_bits.push_back(k);
  std::sort(on_bits.begin(), on_bits.end(), [&](int a, int b) {
    const double ia = profile.increment[static_cast<std::size_t>(a)];
    const double ib = profile.increment[static_cast<std::size_t>(b)];
    return ia < ib || (ia == ib && a > b);
  });
  const int m = zc - l;
  LabelSet out = profile.z;
  for (int i = 0; i < m - 1; ++i) out.set(on_bits[static_cast<std::size_t>(i)], false);
  out.set(on_bits[static_cast<std::size_t>(m)], false);
  return out;
}

}  // namespace detail

/// Forced prediction: the minimal-nonconformity valid label-set (z when
/// its cardinality is in [1, l], otherwise the documented fallback), its
/// p-value as credibility, and 1 - (runner-up p-value) as confidence.
/// The certainty ordering pins the runner-up without enumerating candidates.
/// Degenerate single-candidate spaces (d == 1) get confidence 1.
inline ForcedPrediction forced_prediction(const CalibrationModel& model,
                                          const ScoreVector& o) {
  check_same_width(o.width(), model.space().num_labels(), "forced_prediction");
  const ScoreProfile profile(o, model.measure());

  ForcedPrediction out{detail::best_valid_candidate(profile, model.space()), 0.0,
                       0.0};
  out.credibility = p_value(model, score(o, out.prediction, model.measure())).value;

  const std::optional<LabelSet> runner =
      detail::runner_up_candidate(profile, model.space());
  if (runner) {
    out.confidence =
        1.0 - p_value(model, score(o, *runner, model.measure())).value;
  } else {
    out.confidence = 1.0;
  }
  return out;
}

}  // namespace lpicp
