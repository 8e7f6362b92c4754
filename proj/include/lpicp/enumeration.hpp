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

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lpicp/core.hpp"
#include "lpicp/icp.hpp"
#include "lpicp/nonconformity.hpp"

/// Candidate-space machinery: exact label-set counting, full enumeration
/// (the original label-powerset procedure), the find-t search, and the
/// pruned set Q(t) that makes large label spaces tractable.
namespace lpicp {

/// Counts overflow 64 bits well inside the supported range (d up to a few
/// hundred), so all combinatorics run on arbitrary-precision integers.
using BigCount = boost::multiprecision::cpp_int;

inline BigCount binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  BigCount result = 1;
  for (int i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;
  }
  return result;
}

/// c(d, l) = sum_{k=1..l} C(d, k): label-sets with cardinality 1..l.
inline BigCount count_label_sets(int d, int l) {
  if (d < 1 || l < 1 || l > d)
    throw std::invalid_argument("count_label_sets: need 1 <= l <= d");
  BigCount total = 0;
  for (int k = 1; k <= l; ++k) total += binomial(d, k);
  return total;
}

/// Hard ceiling on candidates evaluated for one instance. Instances whose
/// Q(t) would exceed it are flagged prohibitive instead of evaluated.
struct CandidateBudget {
  BigCount max_candidates = BigCount(kDefaultCandidateCap);

  CandidateBudget() = default;
  explicit CandidateBudget(BigCount cap) : max_candidates(std::move(cap)) {
    if (max_candidates < 1)
      throw std::invalid_argument("CandidateBudget: cap must be >= 1");
  }
};

/// Thrown when an enumeration would exceed the candidate budget. Carries
/// the exact required count and, for Q(t) streams, the t it was built for.
class BudgetExceededError : public std::runtime_error {
 public:
  BudgetExceededError(BigCount required, int t, const std::string& what)
      : std::runtime_error(what), required_(std::move(required)), t_(t) {}

  const BigCount& required() const { return required_; }
  int t() const { return t_; }

 private:
  BigCount required_;
  int t_;
};

namespace detail {

/// Lexicographic k-combination step over {0..d-1}. Returns false when the
/// last combination has been consumed.
inline bool next_combination(std::vector<int>& combo, int d) {
  const int k = static_cast<int>(combo.size());
  for (int i = k - 1; i >= 0; --i) {
    if (combo[static_cast<std::size_t>(i)] < d - (k - i)) {
      ++combo[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j)
        combo[static_cast<std::size_t>(j)] =
            combo[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

inline void first_combination(std::vector<int>& combo, int k) {
  combo.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) combo[static_cast<std::size_t>(i)] = i;
}

}  // namespace detail

/// Streams every label-set with cardinality in [1, l] exactly once, in
/// (cardinality, combination-lexicographic) order. Total length is
/// count_label_sets(d, l); staying under any budget is the caller's job
/// (use the checked overload below when in doubt).
class AllSetsEnumerator {
 public:
  explicit AllSetsEnumerator(const LabelSpace& space)
      : d_(space.num_labels()), l_(space.max_cardinality()) {}

  bool next(LabelSet& out) {
    if (k_ > l_) return false;
    if (fresh_) {
      detail::first_combination(combo_, k_);
      fresh_ = false;
    } else if (!detail::next_combination(combo_, d_)) {
      ++k_;
      if (k_ > l_) return false;
      detail::first_combination(combo_, k_);
    }
    emit(out);
    return true;
  }

 private:
  void emit(LabelSet& out) const {
    out = LabelSet(d_);
    for (int idx : combo_) out.set(idx, true);
  }

  int d_;
  int l_;
  int k_ = 1;
  bool fresh_ = true;
  std::vector<int> combo_;
};

/// Budget-checked stream over the full candidate space; refuses up front,
/// naming the exact count, when c(d, l) exceeds the budget.
inline AllSetsEnumerator enumerate_all(const LabelSpace& space,
                                       const CandidateBudget& budget) {
  const BigCount total = count_label_sets(space.num_labels(), space.max_cardinality());
  if (total > budget.max_candidates)
    throw BudgetExceededError(
        total, space.num_labels() + 1,
        "enumerate_all: candidate space has " + total.str() +
            " label-sets, over the budget of " + budget.max_candidates.str());
  return AllSetsEnumerator(space);
}

/// Exact |Q(t)|: label-sets within symmetric difference < t of z that also
/// satisfy the cardinality bounds [1, l]. A set at flip distance j turns
/// off a on-bits of z and turns on b = j - a off-bits, so its cardinality
/// is |z| - a + b; everything else is binomial counting.
inline BigCount q_size(const LabelSpace& space, const LabelSet& z, int t) {
  check_same_width(z.width(), space.num_labels(), "q_size");
  if (t < 0) throw std::invalid_argument("q_size: t must be >= 0");
  const int d = space.num_labels();
  const int l = space.max_cardinality();
  const int zc = z.count();
  BigCount total = 0;
  const int max_j = std::min(t - 1, d);
  for (int j = 0; j <= max_j; ++j) {
    for (int a = std::max(0, j - (d - zc)); a <= std::min(j, zc); ++a) {
      const int b = j - a;
      const int card = zc - a + b;
      if (card < 1 || card > l) continue;
      total += binomial(zc, a) * binomial(d - zc, b);
    }
  }
  return total;
}

/// Streams Q(t): all valid label-sets differing from z in fewer than t
/// labels, in (flip count ascending, flip-combination lexicographic)
/// order. Construction refuses with the exact size when |Q(t)| exceeds
/// the budget.
class QSetEnumerator {
 public:
  QSetEnumerator(const LabelSpace& space, LabelSet z, int t,
                 const CandidateBudget& budget)
      : space_(space), z_(std::move(z)), t_(t) {
    check_same_width(z_.width(), space.num_labels(), "QSetEnumerator");
    if (t < 0) throw std::invalid_argument("QSetEnumerator: t must be >= 0");
    const BigCount size = q_size(space, z_, t);
    if (size > budget.max_candidates)
      throw BudgetExceededError(
          size, t,
          "QSetEnumerator: |Q(" + std::to_string(t) + ")| = " + size.str() +
              " exceeds the budget of " + budget.max_candidates.str());
  }

  bool next(LabelSet& out) {
    const int d = space_.num_labels();
    while (j_ < t_ && j_ <= d) {
      bool have = false;
      if (fresh_) {
        detail::first_combination(combo_, j_);
        fresh_ = false;
        have = true;
      } else if (j_ > 0 && detail::next_combination(combo_, d)) {
        have = true;
      }
      if (!have) {
        ++j_;
        fresh_ = true;
        continue;
      }
      int card = z_.count();
      for (int idx : combo_) card += z_.test(idx) ? -1 : +1;
      if (card < 1 || card > space_.max_cardinality()) continue;
      out = z_;
      for (int idx : combo_) out.toggle(idx);
      return true;
    }
    return false;
  }

 private:
  LabelSpace space_;
  LabelSet z_;
  int t_;
  int j_ = 0;
  bool fresh_ = true;
  std::vector<int> combo_;
};

namespace detail {

inline std::optional<int> find_t_profiled(const ScoreProfile& profile,
                                          double alpha_pow, int d) {
  double running = profile.base.sum;
  if (running > alpha_pow) return 0;
  for (int nu = 1; nu <= d; ++nu) {
    running += profile.increment[static_cast<std::size_t>(
        profile.order[static_cast<std::size_t>(nu - 1)])];
    if (running > alpha_pow) return nu;
  }
  return std::nullopt;
}

}  // namespace detail

/// The minimum number of cheapest flips of z that pushes the nonconformity
/// score past alpha_i0: 0 when z itself already exceeds it (empty
/// prediction set), nullopt (unbounded) when even flipping every label
/// stays within the threshold, in which case Q must cover the whole
/// space. A nullopt threshold (no exclusion possible) is unbounded by
/// definition. Works in p-th-power space on the precomputed increments.
inline std::optional<int> find_t(const CalibrationModel& model,
                                 const ScoreVector& o,
                                 std::optional<double> alpha_i0) {
  check_same_width(o.width(), model.space().num_labels(), "find_t");
  if (!alpha_i0) return std::nullopt;
  const ScoreProfile profile(o, model.measure());
  return detail::find_t_profiled(profile, std::pow(*alpha_i0, model.measure().p),
                                 o.width());
}

namespace detail {

/// Depth-first walk over j-flip combinations in lexicographic order,
/// carrying the candidate's power-space score so each leaf costs O(1)
/// beyond the p-value rank query.
template <typename Evaluate>
void walk_q_combinations(const ScoreProfile& profile, const LabelSpace& space,
                         int t, Evaluate&& evaluate) {
  const int d = space.num_labels();
  const int l = space.max_cardinality();
  LabelSet current = profile.z;
  const int zc = profile.z.count();

  if (t >= 1 && zc >= 1 && zc <= l) evaluate(current, profile.base.sum);

  auto recurse = [&](auto&& self, int start, int remaining, double sum,
                     int card) -> void {
    if (remaining == 0) {
      if (card >= 1 && card <= l) evaluate(current, sum);
      return;
    }
    for (int pos = start; pos <= d - remaining; ++pos) {
      const bool was_set = current.test(pos);
      current.toggle(pos);
      self(self, pos + 1, remaining - 1,
           sum + profile.increment[static_cast<std::size_t>(pos)],
           card + (was_set ? -1 : +1));
      current.toggle(pos);
    }
  };
  for (int j = 1; j < t && j <= d; ++j)
    recurse(recurse, 0, j, profile.base.sum, zc);
}

}  // namespace detail

/// The efficient label-powerset procedure: derive the exclusion threshold
/// from the calibration scores, find t, and evaluate only Q(t), with
/// outputs identical to evaluating the full candidate space. Instances
/// whose Q(t) exceeds the budget come back flagged prohibitive with
/// nothing evaluated. t_used is d+1 on the unbounded path (Q covers
/// everything).
inline PredictionSetResult efficient_prediction_set(
    const CalibrationModel& model, const ScoreVector& o, double epsilon,
    const CandidateBudget& budget) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument(
        "efficient_prediction_set: epsilon must be in (0, 1)");
  const LabelSpace& space = model.space();
  check_same_width(o.width(), space.num_labels(), "efficient_prediction_set");

  const std::optional<double> alpha_i0 = threshold_alpha(model, epsilon);
  const ScoreProfile profile(o, model.measure());

  std::optional<int> t;
  if (alpha_i0) {
    t = detail::find_t_profiled(
        profile, std::pow(*alpha_i0, model.measure().p), space.num_labels());
  }

  if (!t) {
    // No label-set can be ruled out: evaluate the whole valid space.
    const int t_all = space.num_labels() + 1;
    const BigCount total =
        count_label_sets(space.num_labels(), space.max_cardinality());
    if (total > budget.max_candidates) {
      PredictionSetResult result;
      result.epsilon = epsilon;
      result.t_used = t_all;
      result.prohibitive = true;
      return result;
    }
    AllSetsEnumerator all(space);
    PredictionSetResult result =
        prediction_set_from_candidates(model, o, all, epsilon);
    result.t_used = t_all;
    return result;
  }

  PredictionSetResult result;
  result.epsilon = epsilon;
  result.t_used = *t;

  const BigCount required = q_size(space, profile.z, *t);
  if (required > budget.max_candidates) {
    result.prohibitive = true;
    return result;
  }

  // Power-space calibration scores; pow is monotone so the array stays
  // sorted and rank queries match the raw-score counts.
  const std::vector<double>& raw = model.sorted_scores();
  std::vector<double> cal_pow(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    cal_pow[i] = std::pow(raw[i], model.measure().p);

  const std::size_t n_cal = raw.size();
  detail::walk_q_combinations(
      profile, space, *t, [&](const LabelSet& y, double sum_pow) {
        ++result.candidates_evaluated;
        const std::size_t count = detail::count_at_least(cal_pow, sum_pow);
        const double p = detail::p_from_count(count, n_cal);
        if (p > epsilon) result.retained.push_back(ScoredCandidate{y, PValue{p}});
      });
  return result;
}

/// Budget defaults to the label space's per-instance candidate cap.
inline PredictionSetResult efficient_prediction_set(const CalibrationModel& model,
                                                    const ScoreVector& o,
                                                    double epsilon) {
  return efficient_prediction_set(
      model, o, epsilon,
      CandidateBudget{BigCount(model.space().candidate_cap())});
}

}  // namespace lpicp
