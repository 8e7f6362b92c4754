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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

/// Core domain types for label-powerset inductive conformal prediction:
/// dense fixed-width label-sets, classifier score vectors, and the
/// elementary operations (thresholding, certainty ordering, bit flips,
/// symmetric differences) everything else is built from.
///
/// All types are immutable in spirit: operations are pure functions and
/// instances are safe to share across threads once constructed.
namespace lpicp {

/// Default ceiling on candidates evaluated per test instance before an
/// instance is flagged prohibitive (~5.6e7).
inline constexpr std::uint64_t kDefaultCandidateCap = 56'000'000ULL;

/// Problem dimensions: d unique labels, label-sets restricted to
/// cardinality [1, l], and the per-instance candidate evaluation cap.
class LabelSpace {
 public:
  LabelSpace(int num_labels, int max_cardinality,
             std::uint64_t candidate_cap = kDefaultCandidateCap)
      : d_(num_labels), l_(max_cardinality), candidate_cap_(candidate_cap) {
    if (d_ < 1) throw std::invalid_argument("LabelSpace: d must be >= 1");
    if (l_ < 1 || l_ > d_)
      throw std::invalid_argument("LabelSpace: need 1 <= l <= d");
    if (candidate_cap_ < 1)
      throw std::invalid_argument("LabelSpace: candidate_cap must be >= 1");
  }

  int num_labels() const { return d_; }
  int max_cardinality() const { return l_; }
  std::uint64_t candidate_cap() const { return candidate_cap_; }

 private:
  int d_;
  int l_;
  std::uint64_t candidate_cap_;
};

/// Multi-hot label-set over a fixed number of labels. Width is set at
/// construction; mixing widths in any binary operation is an error, never
/// an implicit padding. Label indices are 0-based in code (label k in the
/// CLI/docs numbering is bit k-1 here).
class LabelSet {
 public:
  explicit LabelSet(int width) : width_(width) {
    if (width < 1) throw std::invalid_argument("LabelSet: width must be >= 1");
    words_.assign(word_count(width), 0);
  }

  /// Parses "101"-style strings, leftmost character = label 0.
  static LabelSet from_bits(std::string_view bits) {
    LabelSet s(static_cast<int>(bits.size()));
    for (int i = 0; i < static_cast<int>(bits.size()); ++i) {
      if (bits[i] == '1') {
        s.set(i, true);
      } else if (bits[i] != '0') {
        throw std::invalid_argument("LabelSet: bit string must be 0/1");
      }
    }
    return s;
  }

  static LabelSet from_indices(int width, std::initializer_list<int> indices) {
    LabelSet s(width);
    for (int i : indices) s.set(i, true);
    return s;
  }

  int width() const { return width_; }

  bool test(int i) const {
    check_index(i);
    return (words_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1ULL;
  }

  void set(int i, bool value) {
    check_index(i);
    const std::uint64_t mask = 1ULL << (i & 63);
    if (value) {
      words_[static_cast<std::size_t>(i) >> 6] |= mask;
    } else {
      words_[static_cast<std::size_t>(i) >> 6] &= ~mask;
    }
  }

  void toggle(int i) {
    check_index(i);
    words_[static_cast<std::size_t>(i) >> 6] ^= 1ULL << (i & 63);
  }

  /// Number of labels present (popcount).
  int count() const {
    int c = 0;
    for (std::uint64_t w : words_) c += std::popcount(w);
    return c;
  }

  bool operator==(const LabelSet& other) const {
    return width_ == other.width_ && words_ == other.words_;
  }
  bool operator!=(const LabelSet& other) const { return !(*this == other); }

  std::string to_bit_string() const {
    std::string s(static_cast<std::size_t>(width_), '0');
    for (int i = 0; i < width_; ++i)
      if (test(i)) s[static_cast<std::size_t>(i)] = '1';
    return s;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  static std::size_t word_count(int width) {
    return (static_cast<std::size_t>(width) + 63) / 64;
  }
  void check_index(int i) const {
    if (i < 0 || i >= width_)
      throw std::out_of_range("LabelSet: label index out of range");
  }

  std::vector<std::uint64_t> words_;
  int width_;
};

/// Raw classifier prediction for one instance: d values in [0, 1].
/// NaN, infinities and out-of-range components are rejected up front.
class ScoreVector {
 public:
  explicit ScoreVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty())
      throw std::invalid_argument("ScoreVector: must have at least one score");
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw std::invalid_argument(
            "ScoreVector: scores must be finite and in [0, 1]");
    }
  }

  int width() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// A score vector paired with its true label-set when known. Test
/// instances have no truth; calibration instances must.
struct LabeledInstance {
  ScoreVector scores;
  std::optional<LabelSet> truth;

  explicit LabeledInstance(ScoreVector s, std::optional<LabelSet> t = std::nullopt)
      : scores(std::move(s)), truth(std::move(t)) {
    if (truth) {
      if (truth->width() != scores.width())
        throw std::invalid_argument(
            "LabeledInstance: truth width does not match score width");
      if (truth->count() < 1)
        throw std::invalid_argument(
            "LabeledInstance: truth must contain at least one label");
    }
  }
};

inline void check_same_width(int a, int b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": width mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) +
                                ")");
}

/// z from thresholding at 0.5; a score of exactly 0.5 maps to 1
/// (floor(o + 0.5) semantics). z minimizes every L_p nonconformity score
/// over the full powerset.
inline LabelSet threshold_prediction(const ScoreVector& o) {
  LabelSet z(o.width());
  for (int k = 0; k < o.width(); ++k)
    if (o[k] >= 0.5) z.set(k, true);
  return z;
}

/// Per-label certainty u_k = |o_k - 0.5|, each in [0, 0.5]. Flipping a
/// low-certainty label changes the nonconformity score least.
inline std::vector<double> certainty_vector(const ScoreVector& o) {
  std::vector<double> u(static_cast<std::size_t>(o.width()));
  for (int k = 0; k < o.width(); ++k)
    u[static_cast<std::size_t>(k)] = std::fabs(o[k] - 0.5);
  return u;
}

/// 0-based label permutation sorting certainties ascending; equal
/// certainties break by ascending label index so the order is total and
/// reproducible.
inline std::vector<int> certainty_order(const std::vector<double>& u) {
  std::vector<int> order(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ua = u[static_cast<std::size_t>(a)];
    const double ub = u[static_cast<std::size_t>(b)];
    return ua < ub || (ua == ub && a < b);
  });
  return order;
}

/// Copy of y with exactly the given label toggled.
inline LabelSet flip(const LabelSet& y, int label) {
  LabelSet out = y;
  out.toggle(label);
  return out;
}

/// Popcount of a xor b: the symmetric-difference cardinality.
inline int symdiff_size(const LabelSet& a, const LabelSet& b) {
  check_same_width(a.width(), b.width(), "symdiff_size");
  int c = 0;
  for (std::size_t w = 0; w < a.words().size(); ++w)
    c += std::popcount(a.words()[w] ^ b.words()[w]);
  return c;
}

/// Positional order on equal-width label-sets: at the first differing
/// label, the set containing that label sorts first. Used for
/// deterministic tie-breaks.
inline bool lex_bit_less(const LabelSet& a, const LabelSet& b) {
  check_same_width(a.width(), b.width(), "lex_bit_less");
  for (std::size_t w = 0; w < a.words().size(); ++w) {
    const std::uint64_t diff = a.words()[w] ^ b.words()[w];
    if (diff != 0) {
      const int bit = std::countr_zero(diff);
      return (a.words()[w] >> bit) & 1ULL;
    }
  }
  return false;
}

/// Canonical stream order: cardinality ascending, then combination
/// order (which coincides with lex_bit_less at equal cardinality).
inline bool enumeration_less(const LabelSet& a, const LabelSet& b) {
  const int ca = a.count();
  const int cb = b.count();
  if (ca != cb) return ca < cb;
  return lex_bit_less(a, b);
}

}  // namespace lpicp
