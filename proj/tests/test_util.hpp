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
#include <random>
#include <vector>

#include "lpicp/core.hpp"
#include "lpicp/icp.hpp"

namespace lpicp::testutil {

template <typename Enumerator>
std::vector<LabelSet> collect(Enumerator&& en) {
  std::vector<LabelSet> out;
  LabelSet buf(1);
  while (en.next(buf)) out.push_back(buf);
  return out;
}

inline std::vector<ScoredCandidate> canonical(std::vector<ScoredCandidate> v) {
  std::sort(v.begin(), v.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    return enumeration_less(a.labels, b.labels);
  });
  return v;
}

/// Bit-exact comparison of two retained lists, order-insensitive.
inline bool same_retained(const std::vector<ScoredCandidate>& a,
                          const std::vector<ScoredCandidate>& b) {
  if (a.size() != b.size()) return false;
  const auto ca = canonical(a);
  const auto cb = canonical(b);
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (ca[i].labels != cb[i].labels) return false;
    if (ca[i].p.value != cb[i].p.value) return false;
  }
  return true;
}

inline ScoreVector random_scores(std::mt19937_64& eng, int d) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(d));
  for (double& x : v) x = unif(eng);
  return ScoreVector(std::move(v));
}

inline CalibrationModel random_model(std::mt19937_64& eng, int d, int l, int n,
                                     double p, double scale = 2.0) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) scores.push_back(scale * unif(eng));
  return CalibrationModel(std::move(scores), LpMeasure(p), LabelSpace(d, l));
}

}  // namespace lpicp::testutil
