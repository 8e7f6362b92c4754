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

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lpicp/core.hpp"

namespace lpicp {

/// L_p nonconformity measure: alpha = ||o - y||_p. Larger p concentrates
/// the score on the worst-predicted label; smaller p weighs all labels
/// evenly. p is any real >= 1 (2, 4 and 8 are the usual presets).
struct LpMeasure {
  double p;

  explicit LpMeasure(double exponent) : p(exponent) {
    if (!std::isfinite(p) || p < 1.0)
      throw std::invalid_argument("LpMeasure: p must be finite and >= 1");
  }
};

/// ||o - y||_p. Nonnegative, at most d^(1/p).
inline double score(const ScoreVector& o, const LabelSet& y,
                    const LpMeasure& m) {
  check_same_width(o.width(), y.width(), "score");
  double sum = 0.0;
  for (int k = 0; k < o.width(); ++k) {
    const double diff = std::fabs(o[k] - (y.test(k) ? 1.0 : 0.0));
    sum += std::pow(diff, m.p);
  }
  return std::pow(sum, 1.0 / m.p);
}

/// Per-label terms |o_k - z_k|^p for z = threshold_prediction(o), plus
/// their sum. score(o, z, m) == sum^(1/p); the sum is the floor all
/// incremental flip costs are added onto.
struct BaseTerms {
  std::vector<double> terms;
  double sum = 0.0;
};

inline BaseTerms base_terms(const ScoreVector& o, const LabelSet& z,
                            const LpMeasure& m) {
  check_same_width(o.width(), z.width(), "base_terms");
  BaseTerms out;
  out.terms.resize(static_cast<std::size_t>(o.width()));
  for (int k = 0; k < o.width(); ++k) {
    assert(z.test(k) == (o[k] >= 0.5) && "z must be threshold_prediction(o)");
    const double diff = std::fabs(o[k] - (z.test(k) ? 1.0 : 0.0));
    const double term = std::pow(diff, m.p);
    out.terms[static_cast<std::size_t>(k)] = term;
    out.sum += term;
  }
  return out;
}

/// Cost, in p-th-power space, of flipping label k away from its
/// thresholded value: (0.5 + u_k)^p - (0.5 - u_k)^p with u_k = |o_k - 0.5|.
/// Nonnegative and strictly increasing in u_k, which is what makes the
/// certainty ordering also the cheapest-flip ordering.
inline double flip_increment(double o_k, bool z_k, double p) {
  assert(z_k == (o_k >= 0.5) && "z_k must be the thresholded bit");
  (void)z_k;
  const double u = std::fabs(o_k - 0.5);
  return std::pow(0.5 + u, p) - std::pow(0.5 - u, p);
}

/// Everything the efficient algorithm needs about one test instance,
/// computed once: z, certainties, the cheap-flip ordering, base terms and
/// per-label flip increments (all in p-th-power space).
struct ScoreProfile {
  LabelSet z;
  std::vector<double> certainty;
  std::vector<int> order;       // labels sorted by (certainty, index)
  BaseTerms base;
  std::vector<double> increment;  // flip cost per label, power space

  ScoreProfile(const ScoreVector& o, const LpMeasure& m)
      : z(threshold_prediction(o)),
        certainty(certainty_vector(o)),
        order(certainty_order(certainty)),
        base(base_terms(o, z, m)) {
    increment.resize(static_cast<std::size_t>(o.width()));
    for (int k = 0; k < o.width(); ++k)
      increment[static_cast<std::size_t>(k)] =
          flip_increment(o[k], z.test(k), m.p);
  }
};

}  // namespace lpicp
