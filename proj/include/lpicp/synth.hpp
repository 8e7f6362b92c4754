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

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lpicp/core.hpp"

/// Deterministic generator of exchangeable (score vector, label-set)
/// pairs, so conformal validity and metric behavior are testable without
/// external corpora or trained classifiers.
///
/// Randomness is fully pinned: each instance draws from its own
/// std::mt19937_64 (bit-exact by the standard) seeded from
/// splitmix64(seed, instance index); uniforms take the top 53 engine bits
/// and normals come from Box–Muller on those uniforms. Identical configs
/// therefore produce bit-identical output on any platform, and instances
/// are independent, hence exchangeable.
namespace lpicp::synth {

struct GeneratorConfig {
  int d = 0;
  int l = 0;
  int n_instances = 0;
  std::uint64_t seed = 0;
  std::vector<double> label_prevalence;  // per-label P(bit set), each in (0,1)
  double noise_scale = 0.1;              // score spread around the true bit
  double quality = 1.0;                  // P(score is informative vs uniform)
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51ed2701ULL));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// One standard normal via Box–Muller (cosine branch only).
inline double standard_normal(std::mt19937_64& eng) {
  const double u1 = 1.0 - uniform01(eng);  // (0, 1]
  const double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

inline void validate(const GeneratorConfig& cfg) {
  if (cfg.d < 1 || cfg.l < 1 || cfg.l > cfg.d)
    throw std::invalid_argument("GeneratorConfig: need 1 <= l <= d");
  if (cfg.n_instances < 1)
    throw std::invalid_argument("GeneratorConfig: n_instances must be >= 1");
  if (static_cast<int>(cfg.label_prevalence.size()) != cfg.d)
    throw std::invalid_argument("GeneratorConfig: prevalence must have d entries");
  for (double q : cfg.label_prevalence)
    if (!(q > 0.0 && q < 1.0))
      throw std::invalid_argument("GeneratorConfig: prevalence must be in (0,1)");
  if (!(cfg.noise_scale > 0.0))
    throw std::invalid_argument("GeneratorConfig: noise_scale must be > 0");
  if (!(cfg.quality >= 0.0 && cfg.quality <= 1.0))
    throw std::invalid_argument("GeneratorConfig: quality must be in [0,1]");
}

}  // namespace detail

/// Uniform prevalence helper for the common symmetric case.
inline std::vector<double> uniform_prevalence(int d, double q) {
  return std::vector<double>(static_cast<std::size_t>(d), q);
}

/// Draws n_instances i.i.d. pairs: the truth is per-label Bernoulli,
/// rejection-resampled until its cardinality lands in [1, l]; each score
/// is clamp(truth_bit + noise_scale * normal) with probability `quality`,
/// otherwise uniform noise. Refuses configurations that blow the
/// per-instance rejection cap (10^6).
inline std::vector<LabeledInstance> generate(const GeneratorConfig& cfg) {
  detail::validate(cfg);
  std::vector<LabeledInstance> out;
  out.reserve(static_cast<std::size_t>(cfg.n_instances));

  for (int i = 0; i < cfg.n_instances; ++i) {
    std::mt19937_64 eng(detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));

    LabelSet truth(cfg.d);
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt >= 1'000'000ULL)
        throw std::runtime_error(
            "generate: prevalence makes cardinality [1, l] infeasible "
            "(rejection cap hit)");
      int card = 0;
      for (int k = 0; k < cfg.d; ++k) {
        const bool bit =
            detail::uniform01(eng) < cfg.label_prevalence[static_cast<std::size_t>(k)];
        truth.set(k, bit);
        card += bit ? 1 : 0;
      }
      if (card >= 1 && card <= cfg.l) break;
    }

    std::vector<double> scores(static_cast<std::size_t>(cfg.d));
    for (int k = 0; k < cfg.d; ++k) {
      const bool informative = detail::uniform01(eng) < cfg.quality;
      const double draw = detail::uniform01(eng);
      if (informative) {
        const double base = truth.test(k) ? 1.0 : 0.0;
        scores[static_cast<std::size_t>(k)] = detail::clamp01(
            base + cfg.noise_scale * detail::standard_normal(eng));
      } else {
        scores[static_cast<std::size_t>(k)] = draw;
      }
    }
    out.emplace_back(ScoreVector(std::move(scores)), std::move(truth));
  }
  return out;
}

struct SplitResult {
  std::vector<LabeledInstance> proper;
  std::vector<LabeledInstance> calibration;
  std::vector<LabeledInstance> test;
};

/// Seeded Fisher–Yates shuffle, then: calibration takes cal_count
/// instances, the remainder splits proper/test by proper_fraction.
/// Uniform random rather than stratified: exchangeability is what the
/// conformal guarantee needs, and i.i.d. sampling already provides it.
inline SplitResult split(std::vector<LabeledInstance> instances,
                         double proper_fraction, int cal_count,
                         std::uint64_t seed) {
  if (cal_count < 1 || static_cast<std::size_t>(cal_count) >= instances.size())
    throw std::invalid_argument("split: need 1 <= cal_count < total");
  if (!(proper_fraction >= 0.0 && proper_fraction <= 1.0))
    throw std::invalid_argument("split: proper_fraction must be in [0,1]");

  std::mt19937_64 eng(detail::splitmix64(seed ^ 0xa5b35705ULL));
  // Fisher–Yates with rejection-sampled bounded draws (platform-stable).
  for (std::size_t i = instances.size() - 1; i > 0; --i) {
    const std::uint64_t bound = i + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = eng();
    } while (r >= limit);
    std::swap(instances[i], instances[static_cast<std::size_t>(r % bound)]);
  }

  SplitResult result;
  auto it = instances.begin();
  result.calibration.assign(it, it + cal_count);
  it += cal_count;
  const std::size_t rest = static_cast<std::size_t>(instances.end() - it);
  const std::size_t proper_count = static_cast<std::size_t>(
      std::floor(static_cast<double>(rest) * proper_fraction));
  result.proper.assign(it, it + static_cast<std::ptrdiff_t>(proper_count));
  it += static_cast<std::ptrdiff_t>(proper_count);
  result.test.assign(it, instances.end());
  return result;
}

}  // namespace lpicp::synth
