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

// Minimal end-to-end walkthrough of the library API: generate exchangeable
// data, calibrate, and predict with the efficient label-powerset procedure.

#include <iostream>

#include "lpicp/lpicp.hpp"

int main() {
  using namespace lpicp;

  // Synthetic classifier outputs: 12 labels, at most 3 per instance.
  synth::GeneratorConfig cfg;
  cfg.d = 12;
  cfg.l = 3;
  cfg.n_instances = 1200;
  cfg.seed = 42;
  cfg.label_prevalence = synth::uniform_prevalence(cfg.d, 0.15);
  cfg.noise_scale = 0.2;
  cfg.quality = 0.92;
  const auto parts = synth::split(synth::generate(cfg), 0.0, 999, cfg.seed);

  const LabelSpace space(cfg.d, cfg.l);
  const auto model = calibrate(parts.calibration, LpMeasure(2.0), space);

  std::cout << "candidate space: "
            << count_label_sets(cfg.d, cfg.l).str() << " label-sets\n\n";

  for (int i = 0; i < 5; ++i) {
    const auto& inst = parts.test[static_cast<std::size_t>(i)];
    const auto forced = forced_prediction(model, inst.scores);
    const auto set = efficient_prediction_set(model, inst.scores, 0.05);
    std::cout << "truth " << inst.truth->to_bit_string() << "  forced "
              << forced.prediction.to_bit_string()
              << " (credibility " << forced.credibility << ", confidence "
              << forced.confidence << ")\n"
              << "  95% prediction set: " << set.retained.size()
              << " label-sets from " << set.candidates_evaluated
              << " evaluated (t=" << set.t_used << ")\n";
  }
  return 0;
}
