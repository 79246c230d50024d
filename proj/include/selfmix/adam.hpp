// Copyright 2026 The selfmix-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <vector>

#include "selfmix/model.hpp"

namespace selfmix {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments for every parameter plus the step counter.
struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<double> m_embedding, v_embedding;
  std::vector<double> m_w1, v_w1, m_b1, v_b1, m_w2, v_w2, m_b2, v_b2;
  /// Embedding rows that have ever received a gradient. Untouched rows have
  /// zero moments, so their bias-corrected update is exactly zero.
  std::vector<bool> row_active;

  OptimizerState() = default;
  OptimizerState(const ModelParams& shape, AdamConfig config);
};

/// Bias-corrected Adam update of `params` in place; increments `state.step`.
/// Throws ArgumentError when shapes disagree.
void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state);

}  // namespace selfmix
