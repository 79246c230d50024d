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

#include "selfmix/adam.hpp"

#include <cmath>

#include "selfmix/error.hpp"

namespace selfmix {

namespace {

struct StepConstants {
  double lr, b1, b2, eps, c1, c2;
};

inline void update(double& p, double g, double& m, double& v, const StepConstants& k) {
  m = k.b1 * m + (1.0 - k.b1) * g;
  v = k.b2 * v + (1.0 - k.b2) * g * g;
  const double m_hat = m / k.c1;
  const double v_hat = v / k.c2;
  p -= k.lr * m_hat / (std::sqrt(v_hat) + k.eps);
}

void update_dense(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                  std::vector<double>& v, const StepConstants& k) {
  for (std::size_t i = 0; i < p.size(); ++i) update(p[i], g[i], m[i], v[i], k);
}

}  // namespace

OptimizerState::OptimizerState(const ModelParams& shape, AdamConfig cfg)
    : config(cfg),
      m_embedding(shape.embedding.size(), 0.0),
      v_embedding(shape.embedding.size(), 0.0),
      m_w1(shape.w1.size(), 0.0),
      v_w1(shape.w1.size(), 0.0),
      m_b1(shape.b1.size(), 0.0),
      v_b1(shape.b1.size(), 0.0),
      m_w2(shape.w2.size(), 0.0),
      v_w2(shape.w2.size(), 0.0),
      m_b2(shape.b2.size(), 0.0),
      v_b2(shape.b2.size(), 0.0),
      row_active(shape.buckets, false) {}

void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state) {
  if (grads.buckets != params.buckets || grads.hidden != params.hidden ||
      grads.classes != params.classes || grads.w1.size() != params.w1.size() ||
      grads.w2.size() != params.w2.size() || grads.b1.size() != params.b1.size() ||
      grads.b2.size() != params.b2.size()) {
    throw ArgumentError("adam_step: gradient shape does not match parameters");
  }
  if (state.m_embedding.size() != params.embedding.size() || state.m_w1.size() != params.w1.size() ||
      state.m_w2.size() != params.w2.size() || state.row_active.size() != params.buckets) {
    throw ArgumentError("adam_step: optimizer state shape does not match parameters");
  }

  ++state.step;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step);
  const StepConstants k{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon,
                        1.0 - std::pow(cfg.beta1, t), 1.0 - std::pow(cfg.beta2, t)};

  update_dense(params.w1, grads.w1, state.m_w1, state.v_w1, k);
  update_dense(params.b1, grads.b1, state.m_b1, state.v_b1, k);
  update_dense(params.w2, grads.w2, state.m_w2, state.v_w2, k);
  update_dense(params.b2, grads.b2, state.m_b2, state.v_b2, k);

  for (const auto& [row, g] : grads.embedding_rows) {
    if (row >= params.buckets) throw ArgumentError("adam_step: embedding row out of range");
    state.row_active[row] = true;
  }
  const std::size_t h = params.hidden;
  auto g_it = grads.embedding_rows.begin();
  for (std::size_t row = 0; row < params.buckets; ++row) {
    if (!state.row_active[row]) continue;
    const double* g = nullptr;
    while (g_it != grads.embedding_rows.end() && g_it->first < row) ++g_it;
    if (g_it != grads.embedding_rows.end() && g_it->first == row) g = g_it->second.data();
    const std::size_t base = row * h;
    for (std::size_t j = 0; j < h; ++j) {
      update(params.embedding[base + j], g ? g[j] : 0.0, state.m_embedding[base + j],
             state.v_embedding[base + j], k);
    }
  }
}

}  // namespace selfmix
