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

// Hashed embedding-bag encoder with a two-layer MLP head.
//
//   e      = sum_f weight_f * embedding[f]                  (pooled sentence vector)
//   h      = relu(e * W1 + b1)                              W1: H x H
//   h_drop = h * mask / (1 - rate)                          training passes only
//   logits = h_drop * W2 + b2                               W2: H x C
//
// Gradients are hand-derived; backward() handles a composite objective made
// of soft-target cross-entropy, pseudo-label and two-pass consistency terms.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "selfmix/data.hpp"
#include "selfmix/text.hpp"

namespace selfmix {

using Embedding = std::vector<double>;

struct EncoderConfig {
  std::uint32_t buckets = 1u << 18;
  std::size_t hidden = 64;
  double dropout_rate = 0.3;
  /// Half-width of the uniform init of embedding rows.
  double embedding_init = 0.1;
};

struct ModelParams {
  std::size_t buckets = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;
  std::vector<double> embedding;  // buckets x hidden, row-major
  std::vector<double> w1;         // hidden x hidden, w1[i * hidden + j]: input i -> unit j
  std::vector<double> b1;         // hidden
  std::vector<double> w2;         // hidden x classes
  std::vector<double> b2;         // classes
  double dropout_rate = 0.0;

  ModelParams() = default;
  /// Zero-filled parameters of the given shape.
  ModelParams(std::size_t buckets, std::size_t hidden, std::size_t classes, double dropout_rate);

  std::span<const double> embedding_row(std::size_t row) const {
    return {embedding.data() + row * hidden, hidden};
  }
  bool all_finite() const;
  bool same_shape(const ModelParams& other) const;
  bool operator==(const ModelParams&) const = default;
};

/// Random initialization; deterministic given `seed`.
ModelParams init_model(const EncoderConfig& config, std::size_t num_classes, std::uint64_t seed);

/// Pooled embedding of one feature bag. Throws ArgumentError on an index >= B.
Embedding encode(const FeatureVector& features, const ModelParams& params);

/// Inverted-dropout scale factors (0 or 1/(1-rate)) for the hidden layer,
/// drawn deterministically from `mask_seed`.
std::vector<double> dropout_mask(std::size_t hidden, double rate, std::uint64_t mask_seed);

std::vector<double> head_forward(std::span<const double> embedding, const ModelParams& params,
                                 bool dropout_on, std::uint64_t mask_seed);

/// Max-shifted softmax. Throws NumericError on non-finite logits.
ClassDistribution softmax(std::span<const double> logits);

/// Dropout-off class distribution for one text.
ClassDistribution predict(const FeatureVector& features, const ModelParams& params);

/// Input to the loss: e = fixed + sum_k coef_k * encode(features_k).
/// Because encode() is linear in the feature weights, a convex mix of two
/// encoded sentences equals encoding the mixed bag, which lets gradients of
/// a mixed-embedding loss reach the embedding table. A `fixed` embedding is
/// a constant and receives no gradient.
struct ModelInput {
  struct Part {
    std::reference_wrapper<const FeatureVector> features;
    double coef;
  };
  std::vector<Part> parts;
  Embedding fixed;

  static ModelInput from_features(const FeatureVector& features);
  static ModelInput mixed(const FeatureVector& a, const FeatureVector& b, double lambda);
  static ModelInput from_embedding(Embedding e);
};

Embedding encode(const ModelInput& input, const ModelParams& params);

/// -target^T log p on one input.
struct CrossEntropyTerm {
  ModelInput input;
  ClassDistribution target;
  std::uint64_t mask_seed = 0;
};

/// -log p[argmax p]; the argmax is treated as a fixed label.
struct PseudoLabelTerm {
  ModelInput input;
  std::uint64_t mask_seed = 0;
};

/// Symmetric KL between two forward passes that differ only in dropout mask.
struct ConsistencyTerm {
  ModelInput input;
  std::uint64_t mask_seed_a = 0;
  std::uint64_t mask_seed_b = 0;
};

enum class Reduction { Mean, Sum };

/// total = mean(cross_entropy) + lambda_p * R(pseudo) + lambda_r * R(consistency)
/// where R is the mean (default) or the sum over the group.
struct LossSpec {
  std::vector<CrossEntropyTerm> cross_entropy;
  std::vector<PseudoLabelTerm> pseudo;
  std::vector<ConsistencyTerm> consistency;
  double lambda_p = 0.0;
  double lambda_r = 0.0;
  bool dropout = true;
  Reduction regularizer_reduction = Reduction::Mean;
};

struct LossValue {
  double total = 0.0;
  double cross_entropy = 0.0;
  double pseudo = 0.0;
  double consistency = 0.0;
};

/// Same shapes as ModelParams; embedding rows are stored sparsely since a
/// batch touches only a few hundred of the B rows.
struct Gradients {
  std::size_t buckets = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;
  std::map<std::uint32_t, std::vector<double>> embedding_rows;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;

  Gradients() = default;
  explicit Gradients(const ModelParams& shape);

  std::vector<double>& row(std::uint32_t r);
  double embedding(std::size_t row, std::size_t col) const;
  bool all_finite() const;
};

struct BackwardResult {
  LossValue loss;
  Gradients grads;
};

/// Loss value and exact gradients of `spec` at `params`.
/// Throws NumericError naming the term that went non-finite.
BackwardResult backward(const LossSpec& spec, const ModelParams& params);

/// Forward-only evaluation of the same objective.
LossValue evaluate_loss(const LossSpec& spec, const ModelParams& params);

/// Checkpoint: "SMX1", then B, H, C as little-endian uint64, then embedding,
/// W1, b1, W2, b2 as little-endian float64. The dropout rate is not stored.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path, double dropout_rate = 0.3);
std::string serialize_checkpoint(const ModelParams& params);
ModelParams deserialize_checkpoint(const std::string& bytes, double dropout_rate = 0.3);

}  // namespace selfmix
