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

// Shared plumbing for every trainer: a featurized corpus, accuracy, and the
// plain cross-entropy mini-batch loop.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "selfmix/adam.hpp"
#include "selfmix/data.hpp"
#include "selfmix/model.hpp"

namespace selfmix {

/// Texts hashed once; labels are the observed ones.
struct Corpus {
  std::vector<FeatureVector> features;
  std::vector<ClassIndex> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return features.size(); }
};

Corpus featurize_corpus(const TrainingView& view, std::uint32_t buckets);

/// Fraction of examples whose dropout-off argmax equals the label.
double accuracy(const ModelParams& params, const Corpus& corpus);

/// Per-example dropout-off class distributions.
std::vector<ClassDistribution> predict_all(const ModelParams& params, const Corpus& corpus);

/// Mask seed for one forward pass; unique per (step, slot, pass).
std::uint64_t pass_seed(std::uint64_t dropout_seed, std::uint64_t step, std::uint64_t slot,
                        std::uint64_t pass);

/// Consecutive chunks of `order` of size `batch_size` (last may be short).
std::vector<std::span<const std::size_t>> make_batches(std::span<const std::size_t> order,
                                                       std::size_t batch_size);

/// One cross-entropy step (dropout on) on the given ids. Returns the batch loss.
double cross_entropy_step(ModelParams& params, OptimizerState& opt, const Corpus& corpus,
                          std::span<const std::size_t> ids, std::uint64_t dropout_seed);

/// Cross-entropy training over `num_samples` examples drawn epoch by epoch
/// from seeded shuffles. `on_batch` (optional) runs after each step.
/// Returns the mean batch loss of the final pass.
double train_cross_entropy(ModelParams& params, OptimizerState& opt, const Corpus& corpus,
                           std::size_t num_samples, std::size_t batch_size, std::uint64_t seed,
                           const std::function<void(double)>& on_batch = {});

}  // namespace selfmix
