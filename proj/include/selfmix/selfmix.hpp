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

// SelfMix: noisy-label training by loss-based sample selection and
// self-training.
//
// Each epoch after warm-up:
//   1. per-sample cross-entropy (dropout off), optionally standardized per
//      class, is fitted with a 2-component GMM;
//   2. samples whose clean posterior w >= tau keep their label (labeled set),
//      the rest get a sharpened model prediction as soft target (unlabeled set);
//   3. every batch element is mixed with a random batch partner at the
//      pooled-embedding level with lambda' = max(lambda, 1 - lambda),
//      lambda ~ Beta(alpha, alpha);
//   4. loss = L_mix + lambda_p * L_pseudo + lambda_r * L_consistency, where the
//      last two apply to the unlabeled members of the batch.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfmix/adam.hpp"
#include "selfmix/data.hpp"
#include "selfmix/gmm.hpp"
#include "selfmix/model.hpp"
#include "selfmix/rng.hpp"
#include "selfmix/training.hpp"

namespace selfmix {

struct SelfMixConfig {
  double tau = 0.5;
  double lambda_p = 0.2;
  double lambda_r = 0.3;
  double alpha = 0.75;
  double temperature = 0.5;
  /// Warm-up budget; `warmup_samples`, when set, takes precedence.
  int warmup_epochs = 2;
  std::optional<std::size_t> warmup_samples;
  int total_epochs = 6;
  std::size_t batch_size = 32;
  bool class_regularize = false;
  /// Sum instead of average the pseudo and consistency terms over the batch.
  bool sum_regularizers = false;
  /// Test accuracy is sampled every this many optimizer steps (0 = never).
  std::size_t eval_every = 50;
  GmmFitOptions gmm{};
  std::uint64_t seed = 0;

  /// Throws ArgumentError naming the first violated constraint.
  void validate() const;
};

/// Training setup shared by both arms of an experiment.
struct TrainerSetup {
  SelfMixConfig selfmix;
  EncoderConfig encoder;
  AdamConfig optimizer;
};

struct DataSplit {
  std::vector<std::size_t> labeled_ids;
  std::vector<std::size_t> unlabeled_ids;
  std::vector<double> posteriors;  // indexed by id
  GmmParams gmm;
  int epoch = 0;

  std::vector<bool> labeled_mask() const;
};

struct MixedBatch {
  std::vector<Embedding> mixed_embeddings;
  std::vector<ClassDistribution> mixed_targets;
  std::vector<double> lambdas;
};

struct MixResult {
  Embedding embedding;
  ClassDistribution target;
  double lambda;  // lambda' in [0.5, 1]
};

struct SelectionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EpochRecord {
  int epoch = 0;             // 1-based
  std::string phase;         // "warmup", "selfmix" or "baseline"
  double test_acc = 0.0;
  std::optional<SelectionMetrics> selection;
  double l_mix = 0.0;        // warm-up and baseline epochs: mean cross-entropy
  double l_p = 0.0;
  double l_r = 0.0;
  std::size_t labeled_count = 0;
  std::vector<double> step_acc;  // test accuracy every `eval_every` steps
};

struct TrainReport {
  std::string arm;  // "selfmix" or "baseline"
  std::vector<EpochRecord> epochs;
  double best_acc = 0.0;
  double last_acc = 0.0;
  std::vector<std::string> warnings;
  TrainerSetup setup;
};

/// Snapshot handed to an observer at each selection step.
struct SelectionSnapshot {
  int epoch = 0;
  std::span<const double> losses;     // raw per-sample losses
  std::span<const double> gmm_input;  // what the GMM saw (regularized in IDN mode)
  const DataSplit* split = nullptr;
};

struct TrainHooks {
  std::function<void(const SelectionSnapshot&)> on_selection;
  /// Final parameters, for checkpointing.
  std::function<void(const ModelParams&)> on_finish;
};

// ---- Individual operations -------------------------------------------------

/// -log p(observed label), dropout off, in corpus order.
std::vector<double> per_sample_losses(const ModelParams& params, const Corpus& corpus);

/// Per-class standardization (loss - mean_c) / std_c with population std,
/// floored at 1e-12.
std::vector<double> class_regularize(std::span<const double> losses,
                                     std::span<const ClassIndex> labels, std::size_t num_classes);

/// GMM fit and threshold split; labeled iff clean posterior >= tau.
DataSplit select_split(std::span<const double> values, double tau, const GmmFitOptions& gmm = {});
/// Split from a fixed GMM (no fitting).
DataSplit split_with_gmm(std::span<const double> values, const GmmParams& gmm, double tau);

ClassDistribution sharpen(const ClassDistribution& dist, double temperature);

/// Mixes two embeddings and targets with a fixed raw lambda (lambda' = max(lambda, 1-lambda)).
MixResult embmix_with_lambda(std::span<const double> e_i, const ClassDistribution& y_i,
                             std::span<const double> e_j, const ClassDistribution& y_j,
                             double lambda);
/// As above with lambda ~ Beta(alpha, alpha) drawn from `rng`.
MixResult embmix(std::span<const double> e_i, const ClassDistribution& y_i,
                 std::span<const double> e_j, const ClassDistribution& y_j, double alpha, Rng& rng);

/// Mean cross-entropy of head predictions (dropout on, one mask seed per
/// element) on mixed embeddings against mixed targets.
double mix_loss(const MixedBatch& mixed, const ModelParams& params,
                std::span<const std::uint64_t> mask_seeds);

/// Mean of -log p[argmax p]; 0 for an empty list.
double pseudo_loss(std::span<const ClassDistribution> outputs);

/// 0.5 * (KL(p1||p2) + KL(p2||p1)), probabilities clamped at 1e-12.
double rdrop_loss(const ClassDistribution& p1, const ClassDistribution& p2);

/// l_mix + lambda_p * l_p + lambda_r * l_r. Throws NumericError on non-finite input.
double total_loss(double l_mix, double l_p, double l_r, const SelfMixConfig& config);

/// Cross-entropy warm-up (dropout on) for `num_samples` examples.
/// Returns the mean batch loss of the last pass (0 if nothing ran).
double warmup(ModelParams& params, OptimizerState& opt, const Corpus& corpus,
              std::size_t num_samples, std::size_t batch_size, std::uint64_t seed);

/// Number of warm-up samples implied by the config for a corpus of size n.
std::size_t warmup_sample_budget(const SelfMixConfig& config, std::size_t n);

TrainReport train_selfmix(const TrainerSetup& setup, const Dataset& noisy_train,
                          const Dataset& test, const TrainHooks& hooks = {});

TrainReport train_baseline(const TrainerSetup& setup, const Dataset& noisy_train,
                           const Dataset& test, const TrainHooks& hooks = {});

/// Noise-detection quality of a split: "unlabeled" is the positive
/// prediction, `noisy` the ground truth. Empty denominators give 0.
SelectionMetrics selection_metrics(const DataSplit& split, const std::vector<bool>& noisy);

}  // namespace selfmix
