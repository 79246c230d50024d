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

#include "selfmix/training.hpp"

#include <algorithm>
#include <numeric>

#include "selfmix/error.hpp"
#include "selfmix/rng.hpp"

namespace selfmix {

Corpus featurize_corpus(const TrainingView& view, std::uint32_t buckets) {
  Corpus corpus;
  corpus.num_classes = view.num_classes;
  corpus.labels = view.labels;
  corpus.features.reserve(view.size());
  for (const auto& text : view.texts) corpus.features.push_back(featurize_text(text, buckets));
  return corpus;
}

std::vector<ClassDistribution> predict_all(const ModelParams& params, const Corpus& corpus) {
  std::vector<ClassDistribution> out;
  out.reserve(corpus.size());
  for (const auto& fv : corpus.features) out.push_back(predict(fv, params));
  return out;
}

double accuracy(const ModelParams& params, const Corpus& corpus) {
  if (corpus.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (predict(corpus.features[i], params).argmax() == corpus.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(corpus.size());
}

std::uint64_t pass_seed(std::uint64_t dropout_seed, std::uint64_t step, std::uint64_t slot,
                        std::uint64_t pass) {
  return mix_seed(mix_seed(mix_seed(dropout_seed, step), slot), pass);
}

std::vector<std::span<const std::size_t>> make_batches(std::span<const std::size_t> order,
                                                       std::size_t batch_size) {
  if (batch_size == 0) throw ArgumentError("batch_size must be positive");
  std::vector<std::span<const std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    batches.push_back(order.subspan(start, std::min(batch_size, order.size() - start)));
  }
  return batches;
}

double cross_entropy_step(ModelParams& params, OptimizerState& opt, const Corpus& corpus,
                          std::span<const std::size_t> ids, std::uint64_t dropout_seed) {
  LossSpec spec;
  spec.dropout = true;
  spec.cross_entropy.reserve(ids.size());
  for (std::size_t slot = 0; slot < ids.size(); ++slot) {
    const std::size_t id = ids[slot];
    spec.cross_entropy.push_back({ModelInput::from_features(corpus.features[id]),
                                  one_hot(corpus.labels[id], corpus.num_classes),
                                  pass_seed(dropout_seed, opt.step, slot, 0)});
  }
  const BackwardResult r = backward(spec, params);
  adam_step(params, r.grads, opt);
  return r.loss.total;
}

double train_cross_entropy(ModelParams& params, OptimizerState& opt, const Corpus& corpus,
                           std::size_t num_samples, std::size_t batch_size, std::uint64_t seed,
                           const std::function<void(double)>& on_batch) {
  if (corpus.size() == 0 || num_samples == 0) return 0.0;
  Rng shuffle_rng(derive_seed(seed, "shuffle"));
  const std::uint64_t dropout_seed = derive_seed(seed, "dropout");
  std::vector<std::size_t> order(corpus.size());
  std::size_t consumed = 0;
  double pass_loss = 0.0;
  std::size_t pass_batches = 0;
  while (consumed < num_samples) {
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    const std::size_t take = std::min(order.size(), num_samples - consumed);
    pass_loss = 0.0;
    pass_batches = 0;
    for (auto batch : make_batches(std::span<const std::size_t>(order).first(take), batch_size)) {
      const double loss = cross_entropy_step(params, opt, corpus, batch, dropout_seed);
      pass_loss += loss;
      ++pass_batches;
      if (on_batch) on_batch(loss);
    }
    consumed += take;
  }
  return pass_batches ? pass_loss / static_cast<double>(pass_batches) : 0.0;
}

}  // namespace selfmix
