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

#include "selfmix/selfmix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selfmix/error.hpp"

namespace selfmix {

namespace {

constexpr double kStdFloor = 1e-12;
constexpr double kProbFloor = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError("SelfMixConfig: " + what);
}

// Common bookkeeping for both arms: evaluation cadence and the report.
class Session {
 public:
  Session(const TrainerSetup& setup, const Dataset& train, const Dataset& test, std::string arm)
      : setup_(setup),
        // Only the training view reaches the optimizer; the oracle view is
        // read for selection metrics and nothing else.
        train_(featurize_corpus(train.training_view(), setup.encoder.buckets)),
        test_(featurize_corpus(test.training_view(), setup.encoder.buckets)),
        oracle_(train.evaluation_view()),
        params_(init_model(setup.encoder, train.num_classes(),
                           derive_seed(setup.selfmix.seed, "init"))),
        opt_(params_, setup.optimizer),
        shuffle_rng_(derive_seed(setup.selfmix.seed, "shuffle")),
        mixup_rng_(derive_seed(setup.selfmix.seed, "mixup")),
        dropout_seed_(derive_seed(setup.selfmix.seed, "dropout")) {
    if (train.num_classes() != test.num_classes()) {
      throw ArgumentError("train and test sets disagree on the number of classes");
    }
    if (train.empty()) throw ArgumentError("empty training set");
    report_.arm = std::move(arm);
    report_.setup = setup;
  }

  std::vector<std::size_t> shuffled_order() {
    std::vector<std::size_t> order(train_.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng_.shuffle(std::span<std::size_t>(order));
    return order;
  }

  void after_step(EpochRecord& record) {
    const std::size_t every = setup_.selfmix.eval_every;
    if (every != 0 && opt_.step % every == 0) record.step_acc.push_back(accuracy(params_, test_));
  }

  // Plain cross-entropy pass over `order`; returns the mean batch loss.
  double cross_entropy_epoch(std::span<const std::size_t> order, EpochRecord& record) {
    double sum = 0.0;
    std::size_t batches = 0;
    for (auto batch : make_batches(order, setup_.selfmix.batch_size)) {
      sum += cross_entropy_step(params_, opt_, train_, batch, dropout_seed_);
      ++batches;
      after_step(record);
    }
    return batches ? sum / static_cast<double>(batches) : 0.0;
  }

  void close_epoch(EpochRecord record) {
    record.test_acc = accuracy(params_, test_);
    report_.epochs.push_back(std::move(record));
  }

  TrainReport finish(const TrainHooks& hooks) {
    report_.best_acc = 0.0;
    for (const auto& e : report_.epochs) report_.best_acc = std::max(report_.best_acc, e.test_acc);
    report_.last_acc = report_.epochs.empty() ? 0.0 : report_.epochs.back().test_acc;
    if (hooks.on_finish) hooks.on_finish(params_);
    return std::move(report_);
  }

  const TrainerSetup& setup_;
  Corpus train_;
  Corpus test_;
  EvaluationView oracle_;
  ModelParams params_;
  OptimizerState opt_;
  Rng shuffle_rng_;
  Rng mixup_rng_;
  std::uint64_t dropout_seed_;
  TrainReport report_;
};

std::string where(int epoch, std::size_t batch) {
  return "epoch " + std::to_string(epoch) + " batch " + std::to_string(batch) + ": ";
}

}  // namespace

void SelfMixConfig::validate() const {
  require(tau > 0.0 && tau < 1.0, "tau must be in (0, 1)");
  require(lambda_p >= 0.0 && std::isfinite(lambda_p), "lambda_p must be >= 0");
  require(lambda_r >= 0.0 && std::isfinite(lambda_r), "lambda_r must be >= 0");
  require(alpha > 0.0 && std::isfinite(alpha), "alpha must be > 0");
  require(temperature > 0.0 && std::isfinite(temperature), "temperature must be > 0");
  require(batch_size >= 2, "batch_size must be >= 2");
  require(total_epochs >= 1, "total_epochs must be >= 1");
  require(warmup_epochs >= 0, "warmup_epochs must be >= 0");
  if (!warmup_samples) require(warmup_epochs <= total_epochs, "warm-up exceeds total epochs");
}

std::vector<bool> DataSplit::labeled_mask() const {
  std::vector<bool> mask(posteriors.size(), false);
  for (std::size_t id : labeled_ids) mask.at(id) = true;
  return mask;
}

std::vector<double> per_sample_losses(const ModelParams& params, const Corpus& corpus) {
  std::vector<double> losses(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const ClassDistribution p = predict(corpus.features[i], params);
    const double pi = p[corpus.labels[i]];
    if (!std::isfinite(pi)) throw NumericError("per_sample_losses: non-finite probability at " + std::to_string(i));
    // log-softmax would avoid the clamp; the clamp only bites below 1e-300.
    losses[i] = -std::log(std::max(pi, std::numeric_limits<double>::min()));
  }
  return losses;
}

std::vector<double> class_regularize(std::span<const double> losses,
                                     std::span<const ClassIndex> labels, std::size_t num_classes) {
  if (losses.size() != labels.size()) throw ArgumentError("class_regularize: length mismatch");
  std::vector<double> sum(num_classes, 0.0), sq(num_classes, 0.0);
  std::vector<std::size_t> count(num_classes, 0);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (labels[i] >= num_classes) throw ArgumentError("class_regularize: label out of range");
    sum[labels[i]] += losses[i];
    ++count[labels[i]];
  }
  std::vector<double> mean(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (count[c]) mean[c] = sum[c] / static_cast<double>(count[c]);
  }
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double d = losses[i] - mean[labels[i]];
    sq[labels[i]] += d * d;
  }
  std::vector<double> sd(num_classes, kStdFloor);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (count[c]) sd[c] = std::max(std::sqrt(sq[c] / static_cast<double>(count[c])), kStdFloor);
  }
  std::vector<double> out(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) out[i] = (losses[i] - mean[labels[i]]) / sd[labels[i]];
  return out;
}

DataSplit split_with_gmm(std::span<const double> values, const GmmParams& gmm, double tau) {
  DataSplit split;
  split.gmm = gmm;
  split.posteriors.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = posterior_clean(gmm, values[i]);
    split.posteriors[i] = w;
    (w >= tau ? split.labeled_ids : split.unlabeled_ids).push_back(i);
  }
  return split;
}

DataSplit select_split(std::span<const double> values, double tau, const GmmFitOptions& gmm) {
  return split_with_gmm(values, fit_gmm_traced(values, gmm).params, tau);
}

ClassDistribution sharpen(const ClassDistribution& dist, double temperature) {
  if (!(temperature > 0.0)) throw ArgumentError("sharpen: temperature must be positive");
  double top = -std::numeric_limits<double>::infinity();
  for (double p : dist.probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw NumericError("sharpen: invalid probability");
    if (p > 0.0) top = std::max(top, std::log(p) / temperature);
  }
  if (top == -std::numeric_limits<double>::infinity()) throw NumericError("sharpen: all-zero input");
  // p^(1/T) in log space, shifted by the max so nothing overflows.
  ClassDistribution out{std::vector<double>(dist.size(), 0.0)};
  double z = 0.0;
  for (std::size_t c = 0; c < dist.size(); ++c) {
    if (dist[c] > 0.0) out[c] = std::exp(std::log(dist[c]) / temperature - top);
    z += out[c];
  }
  for (double& p : out.probs) p /= z;
  return out;
}

MixResult embmix_with_lambda(std::span<const double> e_i, const ClassDistribution& y_i,
                             std::span<const double> e_j, const ClassDistribution& y_j,
                             double lambda) {
  if (e_i.size() != e_j.size()) throw ArgumentError("embmix: embedding widths differ");
  if (y_i.size() != y_j.size()) throw ArgumentError("embmix: target widths differ");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("embmix: lambda must be in [0, 1]");
  const double lam = std::max(lambda, 1.0 - lambda);
  MixResult r;
  r.lambda = lam;
  r.embedding.resize(e_i.size());
  for (std::size_t k = 0; k < e_i.size(); ++k) r.embedding[k] = lam * e_i[k] + (1.0 - lam) * e_j[k];
  r.target.probs.resize(y_i.size());
  for (std::size_t k = 0; k < y_i.size(); ++k) r.target[k] = lam * y_i[k] + (1.0 - lam) * y_j[k];
  return r;
}

MixResult embmix(std::span<const double> e_i, const ClassDistribution& y_i,
                 std::span<const double> e_j, const ClassDistribution& y_j, double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw ArgumentError("embmix: alpha must be positive");
  return embmix_with_lambda(e_i, y_i, e_j, y_j, rng.beta(alpha, alpha));
}

double mix_loss(const MixedBatch& mixed, const ModelParams& params,
                std::span<const std::uint64_t> mask_seeds) {
  const std::size_t n = mixed.mixed_embeddings.size();
  if (mixed.mixed_targets.size() != n || mask_seeds.size() != n) {
    throw ArgumentError("mix_loss: batch fields have different lengths");
  }
  if (n == 0) return 0.0;
  LossSpec spec;
  spec.dropout = true;
  for (std::size_t k = 0; k < n; ++k) {
    spec.cross_entropy.push_back(
        {ModelInput::from_embedding(mixed.mixed_embeddings[k]), mixed.mixed_targets[k], mask_seeds[k]});
  }
  return evaluate_loss(spec, params).cross_entropy;
}

double pseudo_loss(std::span<const ClassDistribution> outputs) {
  if (outputs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : outputs) sum -= std::log(std::max(p[p.argmax()], kProbFloor));
  return sum / static_cast<double>(outputs.size());
}

double rdrop_loss(const ClassDistribution& p1, const ClassDistribution& p2) {
  if (p1.size() != p2.size()) throw ArgumentError("rdrop_loss: widths differ");
  double kl12 = 0.0, kl21 = 0.0;
  for (std::size_t k = 0; k < p1.size(); ++k) {
    const double a = std::max(p1[k], kProbFloor);
    const double b = std::max(p2[k], kProbFloor);
    kl12 += p1[k] * (std::log(a) - std::log(b));
    kl21 += p2[k] * (std::log(b) - std::log(a));
  }
  return 0.5 * (kl12 + kl21);
}

double total_loss(double l_mix, double l_p, double l_r, const SelfMixConfig& config) {
  if (!std::isfinite(l_mix) || !std::isfinite(l_p) || !std::isfinite(l_r)) {
    throw NumericError("total_loss: non-finite term");
  }
  return l_mix + config.lambda_p * l_p + config.lambda_r * l_r;
}

double warmup(ModelParams& params, OptimizerState& opt, const Corpus& corpus,
              std::size_t num_samples, std::size_t batch_size, std::uint64_t seed) {
  return train_cross_entropy(params, opt, corpus, num_samples, batch_size, seed);
}

std::size_t warmup_sample_budget(const SelfMixConfig& config, std::size_t n) {
  if (config.warmup_samples) return *config.warmup_samples;
  return static_cast<std::size_t>(config.warmup_epochs) * n;
}

SelectionMetrics selection_metrics(const DataSplit& split, const std::vector<bool>& noisy) {
  if (noisy.size() != split.posteriors.size()) {
    throw ArgumentError("selection_metrics: split covers " + std::to_string(split.posteriors.size()) +
                        " ids, noise mask " + std::to_string(noisy.size()));
  }
  std::size_t hits = 0;
  for (std::size_t id : split.unlabeled_ids) hits += noisy.at(id) ? 1 : 0;
  const std::size_t flipped = static_cast<std::size_t>(std::count(noisy.begin(), noisy.end(), true));
  SelectionMetrics m;
  m.precision = split.unlabeled_ids.empty() ? 0.0
                                            : static_cast<double>(hits) / static_cast<double>(split.unlabeled_ids.size());
  m.recall = flipped == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(flipped);
  m.f1 = (m.precision + m.recall) == 0.0 ? 0.0
                                          : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

TrainReport train_baseline(const TrainerSetup& setup, const Dataset& noisy_train,
                           const Dataset& test, const TrainHooks& hooks) {
  setup.selfmix.validate();
  Session s(setup, noisy_train, test, "baseline");
  for (int epoch = 1; epoch <= setup.selfmix.total_epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    record.phase = "baseline";
    record.labeled_count = s.train_.size();
    const auto order = s.shuffled_order();
    try {
      record.l_mix = s.cross_entropy_epoch(order, record);
    } catch (const NumericError& e) {
      throw NumericError("baseline epoch " + std::to_string(epoch) + ": " + e.what());
    }
    s.close_epoch(std::move(record));
  }
  return s.finish(hooks);
}

TrainReport train_selfmix(const TrainerSetup& setup, const Dataset& noisy_train,
                          const Dataset& test, const TrainHooks& hooks) {
  const SelfMixConfig& cfg = setup.selfmix;
  cfg.validate();
  Session s(setup, noisy_train, test, "selfmix");
  const std::size_t n = s.train_.size();
  const std::size_t classes = s.train_.num_classes;

  // Warm-up: whole epochs, the last one partial when the budget is a sample count.
  const std::size_t budget = warmup_sample_budget(cfg, n);
  const int warm_epochs = static_cast<int>((budget + n - 1) / n);
  if (warm_epochs > cfg.total_epochs) throw ArgumentError("warm-up budget exceeds total epochs");
  std::size_t consumed = 0;
  for (int epoch = 1; epoch <= warm_epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    record.phase = "warmup";
    record.labeled_count = n;
    const auto order = s.shuffled_order();
    const std::size_t take = std::min(n, budget - consumed);
    try {
      record.l_mix = s.cross_entropy_epoch(std::span<const std::size_t>(order).first(take), record);
    } catch (const NumericError& e) {
      throw NumericError("warm-up epoch " + std::to_string(epoch) + ": " + e.what());
    }
    consumed += take;
    s.close_epoch(std::move(record));
  }

  for (int epoch = warm_epochs + 1; epoch <= cfg.total_epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    record.phase = "selfmix";

    // Selection at the start of the epoch, dropout off.
    const std::vector<double> losses = per_sample_losses(s.params_, s.train_);
    const std::vector<double> gmm_input =
        cfg.class_regularize ? class_regularize(losses, s.train_.labels, classes) : losses;
    DataSplit split;
    try {
      split = select_split(gmm_input, cfg.tau, cfg.gmm);
    } catch (const DegenerateInputError&) {
      split = split_with_gmm(gmm_input, GmmParams{}, cfg.tau);  // equal means: all labeled
      s.report_.warnings.push_back("epoch " + std::to_string(epoch) +
                                   ": constant losses, selection skipped");
    }
    split.epoch = epoch;
    record.labeled_count = split.labeled_ids.size();
    if (split.labeled_ids.empty()) {
      s.report_.warnings.push_back("epoch " + std::to_string(epoch) +
                                   ": labeled set empty, training on pseudo-labels only");
    }
    if (s.oracle_.has_oracle()) record.selection = selection_metrics(split, s.oracle_.noisy);
    if (hooks.on_selection) hooks.on_selection({epoch, losses, gmm_input, &split});
    const std::vector<bool> labeled = split.labeled_mask();

    const auto order = s.shuffled_order();
    const auto batches = make_batches(order, cfg.batch_size);
    double sum_mix = 0.0, sum_p = 0.0, sum_r = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto batch = batches[b];
      try {
        // Targets: observed label for the labeled set, sharpened current
        // prediction (dropout off) for the rest.
        std::vector<ClassDistribution> targets;
        targets.reserve(batch.size());
        for (std::size_t id : batch) {
          targets.push_back(labeled[id] ? one_hot(s.train_.labels[id], classes)
                                        : sharpen(predict(s.train_.features[id], s.params_),
                                                  cfg.temperature));
        }

        LossSpec spec;
        spec.dropout = true;
        spec.lambda_p = cfg.lambda_p;
        spec.lambda_r = cfg.lambda_r;
        spec.regularizer_reduction = cfg.sum_regularizers ? Reduction::Sum : Reduction::Mean;
        const std::uint64_t step = s.opt_.step;
        for (std::size_t k = 0; k < batch.size(); ++k) {
          const std::size_t partner = s.mixup_rng_.uniform_index(batch.size());
          const double lam = s.mixup_rng_.beta(cfg.alpha, cfg.alpha);
          const double lam_prime = std::max(lam, 1.0 - lam);
          ClassDistribution mixed{std::vector<double>(classes)};
          for (std::size_t c = 0; c < classes; ++c) {
            mixed[c] = lam_prime * targets[k][c] + (1.0 - lam_prime) * targets[partner][c];
          }
          spec.cross_entropy.push_back({ModelInput::mixed(s.train_.features[batch[k]],
                                                          s.train_.features[batch[partner]], lam_prime),
                                        std::move(mixed), pass_seed(s.dropout_seed_, step, k, 0)});
          if (!labeled[batch[k]]) {
            const auto& fv = s.train_.features[batch[k]];
            spec.pseudo.push_back({ModelInput::from_features(fv), pass_seed(s.dropout_seed_, step, k, 1)});
            spec.consistency.push_back({ModelInput::from_features(fv), pass_seed(s.dropout_seed_, step, k, 2),
                                        pass_seed(s.dropout_seed_, step, k, 3)});
          }
        }
        const BackwardResult r = backward(spec, s.params_);
        adam_step(s.params_, r.grads, s.opt_);
        sum_mix += r.loss.cross_entropy;
        sum_p += r.loss.pseudo;
        sum_r += r.loss.consistency;
      } catch (const NumericError& e) {
        throw NumericError(where(epoch, b) + e.what());
      }
      s.after_step(record);
    }
    const double nb = static_cast<double>(std::max<std::size_t>(batches.size(), 1));
    record.l_mix = sum_mix / nb;
    record.l_p = sum_p / nb;
    record.l_r = sum_r / nb;
    s.close_epoch(std::move(record));
  }
  return s.finish(hooks);
}

}  // namespace selfmix
