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

#include "selfmix/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "selfmix/error.hpp"
#include "selfmix/rng.hpp"
#include "selfmix/training.hpp"

namespace selfmix {

namespace {

void check_ratio(double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw ArgumentError("noise ratio must be in [0, 1), got " + std::to_string(ratio));
  }
}

std::size_t exact_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
}

// Ground truth each injector flips away from: the oracle label when present,
// otherwise the observed label (the input is taken to be clean).
std::vector<ClassIndex> base_labels(const Dataset& dataset) {
  const auto report = validate(dataset);
  if (!report.ok()) {
    throw ArgumentError("noise injection on an invalid dataset: " + report.findings.front().message);
  }
  std::vector<ClassIndex> labels;
  labels.reserve(dataset.size());
  for (const auto& e : dataset.examples()) labels.push_back(e.true_label.value_or(e.observed_label));
  return labels;
}

NoiseResult apply_flips(const Dataset& dataset, const std::vector<ClassIndex>& truth,
                        std::vector<Flip> flips, NoiseType type, double ratio, std::uint64_t seed) {
  const std::size_t c = dataset.num_classes();
  std::sort(flips.begin(), flips.end(), [](const Flip& a, const Flip& b) { return a.id < b.id; });

  // Injection starts from the true labels, so any corruption already present
  // in an oracle dataset is replaced by the new flips.
  std::vector<Example> out = dataset.examples();
  std::vector<std::size_t> index_of(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].true_label = truth[i];
    out[i].observed_label = truth[i];
    index_of[out[i].id] = i;
  }

  CorruptionManifest manifest;
  manifest.noise_type = type;
  manifest.ratio = ratio;
  manifest.seed = seed;
  manifest.num_examples = dataset.size();
  manifest.flip_counts.assign(c, std::vector<std::size_t>(c, 0));
  for (const Flip& f : flips) {
    out[index_of[f.id]].observed_label = f.new_label;
    ++manifest.flip_counts[f.old_label][f.new_label];
  }
  for (auto& e : out) e.corrupted = e.observed_label != *e.true_label;
  manifest.flips = std::move(flips);
  return {Dataset(dataset.name(), c, std::move(out)), std::move(manifest)};
}

}  // namespace

std::string to_string(NoiseType type) {
  switch (type) {
    case NoiseType::Uniform: return "uniform";
    case NoiseType::Asymmetric: return "asym";
    case NoiseType::InstanceDependent: return "idn";
  }
  return "unknown";
}

NoiseType parse_noise_type(const std::string& name) {
  if (name == "uniform") return NoiseType::Uniform;
  if (name == "asym" || name == "asymmetric") return NoiseType::Asymmetric;
  if (name == "idn" || name == "instance_dependent") return NoiseType::InstanceDependent;
  throw ArgumentError("unknown noise type '" + name + "'");
}

TransitionMap::TransitionMap(std::vector<ClassIndex> targets) : targets_(std::move(targets)) {
  if (targets_.size() < 2) throw ArgumentError("transition map needs at least 2 classes");
  for (std::size_t c = 0; c < targets_.size(); ++c) {
    if (targets_[c] >= targets_.size()) {
      throw ArgumentError("transition target out of range for class " + std::to_string(c));
    }
    if (targets_[c] == c) throw ArgumentError("transition maps class " + std::to_string(c) + " to itself");
  }
}

TransitionMap TransitionMap::cyclic(std::size_t num_classes) {
  std::vector<ClassIndex> t(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) t[c] = (c + 1) % num_classes;
  return TransitionMap(std::move(t));
}

TransitionMap TransitionMap::parse(const std::string& content, std::size_t num_classes) {
  std::vector<std::optional<ClassIndex>> targets(num_classes);
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    long long from = 0, to = 0;
    if (!(fields >> from)) continue;  // blank line
    std::string rest;
    if (!(fields >> to) || (fields >> rest)) throw ParseError("expected 'from,to'", line_no);
    if (from < 0 || to < 0 || static_cast<std::size_t>(from) >= num_classes ||
        static_cast<std::size_t>(to) >= num_classes) {
      throw ParseError("class index out of range", line_no);
    }
    if (targets[from]) throw ParseError("class listed twice", line_no);
    targets[from] = static_cast<ClassIndex>(to);
  }
  std::vector<ClassIndex> t;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (!targets[c]) throw ArgumentError("transition map has no target for class " + std::to_string(c));
    t.push_back(*targets[c]);
  }
  return TransitionMap(std::move(t));
}

TransitionMap TransitionMap::read(const std::string& path, std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open transition file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), num_classes);
}

std::set<std::size_t> CorruptionManifest::flipped_ids() const {
  std::set<std::size_t> ids;
  for (const Flip& f : flips) ids.insert(f.id);
  return ids;
}

std::vector<bool> CorruptionManifest::noisy_mask() const {
  std::vector<bool> mask(num_examples, false);
  for (const Flip& f : flips) mask.at(f.id) = true;
  return mask;
}

CorruptionManifest CorruptionManifest::from_dataset(const Dataset& dataset) {
  CorruptionManifest m;
  m.num_examples = dataset.size();
  const std::size_t c = dataset.num_classes();
  m.flip_counts.assign(c, std::vector<std::size_t>(c, 0));
  for (const auto& e : dataset.examples()) {
    if (e.true_label && *e.true_label != e.observed_label) {
      m.flips.push_back({e.id, *e.true_label, e.observed_label});
      ++m.flip_counts[*e.true_label][e.observed_label];
    }
  }
  if (dataset.size()) m.ratio = static_cast<double>(m.flips.size()) / static_cast<double>(dataset.size());
  return m;
}

std::string format_manifest(const CorruptionManifest& m) {
  std::ostringstream out;
  out.precision(17);
  out << "# noise_type,ratio,seed\n";
  out << "# " << to_string(m.noise_type) << ',' << m.ratio << ',' << m.seed << '\n';
  out << "id,old_label,new_label\n";
  for (const Flip& f : m.flips) out << f.id << ',' << f.old_label << ',' << f.new_label << '\n';
  for (std::size_t from = 0; from < m.flip_counts.size(); ++from) {
    out << "# counts " << from << ':';
    for (std::size_t n : m.flip_counts[from]) out << ' ' << n;
    out << '\n';
  }
  return out.str();
}

void write_manifest(const CorruptionManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
  out << format_manifest(manifest);
}

NoiseResult inject_uniform(const Dataset& dataset, double ratio, std::uint64_t seed) {
  check_ratio(ratio);
  const auto truth = base_labels(dataset);
  const std::size_t c = dataset.num_classes();
  if (c < 2) throw ArgumentError("uniform noise needs at least 2 classes");
  const std::size_t count = exact_count(ratio, dataset.size());

  Rng rng(seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<Flip> flips;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = order[k];
    // Uniform over the C-1 classes other than the true one.
    ClassIndex target = rng.uniform_index(c - 1);
    if (target >= truth[i]) ++target;
    flips.push_back({dataset[i].id, truth[i], target});
  }
  return apply_flips(dataset, truth, std::move(flips), NoiseType::Uniform, ratio, seed);
}

NoiseResult inject_asymmetric(const Dataset& dataset, double ratio, const TransitionMap& transition,
                              std::uint64_t seed) {
  check_ratio(ratio);
  if (transition.num_classes() != dataset.num_classes()) {
    throw ArgumentError("transition map covers " + std::to_string(transition.num_classes()) +
                        " classes, dataset has " + std::to_string(dataset.num_classes()));
  }
  const auto truth = base_labels(dataset);
  const std::size_t c = dataset.num_classes();
  std::vector<std::vector<std::size_t>> members(c);
  for (std::size_t i = 0; i < dataset.size(); ++i) members[truth[i]].push_back(i);

  Rng rng(seed);
  std::vector<Flip> flips;
  for (std::size_t cls = 0; cls < c; ++cls) {
    auto& pool = members[cls];
    rng.shuffle(std::span<std::size_t>(pool));
    const std::size_t count = exact_count(ratio, pool.size());
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = pool[k];
      flips.push_back({dataset[i].id, truth[i], transition(cls)});
    }
  }
  return apply_flips(dataset, truth, std::move(flips), NoiseType::Asymmetric, ratio, seed);
}

std::vector<double> true_label_margins(const Dataset& dataset, const ModelParams& params,
                                       std::uint32_t buckets,
                                       std::vector<ClassIndex>* strongest_other) {
  std::vector<double> margins(dataset.size());
  if (strongest_other) strongest_other->assign(dataset.size(), 0);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Example& e = dataset[i];
    const ClassIndex truth = e.true_label.value_or(e.observed_label);
    const ClassDistribution p = predict(featurize_text(e.text, buckets), params);
    ClassIndex other = truth == 0 ? 1 : 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k != truth && p[k] > p[other]) other = k;
    }
    margins[i] = p[truth] - p[other];
    if (strongest_other) (*strongest_other)[i] = other;
  }
  return margins;
}

NoiseResult inject_instance_dependent(const Dataset& dataset, double ratio,
                                      const IdnOptions& options, std::uint64_t seed) {
  check_ratio(ratio);
  if (!(options.aux_subset_fraction > 0.0 && options.aux_subset_fraction <= 1.0)) {
    throw ArgumentError("aux_subset_fraction must be in (0, 1]");
  }
  const auto truth = base_labels(dataset);
  const std::size_t c = dataset.num_classes();
  if (c < 2) throw ArgumentError("instance-dependent noise needs at least 2 classes");
  const std::size_t count = exact_count(ratio, dataset.size());
  if (count == 0) return apply_flips(dataset, truth, {}, NoiseType::InstanceDependent, ratio, seed);

  // Auxiliary classifier trained on a small stratified slice of the clean labels.
  std::vector<Example> clean = dataset.examples();
  for (std::size_t i = 0; i < clean.size(); ++i) clean[i].observed_label = truth[i];
  const Dataset clean_set(dataset.name(), c, std::move(clean));
  const std::size_t subset_size = std::max<std::size_t>(
      std::min(c, dataset.size()),
      exact_count(options.aux_subset_fraction, dataset.size()));
  const Dataset subset = stratified_subsample(clean_set, subset_size, derive_seed(seed, "aux-subset"));

  const Corpus corpus = featurize_corpus(subset.training_view(), options.encoder.buckets);
  ModelParams aux = init_model(options.encoder, c, derive_seed(seed, "aux-init"));
  OptimizerState opt(aux, options.optimizer);
  const double final_loss =
      train_cross_entropy(aux, opt, corpus, corpus.size() * static_cast<std::size_t>(options.aux_epochs),
                          options.aux_batch_size, derive_seed(seed, "aux-train"));
  if (!std::isfinite(final_loss) || !aux.all_finite()) {
    throw NumericError("auxiliary classifier training diverged");
  }

  std::vector<ClassIndex> other;
  const auto margins = true_label_margins(clean_set, aux, options.encoder.buckets, &other);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return margins[a] < margins[b]; });

  std::vector<Flip> flips;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = order[k];
    flips.push_back({dataset[i].id, truth[i], other[i]});
  }
  return apply_flips(dataset, truth, std::move(flips), NoiseType::InstanceDependent, ratio, seed);
}

}  // namespace selfmix
