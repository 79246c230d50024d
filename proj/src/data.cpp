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

#include "selfmix/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selfmix/error.hpp"
#include "selfmix/rng.hpp"

namespace selfmix {

bool ClassDistribution::on_simplex(double tol) const {
  if (probs.empty()) return false;
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

ClassIndex ClassDistribution::argmax() const {
  ClassIndex best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = c;
  }
  return best;
}

ClassDistribution one_hot(ClassIndex class_index, std::size_t num_classes) {
  if (class_index >= num_classes) {
    throw ArgumentError("one_hot: class " + std::to_string(class_index) + " out of range for " +
                        std::to_string(num_classes) + " classes");
  }
  ClassDistribution d{std::vector<double>(num_classes, 0.0)};
  d.probs[class_index] = 1.0;
  return d;
}

bool Dataset::has_oracle() const {
  if (examples_.empty()) return false;
  return std::all_of(examples_.begin(), examples_.end(),
                     [](const Example& e) { return e.true_label.has_value(); });
}

TrainingView Dataset::training_view() const {
  TrainingView view;
  view.num_classes = num_classes_;
  view.texts.reserve(examples_.size());
  view.labels.reserve(examples_.size());
  for (const auto& e : examples_) {
    view.texts.push_back(e.text);
    view.labels.push_back(e.observed_label);
  }
  return view;
}

EvaluationView Dataset::evaluation_view() const {
  EvaluationView view;
  if (!has_oracle()) return view;
  view.true_labels.reserve(examples_.size());
  view.noisy.reserve(examples_.size());
  for (const auto& e : examples_) {
    view.true_labels.push_back(*e.true_label);
    view.noisy.push_back(*e.true_label != e.observed_label);
  }
  return view;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes_, 0);
  for (const auto& e : examples_) {
    if (e.observed_label < num_classes_) ++counts[e.observed_label];
  }
  return counts;
}

std::size_t ValidationReport::count(Finding::Kind kind) const {
  return static_cast<std::size_t>(std::count_if(
      findings.begin(), findings.end(), [kind](const Finding& f) { return f.kind == kind; }));
}

ValidationReport validate(const Dataset& dataset) {
  ValidationReport report;
  const std::size_t n = dataset.size();
  const std::size_t c = dataset.num_classes();
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const Example& e = dataset[i];
    auto add = [&](Finding::Kind kind, std::string msg) {
      report.findings.push_back({kind, i, "example " + std::to_string(e.id) + ": " + std::move(msg)});
    };
    if (e.id >= n) {
      add(Finding::Kind::IdOutOfRange, "id out of range");
    } else if (seen[e.id]) {
      add(Finding::Kind::DuplicateId, "duplicate id");
    } else {
      seen[e.id] = true;
    }
    if (e.observed_label >= c) add(Finding::Kind::LabelOutOfRange, "label out of range");
    if (e.true_label && *e.true_label >= c) {
      add(Finding::Kind::LabelOutOfRange, "true label out of range");
    }
    if (e.text.empty()) add(Finding::Kind::EmptyText, "empty text");
    if (e.true_label && e.corrupted && *e.corrupted != (e.observed_label != *e.true_label)) {
      add(Finding::Kind::MaskInconsistency, "mask inconsistency");
    }
  }
  return report;
}

std::vector<std::size_t> stratified_indices(const Dataset& dataset, std::size_t n,
                                            std::uint64_t seed) {
  const std::size_t total = dataset.size();
  if (n > total) {
    throw ArgumentError("stratified_subsample: n=" + std::to_string(n) + " exceeds N=" +
                        std::to_string(total));
  }
  const std::size_t classes = dataset.num_classes();
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < total; ++i) {
    const ClassIndex label = dataset[i].observed_label;
    if (label >= classes) throw ArgumentError("stratified_subsample: label out of range");
    members[label].push_back(i);
  }

  // Largest remainder apportionment; ties go to the lower class index.
  std::vector<std::size_t> quota(classes, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double exact = total == 0 ? 0.0
                                    : static_cast<double>(members[c].size()) *
                                          static_cast<double>(n) / static_cast<double>(total);
    quota[c] = std::min(members[c].size(), static_cast<std::size_t>(std::floor(exact)));
    assigned += quota[c];
    remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n && k < remainders.size(); ++k) {
    const std::size_t c = remainders[k].second;
    if (quota[c] < members[c].size()) {
      ++quota[c];
      ++assigned;
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  for (std::size_t c = 0; c < classes; ++c) {
    auto pool = members[c];
    rng.shuffle(std::span<std::size_t>(pool));
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota[c]));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Dataset stratified_subsample(const Dataset& dataset, std::size_t n, std::uint64_t seed) {
  const auto chosen = stratified_indices(dataset, n, seed);
  std::vector<Example> out;
  out.reserve(chosen.size());
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    Example e = dataset[chosen[k]];
    e.id = k;
    out.push_back(std::move(e));
  }
  return Dataset(dataset.name(), dataset.num_classes(), std::move(out));
}

}  // namespace selfmix
