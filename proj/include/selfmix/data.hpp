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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace selfmix {

using ClassIndex = std::size_t;

/// One labeled text. `true_label` and `corrupted` form the oracle channel:
/// they exist so noise injection and selection can be scored, and are never
/// consulted by any training code path (see Dataset::training_view).
struct Example {
  std::size_t id = 0;
  std::string text;
  ClassIndex observed_label = 0;
  std::optional<ClassIndex> true_label;
  std::optional<bool> corrupted;

  bool operator==(const Example&) const = default;
};

/// Probability vector over C classes.
struct ClassDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
  double& operator[](std::size_t i) { return probs[i]; }

  /// Non-negative entries summing to 1 within `tol`.
  bool on_simplex(double tol = 1e-9) const;
  /// Lowest index among the maximal entries.
  ClassIndex argmax() const;
};

ClassDistribution one_hot(ClassIndex class_index, std::size_t num_classes);

/// What the optimization path is allowed to see: texts and observed labels.
struct TrainingView {
  std::vector<std::string> texts;
  std::vector<ClassIndex> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return texts.size(); }
};

/// Oracle side of a dataset, for metrics only. Empty vectors when the
/// dataset carries no ground truth.
struct EvaluationView {
  std::vector<ClassIndex> true_labels;
  std::vector<bool> noisy;

  bool has_oracle() const { return !noisy.empty(); }
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, std::size_t num_classes, std::vector<Example> examples)
      : name_(std::move(name)), num_classes_(num_classes), examples_(std::move(examples)) {}

  const std::string& name() const { return name_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }

  const std::vector<Example>& examples() const { return examples_; }
  const Example& operator[](std::size_t i) const { return examples_[i]; }

  /// True when every example carries a true label.
  bool has_oracle() const;

  TrainingView training_view() const;
  EvaluationView evaluation_view() const;

  /// Per-class counts of observed labels.
  std::vector<std::size_t> class_counts() const;

 private:
  std::string name_;
  std::size_t num_classes_ = 0;
  std::vector<Example> examples_;
};

struct Finding {
  enum class Kind { DuplicateId, IdOutOfRange, LabelOutOfRange, EmptyText, MaskInconsistency };
  Kind kind;
  std::size_t example_index;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;
  bool ok() const { return findings.empty(); }
  std::size_t count(Finding::Kind kind) const;
};

ValidationReport validate(const Dataset& dataset);

/// Class-stratified sample of `n` examples. Per-class quotas follow the
/// largest-remainder rule, so each differs from exact proportionality by
/// less than one. Output keeps ascending id order and is renumbered 0..n-1;
/// original ids are not preserved. Deterministic given `seed`.
Dataset stratified_subsample(const Dataset& dataset, std::size_t n, std::uint64_t seed);

/// Indices into `dataset` chosen by stratified_subsample, ascending.
std::vector<std::size_t> stratified_indices(const Dataset& dataset, std::size_t n,
                                            std::uint64_t seed);

// CSV corpus format: header `label,text` or `label,text,true_label`;
// label is a 0-based integer; RFC-4180 quoting.

/// Reads a corpus. When `num_classes` is set, labels must be below it;
/// otherwise C = max label + 1. Ids follow row order.
Dataset read_csv_dataset(const std::string& path, std::optional<std::size_t> num_classes = {});
Dataset parse_csv_dataset(const std::string& content, std::string name,
                          std::optional<std::size_t> num_classes = {});

/// Writes a corpus; the `true_label` column is emitted iff the dataset has
/// an oracle channel.
void write_csv_dataset(const Dataset& dataset, const std::string& path);
std::string format_csv_dataset(const Dataset& dataset);

/// Splits RFC-4180 CSV into records. Throws ParseError on an unterminated quote.
std::vector<std::vector<std::string>> parse_csv_records(const std::string& content,
                                                        std::vector<std::size_t>* record_lines = nullptr);
std::string csv_quote(const std::string& field);

}  // namespace selfmix
