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
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "selfmix/adam.hpp"
#include "selfmix/data.hpp"
#include "selfmix/model.hpp"

namespace selfmix {

enum class NoiseType { Uniform, Asymmetric, InstanceDependent };

std::string to_string(NoiseType type);
/// Accepts "uniform", "asym"/"asymmetric", "idn"/"instance_dependent".
NoiseType parse_noise_type(const std::string& name);

/// Class c is relabeled to target(c) != c.
class TransitionMap {
 public:
  TransitionMap() = default;
  /// Throws ArgumentError unless the map is total and fixed-point free.
  explicit TransitionMap(std::vector<ClassIndex> targets);

  /// c -> (c + 1) mod C.
  static TransitionMap cyclic(std::size_t num_classes);
  /// Lines "from,to" (or whitespace separated); '#' starts a comment.
  static TransitionMap parse(const std::string& content, std::size_t num_classes);
  static TransitionMap read(const std::string& path, std::size_t num_classes);

  std::size_t num_classes() const { return targets_.size(); }
  ClassIndex operator()(ClassIndex c) const { return targets_.at(c); }
  const std::vector<ClassIndex>& targets() const { return targets_; }

 private:
  std::vector<ClassIndex> targets_;
};

struct Flip {
  std::size_t id;
  ClassIndex old_label;
  ClassIndex new_label;
};

struct CorruptionManifest {
  NoiseType noise_type = NoiseType::Uniform;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::size_t num_examples = 0;
  std::vector<Flip> flips;  // ascending id
  /// counts[from][to] over flipped examples (from = label before injection).
  std::vector<std::vector<std::size_t>> flip_counts;

  std::set<std::size_t> flipped_ids() const;
  std::size_t num_flipped() const { return flips.size(); }
  /// Dense mask of length num_examples.
  std::vector<bool> noisy_mask() const;

  /// Manifest with no flips, used to describe an oracle dataset's existing
  /// corruption (true_label vs observed_label).
  static CorruptionManifest from_dataset(const Dataset& dataset);
};

/// Sidecar format: `# noise_type,ratio,seed` then its values as a comment
/// line, the CSV `id,old_label,new_label`, and the flip-count matrix as
/// `# counts <from>: n0 n1 ...` lines.
std::string format_manifest(const CorruptionManifest& manifest);
void write_manifest(const CorruptionManifest& manifest, const std::string& path);

struct NoiseResult {
  Dataset dataset;
  CorruptionManifest manifest;
};

/// round(ratio * N) examples chosen uniformly, each moved to a uniformly
/// chosen class other than its true one.
NoiseResult inject_uniform(const Dataset& dataset, double ratio, std::uint64_t seed);

/// For each class c, round(ratio * N_c) of its examples relabeled to t(c).
NoiseResult inject_asymmetric(const Dataset& dataset, double ratio, const TransitionMap& transition,
                              std::uint64_t seed);

struct IdnOptions {
  double aux_subset_fraction = 0.1;
  int aux_epochs = 2;
  std::size_t aux_batch_size = 32;
  EncoderConfig encoder{1u << 16, 32, 0.0, 0.1};
  AdamConfig optimizer{1e-2, 0.9, 0.999, 1e-8};
};

/// Trains an auxiliary classifier on a stratified subset, then flips the
/// round(ratio * N) examples with the smallest margin
/// p(true) - max_{c != true} p(c) to that strongest competing class.
/// Margin ties break by ascending id.
NoiseResult inject_instance_dependent(const Dataset& dataset, double ratio,
                                      const IdnOptions& options, std::uint64_t seed);

/// Margins of every example under `params` (dropout off).
std::vector<double> true_label_margins(const Dataset& dataset, const ModelParams& params,
                                       std::uint32_t buckets,
                                       std::vector<ClassIndex>* strongest_other = nullptr);

}  // namespace selfmix
