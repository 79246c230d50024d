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

// Experiment harness: config files, corpus generation, reports and
// diagnostics, and the end-to-end noisy-label experiment.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "selfmix/data.hpp"
#include "selfmix/noise.hpp"
#include "selfmix/selfmix.hpp"

#include <json.hpp>

namespace selfmix {

// ---- Config ---------------------------------------------------------------

struct NoiseSpec {
  std::string type = "none";  // none | uniform | asym | idn
  double ratio = 0.0;
  std::optional<std::uint64_t> seed;  // defaults to a sub-seed of the root seed
  std::string transition_path;        // asym only; cyclic shift when empty
  double aux_fraction = 0.1;          // idn only
};

struct ExperimentConfig {
  std::string train_path;
  std::string test_path;
  std::optional<std::size_t> num_classes;
  NoiseSpec noise;
  TrainerSetup setup;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::size_t histogram_bins = 20;

  std::uint64_t noise_seed() const;
  /// Every setting as sorted `key = value` pairs, using the config-file keys.
  std::vector<std::pair<std::string, std::string>> echo() const;
  /// Range checks; throws ArgumentError.
  void validate() const;
};

/// Flat `key = value` lines, `#` comments. Unknown keys and malformed values
/// raise ParseError with the line number.
ExperimentConfig parse_config(const std::string& content);
ExperimentConfig load_config(const std::string& path);
std::string format_config(const ExperimentConfig& config);

// ---- Corpus ---------------------------------------------------------------

/// Loads a `label,text[,true_label]` CSV corpus.
inline Dataset load_csv_dataset(const std::string& path,
                                std::optional<std::size_t> num_classes = {}) {
  return read_csv_dataset(path, num_classes);
}

/// Topic-word corpus for desk-scale experiments. Each document mixes words
/// from its class vocabulary with words from a vocabulary shared by every
/// class (`ambiguity` is the expected shared fraction).
struct SyntheticCorpusOptions {
  std::size_t num_classes = 4;
  std::size_t train_size = 2000;
  std::size_t test_size = 500;
  std::size_t words_per_class = 60;
  std::size_t shared_words = 120;
  double ambiguity = 0.3;
  std::size_t min_length = 8;
  std::size_t max_length = 16;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  Dataset train;
  Dataset test;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusOptions& options);

// ---- Metrics and diagnostics -----------------------------------------------

/// Throws ArgumentError when the manifest describes a different dataset size.
SelectionMetrics selection_metrics(const DataSplit& split, const CorruptionManifest& manifest);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t clean = 0;
  std::size_t noisy = 0;
};

/// Equal-width bins over [min, max]; the last bin is right-closed.
std::vector<HistogramBin> loss_histogram(const std::vector<double>& losses,
                                         const std::vector<bool>& noisy, std::size_t bins);

/// CSV `bin_left,bin_right,clean_count,noisy_count`, preceded by `# ` comment
/// lines for each entry of `comments`.
void emit_loss_histogram(const std::vector<double>& losses, const CorruptionManifest& manifest,
                         std::size_t bins, const std::string& path,
                         const std::vector<std::string>& comments = {});
std::string format_histogram(const std::vector<HistogramBin>& hist,
                             const std::vector<std::string>& comments = {});

// ---- Reports ----------------------------------------------------------------

nlohmann::ordered_json report_to_json(const TrainReport& report,
                                      const std::vector<std::pair<std::string, std::string>>& echo);
/// One row per epoch; config echo as leading `# key = value` lines.
std::string report_to_csv(const TrainReport& report,
                          const std::vector<std::pair<std::string, std::string>>& echo);
void write_report(const TrainReport& report, const ExperimentConfig& config,
                  const std::string& stem);

/// Text table for a summary JSON written by run_experiment.
std::string render_summary(const nlohmann::ordered_json& summary);

// ---- Orchestration ------------------------------------------------------------

/// Error raised from a named experiment stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, bool numeric)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), numeric_(numeric) {}
  const std::string& stage() const { return stage_; }
  bool numeric() const { return numeric_; }

 private:
  std::string stage_;
  bool numeric_;
};

struct PreparedData {
  Dataset train;  // after noise injection
  Dataset test;
  std::optional<CorruptionManifest> manifest;
};

/// Loads train/test and applies the configured noise. Writes
/// `noisy_train.csv` and `manifest.csv` to the output directory when noise
/// is injected.
PreparedData prepare_data(const ExperimentConfig& config, bool write_outputs);

struct ExperimentResult {
  TrainReport baseline;
  TrainReport selfmix;
  nlohmann::ordered_json summary;
};

/// inject noise -> baseline -> SelfMix -> summary.json, all under
/// config.output_dir. Missing inputs fail before anything is written.
ExperimentResult run_experiment(const ExperimentConfig& config);

enum class Arm { Baseline, SelfMix };

/// One training arm with its report, per-epoch histograms (SelfMix) and a
/// model checkpoint `<arm>_model.smx`.
TrainReport run_arm(const ExperimentConfig& config, Arm arm);

/// Checks that the configured input files exist (ArgumentError otherwise).
void check_inputs(const ExperimentConfig& config);

}  // namespace selfmix
