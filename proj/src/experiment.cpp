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

#include <filesystem>
#include <fstream>

#include "selfmix/error.hpp"
#include "selfmix/harness.hpp"

namespace fs = std::filesystem;

namespace selfmix {

namespace {

std::string path_in(const ExperimentConfig& config, const std::string& name) {
  return (fs::path(config.output_dir) / name).string();
}

std::string arm_name(Arm arm) { return arm == Arm::Baseline ? "baseline" : "selfmix"; }

template <typename F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const NumericError& e) {
    throw StageError(name, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), false);
  }
}

nlohmann::ordered_json arm_summary(const TrainReport& report) {
  nlohmann::ordered_json a;
  a["best_acc"] = report.best_acc;
  a["last_acc"] = report.last_acc;
  a["per_epoch_acc"] = nlohmann::ordered_json::array();
  for (const auto& e : report.epochs) a["per_epoch_acc"].push_back(e.test_acc);
  if (!report.epochs.empty() && report.epochs.back().selection) {
    a["final_sel_f1"] = report.epochs.back().selection->f1;
  } else {
    a["final_sel_f1"] = nullptr;
  }
  return a;
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusOptions& o) {
  if (o.num_classes < 2 || o.words_per_class == 0 || o.min_length == 0 || o.max_length < o.min_length) {
    throw ArgumentError("make_synthetic_corpus: invalid options");
  }
  if (!(o.ambiguity >= 0.0 && o.ambiguity <= 1.0) || (o.ambiguity > 0.0 && o.shared_words == 0)) {
    throw ArgumentError("make_synthetic_corpus: ambiguity needs a shared vocabulary");
  }
  Rng rng(o.seed);
  auto make_split = [&](std::size_t n, const std::string& name) {
    std::vector<Example> examples;
    examples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const ClassIndex label = i % o.num_classes;
      const std::size_t len = o.min_length + rng.uniform_index(o.max_length - o.min_length + 1);
      std::string text;
      for (std::size_t t = 0; t < len; ++t) {
        if (t) text.push_back(' ');
        if (rng.uniform01() < o.ambiguity) {
          text += "s" + std::to_string(rng.uniform_index(o.shared_words));
        } else {
          text += "c" + std::to_string(label) + "w" + std::to_string(rng.uniform_index(o.words_per_class));
        }
      }
      examples.push_back({i, std::move(text), label, label, false});
    }
    return Dataset(name, o.num_classes, std::move(examples));
  };
  SyntheticCorpus corpus;
  corpus.train = make_split(o.train_size, "synthetic-train");
  corpus.test = make_split(o.test_size, "synthetic-test");
  return corpus;
}

void check_inputs(const ExperimentConfig& config) {
  if (config.train_path.empty() || !fs::is_regular_file(config.train_path)) {
    throw ArgumentError("train corpus not found: '" + config.train_path + "'");
  }
  if (config.test_path.empty() || !fs::is_regular_file(config.test_path)) {
    throw ArgumentError("test corpus not found: '" + config.test_path + "'");
  }
  if (!config.noise.transition_path.empty() && !fs::is_regular_file(config.noise.transition_path)) {
    throw ArgumentError("transition file not found: '" + config.noise.transition_path + "'");
  }
}

PreparedData prepare_data(const ExperimentConfig& config, bool write_outputs) {
  PreparedData data;
  stage("load", [&] {
    data.train = load_csv_dataset(config.train_path, config.num_classes);
    const std::size_t classes = data.train.num_classes();
    data.test = load_csv_dataset(config.test_path, config.num_classes.value_or(classes));
    if (data.test.num_classes() != classes) throw ArgumentError("train/test class counts differ");
    const auto report = validate(data.train);
    if (!report.ok()) throw ArgumentError("invalid train corpus: " + report.findings.front().message);
  });
  if (config.noise.type == "none") {
    if (data.train.has_oracle()) data.manifest = CorruptionManifest::from_dataset(data.train);
    return data;
  }
  stage("noise", [&] {
    const NoiseType type = parse_noise_type(config.noise.type);
    const std::uint64_t seed = config.noise_seed();
    NoiseResult result;
    switch (type) {
      case NoiseType::Uniform:
        result = inject_uniform(data.train, config.noise.ratio, seed);
        break;
      case NoiseType::Asymmetric: {
        const std::size_t c = data.train.num_classes();
        const TransitionMap map = config.noise.transition_path.empty()
                                      ? TransitionMap::cyclic(c)
                                      : TransitionMap::read(config.noise.transition_path, c);
        result = inject_asymmetric(data.train, config.noise.ratio, map, seed);
        break;
      }
      case NoiseType::InstanceDependent: {
        IdnOptions idn;
        idn.aux_subset_fraction = config.noise.aux_fraction;
        result = inject_instance_dependent(data.train, config.noise.ratio, idn, seed);
        break;
      }
    }
    data.train = std::move(result.dataset);
    data.manifest = std::move(result.manifest);
    if (write_outputs) {
      write_csv_dataset(data.train, path_in(config, "noisy_train.csv"));
      write_manifest(*data.manifest, path_in(config, "manifest.csv"));
    }
  });
  return data;
}

namespace {

TrainReport train_arm(const ExperimentConfig& config, const PreparedData& data, Arm arm) {
  const std::string name = arm_name(arm);
  return stage(name, [&] {
    TrainHooks hooks;
    hooks.on_finish = [&](const ModelParams& params) {
      save_checkpoint(params, path_in(config, name + "_model.smx"));
    };
    const CorruptionManifest manifest =
        data.manifest.value_or(CorruptionManifest::from_dataset(data.train));
    if (arm == Arm::SelfMix) {
      hooks.on_selection = [&](const SelectionSnapshot& snap) {
        std::vector<std::string> comments{"epoch = " + std::to_string(snap.epoch)};
        for (const auto& [k, v] : config.echo()) comments.push_back(k + " = " + v);
        emit_loss_histogram(std::vector<double>(snap.losses.begin(), snap.losses.end()), manifest,
                            config.histogram_bins,
                            path_in(config, "selfmix_hist_epoch" + std::to_string(snap.epoch) + ".csv"),
                            comments);
      };
    }
    TrainReport report = arm == Arm::SelfMix ? train_selfmix(config.setup, data.train, data.test, hooks)
                                             : train_baseline(config.setup, data.train, data.test, hooks);
    write_report(report, config, path_in(config, name + "_report"));
    return report;
  });
}

}  // namespace

TrainReport run_arm(const ExperimentConfig& config, Arm arm) {
  config.validate();
  check_inputs(config);
  fs::create_directories(config.output_dir);
  const PreparedData data = prepare_data(config, true);
  return train_arm(config, data, arm);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  check_inputs(config);
  fs::create_directories(config.output_dir);

  ExperimentResult result;
  auto& summary = result.summary;
  summary["status"] = "running";
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config.echo()) cfg[k] = v;
  summary["config"] = cfg;

  const std::string summary_path = path_in(config, "summary.json");
  try {
    const PreparedData data = prepare_data(config, true);
    nlohmann::ordered_json noise;
    noise["type"] = config.noise.type;
    noise["ratio"] = config.noise.ratio;
    noise["flipped"] = data.manifest ? data.manifest->num_flipped() : 0;
    summary["noise"] = noise;

    result.baseline = train_arm(config, data, Arm::Baseline);
    summary["baseline"] = arm_summary(result.baseline);
    result.selfmix = train_arm(config, data, Arm::SelfMix);
    summary["selfmix"] = arm_summary(result.selfmix);
    summary["status"] = "ok";
  } catch (const StageError& e) {
    summary["status"] = "failed";
    summary["failed_stage"] = e.stage();
    summary["error"] = e.what();
    write_json(summary_path, summary);
    throw;
  }
  write_json(summary_path, summary);
  return result;
}

}  // namespace selfmix
