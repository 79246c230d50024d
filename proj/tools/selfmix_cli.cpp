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

// selfmix: command-line front end.
//
//   selfmix inject-noise --in F --out D --type {uniform|asym|idn} --ratio R --seed S [--transition F]
//   selfmix train-baseline --config F
//   selfmix train-selfmix --config F
//   selfmix run --config F
//   selfmix analyze-losses --model F --data F --out F [--bins N]
//   selfmix report --dir D
//   selfmix gen-corpus --out D [--seed S] [--classes C] [--train N] [--test N]
//
// Exit status: 0 success, 1 argument error, 2 runtime or numeric error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "selfmix/error.hpp"
#include "selfmix/harness.hpp"

namespace fs = std::filesystem;
using namespace selfmix;

namespace {

constexpr int kArgumentError = 1;
constexpr int kRuntimeError = 2;

int inject_noise(const std::string& in, const std::string& out_dir, const std::string& type,
                 double ratio, std::uint64_t seed, const std::string& transition,
                 std::optional<std::size_t> num_classes) {
  if (!fs::is_regular_file(in)) throw ArgumentError("input corpus not found: '" + in + "'");
  if (!transition.empty() && !fs::is_regular_file(transition)) {
    throw ArgumentError("transition file not found: '" + transition + "'");
  }
  const NoiseType kind = parse_noise_type(type);
  const Dataset data = load_csv_dataset(in, num_classes);
  NoiseResult result;
  switch (kind) {
    case NoiseType::Uniform:
      result = inject_uniform(data, ratio, seed);
      break;
    case NoiseType::Asymmetric:
      result = inject_asymmetric(data, ratio,
                                 transition.empty() ? TransitionMap::cyclic(data.num_classes())
                                                    : TransitionMap::read(transition, data.num_classes()),
                                 seed);
      break;
    case NoiseType::InstanceDependent:
      result = inject_instance_dependent(data, ratio, IdnOptions{}, seed);
      break;
  }
  fs::create_directories(out_dir);
  write_csv_dataset(result.dataset, (fs::path(out_dir) / "noisy_train.csv").string());
  write_manifest(result.manifest, (fs::path(out_dir) / "manifest.csv").string());
  std::cout << "flipped " << result.manifest.num_flipped() << " of " << data.size() << " labels\n";
  return 0;
}

int analyze_losses(const std::string& model_path, const std::string& data_path,
                   const std::string& out_path, std::size_t bins) {
  if (!fs::is_regular_file(model_path)) throw ArgumentError("model not found: '" + model_path + "'");
  if (!fs::is_regular_file(data_path)) throw ArgumentError("data not found: '" + data_path + "'");
  if (bins == 0) throw ArgumentError("--bins must be >= 1");
  const ModelParams params = load_checkpoint(model_path);
  const Dataset data = load_csv_dataset(data_path, params.classes);
  const Corpus corpus = featurize_corpus(data.training_view(), static_cast<std::uint32_t>(params.buckets));
  const std::vector<double> losses = per_sample_losses(params, corpus);
  const CorruptionManifest manifest = CorruptionManifest::from_dataset(data);
  emit_loss_histogram(losses, manifest, bins, out_path,
                      {"model = " + model_path, "data = " + data_path, "bins = " + std::to_string(bins)});
  std::cout << "wrote " << out_path << " (" << losses.size() << " losses, " << manifest.num_flipped()
            << " noisy)\n";
  return 0;
}

int report(const std::string& dir) {
  const fs::path path = fs::path(dir) / "summary.json";
  std::ifstream in(path);
  if (!in) throw ArgumentError("no summary.json in '" + dir + "'");
  const auto summary = nlohmann::ordered_json::parse(in);
  std::cout << render_summary(summary);
  return 0;
}

int gen_corpus(const std::string& out_dir, const SyntheticCorpusOptions& options) {
  const SyntheticCorpus corpus = make_synthetic_corpus(options);
  fs::create_directories(out_dir);
  write_csv_dataset(corpus.train, (fs::path(out_dir) / "train.csv").string());
  write_csv_dataset(corpus.test, (fs::path(out_dir) / "test.csv").string());
  std::cout << "wrote " << corpus.train.size() << " train / " << corpus.test.size() << " test examples to "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy-label text classification lab (SelfMix and a cross-entropy baseline)"};
  app.require_subcommand(1);

  std::string in, out, type, transition, config_path, model, data, dir;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::size_t bins = 20;
  std::size_t num_classes = 0;

  auto* inject = app.add_subcommand("inject-noise", "Corrupt a corpus and write the manifest");
  inject->add_option("--in", in, "Input corpus CSV")->required();
  inject->add_option("--out", out, "Output directory")->required();
  inject->add_option("--type", type, "uniform | asym | idn")->required();
  inject->add_option("--ratio", ratio, "Fraction of labels to flip, in [0, 1)")->required();
  inject->add_option("--seed", seed, "Random seed")->required();
  inject->add_option("--transition", transition, "Asymmetric map file (lines 'from,to')");
  inject->add_option("--num-classes", num_classes, "Class count (default: max label + 1)");

  auto* baseline = app.add_subcommand("train-baseline", "Train the plain cross-entropy baseline");
  baseline->add_option("--config", config_path, "Experiment config")->required();
  auto* selfmix_cmd = app.add_subcommand("train-selfmix", "Train with SelfMix");
  selfmix_cmd->add_option("--config", config_path, "Experiment config")->required();
  auto* run = app.add_subcommand("run", "Inject noise, train both arms and write summary.json");
  run->add_option("--config", config_path, "Experiment config")->required();

  auto* analyze = app.add_subcommand("analyze-losses", "Per-sample loss histogram of a checkpoint");
  analyze->add_option("--model", model, "Model checkpoint (.smx)")->required();
  analyze->add_option("--data", data, "Corpus CSV (true_label column marks noisy rows)")->required();
  analyze->add_option("--out", out, "Histogram CSV to write")->required();
  analyze->add_option("--bins", bins, "Number of bins");

  auto* report_cmd = app.add_subcommand("report", "Render an experiment summary as a table");
  report_cmd->add_option("--dir", dir, "Experiment output directory")->required();

  SyntheticCorpusOptions corpus_opts;
  auto* gen = app.add_subcommand("gen-corpus", "Write the synthetic topic-word corpus");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", corpus_opts.seed, "Random seed");
  gen->add_option("--classes", corpus_opts.num_classes, "Number of classes");
  gen->add_option("--train", corpus_opts.train_size, "Training examples");
  gen->add_option("--test", corpus_opts.test_size, "Test examples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kArgumentError;
  }

  try {
    if (*inject) {
      return inject_noise(in, out, type, ratio, seed, transition,
                          num_classes ? std::optional<std::size_t>(num_classes) : std::nullopt);
    }
    if (*baseline || *selfmix_cmd) {
      const ExperimentConfig config = load_config(config_path);
      const TrainReport r = run_arm(config, *baseline ? Arm::Baseline : Arm::SelfMix);
      std::cout << r.arm << ": best_acc " << r.best_acc << " last_acc " << r.last_acc << "\n";
      return 0;
    }
    if (*run) {
      const ExperimentConfig config = load_config(config_path);
      const ExperimentResult r = run_experiment(config);
      std::cout << render_summary(r.summary);
      return 0;
    }
    if (*analyze) return analyze_losses(model, data, out, bins);
    if (*report_cmd) return report(dir);
    if (*gen) return gen_corpus(out, corpus_opts);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kArgumentError;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kArgumentError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kArgumentError;
}
