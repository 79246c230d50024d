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

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "selfmix/error.hpp"
#include "selfmix/harness.hpp"

namespace selfmix {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string fmt_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(x);
}

template <typename T>
T parse_number(const std::string& v, std::size_t line) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError("invalid number '" + v + "'", line);
  }
  return out;
}

bool parse_bool(const std::string& v, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("invalid boolean '" + v + "'", line);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, std::size_t)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"data.train", [](auto& c, auto& v, auto) { c.train_path = v; }},
      {"data.test", [](auto& c, auto& v, auto) { c.test_path = v; }},
      {"data.num_classes",
       [](auto& c, auto& v, auto l) {
         if (v == "auto") c.num_classes.reset();
         else c.num_classes = parse_number<std::size_t>(v, l);
       }},
      {"noise.type", [](auto& c, auto& v, auto) { c.noise.type = v; }},
      {"noise.ratio", [](auto& c, auto& v, auto l) { c.noise.ratio = parse_number<double>(v, l); }},
      {"noise.seed", [](auto& c, auto& v, auto l) { c.noise.seed = parse_number<std::uint64_t>(v, l); }},
      {"noise.transition",
       [](auto& c, auto& v, auto) { c.noise.transition_path = v == "cyclic" ? std::string() : v; }},
      {"noise.aux_fraction",
       [](auto& c, auto& v, auto l) { c.noise.aux_fraction = parse_number<double>(v, l); }},
      {"selfmix.tau", [](auto& c, auto& v, auto l) { c.setup.selfmix.tau = parse_number<double>(v, l); }},
      {"selfmix.lambda_p",
       [](auto& c, auto& v, auto l) { c.setup.selfmix.lambda_p = parse_number<double>(v, l); }},
      {"selfmix.lambda_r",
       [](auto& c, auto& v, auto l) { c.setup.selfmix.lambda_r = parse_number<double>(v, l); }},
      {"selfmix.alpha", [](auto& c, auto& v, auto l) { c.setup.selfmix.alpha = parse_number<double>(v, l); }},
      {"selfmix.temperature",
       [](auto& c, auto& v, auto l) { c.setup.selfmix.temperature = parse_number<double>(v, l); }},
      {"selfmix.warmup_epochs",
       [](auto& c, auto& v, auto l) { c.setup.selfmix.warmup_epochs = parse_number<int>(v, l); }},
      {"selfmix.warmup_samples",
       [](auto& c, auto& v, auto l) {
         if (v == "none") c.setup.selfmix.warmup_samples.reset();
         else c.setup.selfmix.warmup_samples = parse_number<std::size_t>(v, l);
       }},
      {"selfmix.epochs",
       [](auto& c, auto& v, auto l) { c.setup.selfmix.total_epochs = parse_number<int>(v, l); }},
      {"selfmix.batch_size",
       [](auto& c, auto& v, auto l) { c.setup.selfmix.batch_size = parse_number<std::size_t>(v, l); }},
      {"selfmix.class_regularize",
       [](auto& c, auto& v, auto l) { c.setup.selfmix.class_regularize = parse_bool(v, l); }},
      {"selfmix.sum_regularizers",
       [](auto& c, auto& v, auto l) { c.setup.selfmix.sum_regularizers = parse_bool(v, l); }},
      {"selfmix.eval_every",
       [](auto& c, auto& v, auto l) { c.setup.selfmix.eval_every = parse_number<std::size_t>(v, l); }},
      {"selfmix.gmm_max_iter",
       [](auto& c, auto& v, auto l) { c.setup.selfmix.gmm.max_iter = parse_number<int>(v, l); }},
      {"selfmix.gmm_tol",
       [](auto& c, auto& v, auto l) { c.setup.selfmix.gmm.tol = parse_number<double>(v, l); }},
      {"encoder.buckets",
       [](auto& c, auto& v, auto l) { c.setup.encoder.buckets = parse_number<std::uint32_t>(v, l); }},
      {"encoder.hidden",
       [](auto& c, auto& v, auto l) { c.setup.encoder.hidden = parse_number<std::size_t>(v, l); }},
      {"encoder.dropout",
       [](auto& c, auto& v, auto l) { c.setup.encoder.dropout_rate = parse_number<double>(v, l); }},
      {"encoder.embedding_init",
       [](auto& c, auto& v, auto l) { c.setup.encoder.embedding_init = parse_number<double>(v, l); }},
      {"optim.lr",
       [](auto& c, auto& v, auto l) { c.setup.optimizer.learning_rate = parse_number<double>(v, l); }},
      {"optim.beta1", [](auto& c, auto& v, auto l) { c.setup.optimizer.beta1 = parse_number<double>(v, l); }},
      {"optim.beta2", [](auto& c, auto& v, auto l) { c.setup.optimizer.beta2 = parse_number<double>(v, l); }},
      {"optim.epsilon",
       [](auto& c, auto& v, auto l) { c.setup.optimizer.epsilon = parse_number<double>(v, l); }},
      {"seed",
       [](auto& c, auto& v, auto l) {
         c.seed = parse_number<std::uint64_t>(v, l);
         c.setup.selfmix.seed = c.seed;
       }},
      {"output.dir", [](auto& c, auto& v, auto) { c.output_dir = v; }},
      {"output.bins",
       [](auto& c, auto& v, auto l) { c.histogram_bins = parse_number<std::size_t>(v, l); }},
  };
  return table;
}

}  // namespace

std::uint64_t ExperimentConfig::noise_seed() const {
  return noise.seed.value_or(derive_seed(seed, "noise"));
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  const auto& s = setup.selfmix;
  std::vector<std::pair<std::string, std::string>> kv = {
      {"data.train", train_path},
      {"data.test", test_path},
      {"data.num_classes", num_classes ? std::to_string(*num_classes) : "auto"},
      {"encoder.buckets", std::to_string(setup.encoder.buckets)},
      {"encoder.dropout", fmt_double(setup.encoder.dropout_rate)},
      {"encoder.embedding_init", fmt_double(setup.encoder.embedding_init)},
      {"encoder.hidden", std::to_string(setup.encoder.hidden)},
      {"noise.aux_fraction", fmt_double(noise.aux_fraction)},
      {"noise.ratio", fmt_double(noise.ratio)},
      {"noise.seed", std::to_string(noise_seed())},
      {"noise.transition", noise.transition_path.empty() ? "cyclic" : noise.transition_path},
      {"noise.type", noise.type},
      {"optim.beta1", fmt_double(setup.optimizer.beta1)},
      {"optim.beta2", fmt_double(setup.optimizer.beta2)},
      {"optim.epsilon", fmt_double(setup.optimizer.epsilon)},
      {"optim.lr", fmt_double(setup.optimizer.learning_rate)},
      {"output.bins", std::to_string(histogram_bins)},
      {"output.dir", output_dir},
      {"seed", std::to_string(seed)},
      {"selfmix.alpha", fmt_double(s.alpha)},
      {"selfmix.batch_size", std::to_string(s.batch_size)},
      {"selfmix.class_regularize", s.class_regularize ? "true" : "false"},
      {"selfmix.epochs", std::to_string(s.total_epochs)},
      {"selfmix.eval_every", std::to_string(s.eval_every)},
      {"selfmix.gmm_max_iter", std::to_string(s.gmm.max_iter)},
      {"selfmix.gmm_tol", fmt_double(s.gmm.tol)},
      {"selfmix.lambda_p", fmt_double(s.lambda_p)},
      {"selfmix.lambda_r", fmt_double(s.lambda_r)},
      {"selfmix.sum_regularizers", s.sum_regularizers ? "true" : "false"},
      {"selfmix.tau", fmt_double(s.tau)},
      {"selfmix.temperature", fmt_double(s.temperature)},
      {"selfmix.warmup_epochs", std::to_string(s.warmup_epochs)},
      {"selfmix.warmup_samples", s.warmup_samples ? std::to_string(*s.warmup_samples) : "none"},
  };
  std::sort(kv.begin(), kv.end());
  return kv;
}

void ExperimentConfig::validate() const {
  setup.selfmix.validate();
  if (noise.type != "none") parse_noise_type(noise.type);
  if (!(noise.ratio >= 0.0 && noise.ratio < 1.0)) throw ArgumentError("noise.ratio must be in [0, 1)");
  if (!(noise.aux_fraction > 0.0 && noise.aux_fraction <= 1.0)) {
    throw ArgumentError("noise.aux_fraction must be in (0, 1]");
  }
  if (setup.encoder.buckets == 0 || setup.encoder.hidden == 0) {
    throw ArgumentError("encoder.buckets and encoder.hidden must be positive");
  }
  if (!(setup.encoder.dropout_rate >= 0.0 && setup.encoder.dropout_rate < 1.0)) {
    throw ArgumentError("encoder.dropout must be in [0, 1)");
  }
  if (!(setup.optimizer.learning_rate > 0.0)) throw ArgumentError("optim.lr must be positive");
  if (histogram_bins == 0) throw ArgumentError("output.bins must be >= 1");
}

ExperimentConfig parse_config(const std::string& content) {
  ExperimentConfig config;
  std::istringstream in(content);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ParseError("unknown key '" + key + "'", line);
    it->second(config, value, line);
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig config = parse_config(buf.str());
  // Relative paths are taken relative to the config file.
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (std::string* p : {&config.train_path, &config.test_path, &config.noise.transition_path,
                         &config.output_dir}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  return config;
}

std::string format_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [k, v] : config.echo()) out += k + " = " + v + "\n";
  return out;
}

}  // namespace selfmix
