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

// Helpers shared by the unit and acceptance tests.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "selfmix/data.hpp"
#include "selfmix/model.hpp"
#include "selfmix/rng.hpp"

namespace testing {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("selfmix_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

/// Balanced dataset: `per_class` examples of each class, ids 0..N-1,
/// texts drawn from a per-class vocabulary.
inline selfmix::Dataset balanced_dataset(std::size_t classes, std::size_t per_class,
                                         bool with_oracle = false) {
  std::vector<selfmix::Example> ex;
  for (std::size_t i = 0; i < classes * per_class; ++i) {
    selfmix::Example e;
    e.id = i;
    e.observed_label = i % classes;
    e.text = "c" + std::to_string(e.observed_label) + "w" + std::to_string(i % 7) + " c" +
             std::to_string(e.observed_label) + "x" + std::to_string(i % 5);
    if (with_oracle) {
      e.true_label = e.observed_label;
      e.corrupted = false;
    }
    ex.push_back(std::move(e));
  }
  return selfmix::Dataset("balanced", classes, std::move(ex));
}

/// Small random model with every parameter drawn from U(-scale, scale).
inline selfmix::ModelParams random_model(std::size_t buckets, std::size_t hidden,
                                         std::size_t classes, double dropout, selfmix::Rng& rng,
                                         double scale = 0.5) {
  selfmix::ModelParams p(buckets, hidden, classes, dropout);
  for (auto* v : {&p.embedding, &p.w1, &p.b1, &p.w2, &p.b2}) {
    for (double& x : *v) x = scale * (2.0 * rng.uniform01() - 1.0);
  }
  return p;
}

/// Random feature bag over [0, buckets) with weights summing to 1.
inline selfmix::FeatureVector random_features(std::size_t buckets, std::size_t max_features,
                                              selfmix::Rng& rng) {
  const std::size_t k = 1 + rng.uniform_index(std::min(max_features, buckets));
  std::vector<std::uint32_t> idx(buckets);
  for (std::size_t i = 0; i < buckets; ++i) idx[i] = static_cast<std::uint32_t>(i);
  rng.shuffle(std::span<std::uint32_t>(idx));
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  selfmix::FeatureVector f;
  f.indices = idx;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    f.weights.push_back(0.1 + rng.uniform01());
    total += f.weights.back();
  }
  for (double& w : f.weights) w /= total;
  return f;
}

/// Random point on the probability simplex.
inline selfmix::ClassDistribution random_simplex(std::size_t classes, selfmix::Rng& rng) {
  selfmix::ClassDistribution d{std::vector<double>(classes)};
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    d[c] = -std::log(1.0 - rng.uniform01());
    total += d[c];
  }
  for (double& p : d.probs) p /= total;
  return d;
}

}  // namespace testing
