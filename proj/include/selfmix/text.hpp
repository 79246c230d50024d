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
#include <string>
#include <string_view>
#include <vector>

namespace selfmix {

/// 64-bit FNV-1a over raw bytes.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Lowercases ASCII letters and splits on every ASCII byte that is not a
/// letter or digit. Bytes >= 0x80 (UTF-8 sequences) are kept inside tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Sparse bag of hashed features: sorted unique bucket ids with their
/// normalized counts.
struct FeatureVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> weights;

  bool empty() const { return indices.empty(); }
  std::size_t size() const { return indices.size(); }
  bool operator==(const FeatureVector&) const = default;
};

/// Byte that joins the two tokens of a bigram before hashing.
inline constexpr char kBigramSeparator = '\x1f';

/// Unigrams and adjacent bigrams hashed by FNV-1a modulo `num_buckets`;
/// weight = occurrences / total feature count, merged per bucket.
FeatureVector featurize(const std::vector<std::string>& tokens, std::uint32_t num_buckets);

inline FeatureVector featurize_text(std::string_view text, std::uint32_t num_buckets) {
  return featurize(tokenize(text), num_buckets);
}

}  // namespace selfmix
