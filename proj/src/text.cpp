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

#include "selfmix/text.hpp"

#include <algorithm>
#include <utility>

#include "selfmix/error.hpp"

namespace selfmix {

namespace {

bool is_token_byte(unsigned char ch) {
  return (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
         ch >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : text) {
    if (is_token_byte(ch)) {
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<unsigned char>(ch - 'A' + 'a');
      current.push_back(static_cast<char>(ch));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

FeatureVector featurize(const std::vector<std::string>& tokens, std::uint32_t num_buckets) {
  if (num_buckets == 0) throw ArgumentError("featurize: num_buckets must be >= 1");
  FeatureVector fv;
  if (tokens.empty()) return fv;

  std::vector<std::uint32_t> hashed;
  hashed.reserve(2 * tokens.size());
  for (const auto& tok : tokens) {
    hashed.push_back(static_cast<std::uint32_t>(fnv1a64(tok) % num_buckets));
  }
  std::string bigram;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    bigram.assign(tokens[i]);
    bigram.push_back(kBigramSeparator);
    bigram.append(tokens[i + 1]);
    hashed.push_back(static_cast<std::uint32_t>(fnv1a64(bigram) % num_buckets));
  }

  std::sort(hashed.begin(), hashed.end());
  const double total = static_cast<double>(hashed.size());
  for (std::size_t i = 0; i < hashed.size();) {
    std::size_t j = i;
    while (j < hashed.size() && hashed[j] == hashed[i]) ++j;
    fv.indices.push_back(hashed[i]);
    fv.weights.push_back(static_cast<double>(j - i) / total);
    i = j;
  }
  return fv;
}

}  // namespace selfmix
