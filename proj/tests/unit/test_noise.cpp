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

#include <doctest.h>

#include <cmath>
#include <set>

#include "selfmix/error.hpp"
#include "selfmix/noise.hpp"
#include "support.hpp"

using namespace selfmix;

namespace {

std::size_t expected_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::round(ratio * static_cast<double>(n)));
}

// Independent audit of an injector's output against its input.
void audit(const Dataset& before, const NoiseResult& r) {
  REQUIRE(r.dataset.size() == before.size());
  CHECK(validate(r.dataset).ok());
  CHECK(r.manifest.num_examples == before.size());
  const auto flipped = r.manifest.flipped_ids();
  CHECK(flipped.size() == r.manifest.flips.size());
  std::size_t off_diagonal = 0;
  for (std::size_t a = 0; a < r.manifest.flip_counts.size(); ++a) {
    CHECK(r.manifest.flip_counts[a][a] == 0);
    for (std::size_t n : r.manifest.flip_counts[a]) off_diagonal += n;
  }
  CHECK(off_diagonal == flipped.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    const Example& e = r.dataset[i];
    const bool is_flipped = flipped.count(e.id) == 1;
    CHECK(e.true_label == before[i].observed_label);
    CHECK(e.corrupted == is_flipped);
    CHECK((e.observed_label != before[i].observed_label) == is_flipped);
    CHECK(e.text == before[i].text);
  }
}

}  // namespace

TEST_CASE("noise type names") {
  CHECK(parse_noise_type("uniform") == NoiseType::Uniform);
  CHECK(parse_noise_type("asym") == NoiseType::Asymmetric);
  CHECK(parse_noise_type("idn") == NoiseType::InstanceDependent);
  CHECK_THROWS_AS(parse_noise_type("gaussian"), ArgumentError);
  CHECK(parse_noise_type(to_string(NoiseType::InstanceDependent)) == NoiseType::InstanceDependent);
}

TEST_CASE("transition maps are total and fixed-point free") {
  CHECK(TransitionMap::cyclic(4).targets() == std::vector<ClassIndex>{1, 2, 3, 0});
  CHECK_THROWS_AS(TransitionMap({0, 1}), ArgumentError);
  CHECK_THROWS_AS(TransitionMap({1, 5, 0}), ArgumentError);
  const TransitionMap pair = TransitionMap::parse("# pairs\n0,1\n1,0\n2 3\n3,2\n", 4);
  CHECK(pair.targets() == std::vector<ClassIndex>{1, 0, 3, 2});
  CHECK_THROWS(TransitionMap::parse("0,1\n1,0\n", 3));
  CHECK_THROWS(TransitionMap::parse("0,1\nbogus\n", 2));
}

TEST_CASE("uniform noise flips an exact count to other classes") {
  const Dataset d = testing::balanced_dataset(4, 25);
  const NoiseResult none = inject_uniform(d, 0.0, 1);
  CHECK(none.manifest.num_flipped() == 0);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(none.dataset[i].observed_label == d[i].observed_label);

  const NoiseResult r = inject_uniform(d, 0.4, 1);
  CHECK(r.manifest.num_flipped() == 40);
  for (const Flip& f : r.manifest.flips) CHECK(f.new_label != f.old_label);
  audit(d, r);
  CHECK_THROWS_AS(inject_uniform(d, 1.0, 1), ArgumentError);
  CHECK_THROWS_AS(inject_uniform(d, -0.1, 1), ArgumentError);
}

TEST_CASE("asymmetric noise moves round(ratio * N_c) per class to t(c)") {
  std::vector<Example> ex;
  for (std::size_t i = 0; i < 10; ++i) ex.push_back({i, "a", 0, std::nullopt, std::nullopt});
  const Dataset d("ten", 2, ex);
  const NoiseResult r = inject_asymmetric(d, 0.4, TransitionMap::cyclic(2), 3);
  CHECK(r.manifest.num_flipped() == 4);
  CHECK(r.manifest.flip_counts[0][1] == 4);
  for (const Flip& f : r.manifest.flips) CHECK(f.new_label == 1);

  const NoiseResult same = inject_asymmetric(d, 0.0, TransitionMap::cyclic(2), 3);
  CHECK(same.manifest.num_flipped() == 0);
}

TEST_CASE("pairwise map on four balanced classes") {
  const Dataset d = testing::balanced_dataset(4, 100);
  const NoiseResult r = inject_asymmetric(d, 0.2, TransitionMap({1, 0, 3, 2}), 5);
  const std::vector<std::vector<std::size_t>> want{
      {0, 20, 0, 0}, {20, 0, 0, 0}, {0, 0, 0, 20}, {0, 0, 20, 0}};
  CHECK(r.manifest.flip_counts == want);
  audit(d, r);
}

TEST_CASE("manifest text format") {
  const Dataset d = testing::balanced_dataset(2, 5);
  const NoiseResult r = inject_asymmetric(d, 0.4, TransitionMap::cyclic(2), 9);
  const std::string text = format_manifest(r.manifest);
  CHECK(text.rfind("# noise_type,ratio,seed\n# asym,0.40000000000000002,9\nid,old_label,new_label\n", 0) == 0);
  CHECK(text.find("# counts 0: 0 2\n# counts 1: 2 0\n") != std::string::npos);
}

TEST_CASE("property: injectors hit exact counts and stay deterministic") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t classes = 2 + rng.uniform_index(5);
    const std::size_t n = 1 + rng.uniform_index(150);
    std::vector<Example> ex;
    for (std::size_t i = 0; i < n; ++i) ex.push_back({i, "t" + std::to_string(i), rng.uniform_index(classes), std::nullopt, std::nullopt});
    const Dataset d("p", classes, ex);
    const double ratio = 0.9 * rng.uniform01();
    const std::uint64_t seed = rng.next_u64();

    const NoiseResult u = inject_uniform(d, ratio, seed);
    CHECK(u.manifest.num_flipped() == expected_count(ratio, n));
    audit(d, u);
    CHECK(format_manifest(u.manifest) == format_manifest(inject_uniform(d, ratio, seed).manifest));

    std::vector<ClassIndex> targets(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      targets[c] = (c + 1 + rng.uniform_index(classes - 1)) % classes;
    }
    const TransitionMap map(targets);
    const NoiseResult a = inject_asymmetric(d, ratio, map, seed);
    std::size_t want = 0;
    for (std::size_t count : d.class_counts()) want += expected_count(ratio, count);
    CHECK(a.manifest.num_flipped() == want);
    for (const Flip& f : a.manifest.flips) CHECK(f.new_label == map(f.old_label));
    for (std::size_t from = 0; from < classes; ++from) {
      for (std::size_t to = 0; to < classes; ++to) {
        if (to != map(from)) CHECK(a.manifest.flip_counts[from][to] == 0);
      }
      CHECK(a.manifest.flip_counts[from][map(from)] == expected_count(ratio, d.class_counts()[from]));
    }
    audit(d, a);
    CHECK(format_manifest(a.manifest) == format_manifest(inject_asymmetric(d, ratio, map, seed).manifest));
  }
}

TEST_CASE("instance-dependent noise targets ambiguous examples") {
  // Two separable classes; 40% of documents use only a shared vocabulary.
  Rng rng(99);
  std::vector<Example> ex;
  std::set<std::size_t> ambiguous;
  const std::size_t n = 600;
  for (std::size_t i = 0; i < n; ++i) {
    const ClassIndex label = i % 2;
    const bool shared = (i / 2) % 5 < 2;
    std::string text;
    for (int t = 0; t < 8; ++t) {
      if (t) text += ' ';
      text += shared ? "s" + std::to_string(rng.uniform_index(10))
                     : (label ? "b" : "a") + std::to_string(rng.uniform_index(10));
    }
    if (shared) ambiguous.insert(i);
    ex.push_back({i, text, label, std::nullopt, std::nullopt});
  }
  const Dataset d("idn", 2, ex);
  REQUIRE(ambiguous.size() == 240);

  const NoiseResult r = inject_instance_dependent(d, 0.4, IdnOptions{}, 4);
  REQUIRE(r.manifest.num_flipped() == 240);
  std::size_t overlap = 0;
  for (std::size_t id : r.manifest.flipped_ids()) overlap += ambiguous.count(id);
  CHECK(static_cast<double>(overlap) / 240.0 >= 0.9);
  audit(d, r);
  for (std::size_t from = 0; from < 2; ++from) {
    std::size_t total = 0;
    for (const Flip& f : r.manifest.flips) total += f.old_label == from;
    CHECK(r.manifest.flip_counts[from][0] + r.manifest.flip_counts[from][1] == total);
  }
  CHECK(format_manifest(r.manifest) == format_manifest(inject_instance_dependent(d, 0.4, IdnOptions{}, 4).manifest));
  CHECK(inject_instance_dependent(d, 0.0, IdnOptions{}, 4).manifest.num_flipped() == 0);
}

TEST_CASE("injection starts from the true label of an oracle dataset") {
  std::vector<Example> ex;
  for (std::size_t i = 0; i < 20; ++i) ex.push_back({i, "x", (i + 1) % 2, i % 2, true});
  const Dataset d("oracle", 2, ex);
  const NoiseResult r = inject_uniform(d, 0.0, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(r.dataset[i].observed_label == i % 2);
    CHECK(r.dataset[i].corrupted == false);
  }
}
