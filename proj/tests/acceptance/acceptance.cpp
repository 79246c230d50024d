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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

#include "selfmix/error.hpp"
#include "selfmix/harness.hpp"
#include "support.hpp"

using namespace selfmix;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double normal(Rng& rng, double mean, double sd) {
  const double u1 = 1.0 - rng.uniform01(), u2 = rng.uniform01();
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int number, const std::string& name, const Outcome& o) {
  std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", number, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// ---- 1. Gradients ------------------------------------------------------------

// Largest relative error between analytic and central-difference gradients
// over every parameter an objective can reach.
double gradient_error(const LossSpec& spec, ModelParams& p) {
  const BackwardResult r = backward(spec, p);
  const double h = 1e-6;
  double worst = 0.0;
  auto probe = [&](double& value, double analytic) {
    const double saved = value;
    value = saved + h;
    const double up = evaluate_loss(spec, p).total;
    value = saved - h;
    const double down = evaluate_loss(spec, p).total;
    value = saved;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4}));
  };
  for (std::size_t k = 0; k < p.w1.size(); ++k) probe(p.w1[k], r.grads.w1[k]);
  for (std::size_t k = 0; k < p.b1.size(); ++k) probe(p.b1[k], r.grads.b1[k]);
  for (std::size_t k = 0; k < p.w2.size(); ++k) probe(p.w2[k], r.grads.w2[k]);
  for (std::size_t k = 0; k < p.b2.size(); ++k) probe(p.b2[k], r.grads.b2[k]);
  for (std::size_t k = 0; k < p.embedding.size(); ++k) {
    probe(p.embedding[k], r.grads.embedding(k / p.hidden, k % p.hidden));
  }
  return worst;
}

Outcome gradient_check() {
  const auto start = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t buckets = 4 + rng.uniform_index(61);
    const std::size_t hidden = 2 + rng.uniform_index(15);
    const std::size_t classes = 2 + rng.uniform_index(3);
    ModelParams p = testing::random_model(buckets, hidden, classes, 0.1 + 0.4 * rng.uniform01(), rng);
    const std::size_t batch = 1 + rng.uniform_index(4);
    std::vector<FeatureVector> feats;
    for (std::size_t i = 0; i < batch; ++i) feats.push_back(testing::random_features(buckets, 6, rng));

    LossSpec ce, mix, pseudo, consistency, composite;
    for (std::size_t i = 0; i < batch; ++i) {
      const FeatureVector& f = feats[i];
      const FeatureVector& partner = feats[rng.uniform_index(batch)];
      const double lam = 0.5 + 0.5 * rng.uniform01();
      ce.cross_entropy.push_back({ModelInput::from_features(f), testing::random_simplex(classes, rng), rng.next_u64()});
      mix.cross_entropy.push_back({ModelInput::mixed(f, partner, lam), testing::random_simplex(classes, rng), rng.next_u64()});
      pseudo.pseudo.push_back({ModelInput::from_features(f), rng.next_u64()});
      consistency.consistency.push_back({ModelInput::from_features(f), rng.next_u64(), rng.next_u64()});
    }
    pseudo.lambda_p = 1.0;
    consistency.lambda_r = 1.0;
    composite.cross_entropy = mix.cross_entropy;
    composite.pseudo = pseudo.pseudo;
    composite.consistency = consistency.consistency;
    composite.lambda_p = 0.2;
    composite.lambda_r = 0.3;
    for (LossSpec* spec : {&ce, &mix, &pseudo, &consistency, &composite}) {
      worst = std::max(worst, gradient_error(*spec, p));
    }
  }
  const double secs = seconds_since(start);
  return {worst < 1e-5 && secs < 30.0,
          "max relative error " + fmt("%.2e", worst) + " over 100 instances x 5 objectives, " + fmt("%.1f s", secs)};
}

// ---- 2. GMM --------------------------------------------------------------------

Outcome gmm_recovery() {
  const auto start = Clock::now();
  Rng rng(2024);
  std::vector<double> v;
  std::vector<bool> noisy;
  for (int i = 0; i < 1000; ++i) {
    v.push_back(normal(rng, 0.5, 0.1));
    noisy.push_back(false);
  }
  for (int i = 0; i < 1000; ++i) {
    v.push_back(normal(rng, 3.0, 0.5));
    noisy.push_back(true);
  }
  const GmmFit fit = fit_gmm_traced(v);
  bool monotone = true;
  double previous = fit.log_likelihood_trace.front();
  for (double ll : fit.step_log_likelihoods) {
    monotone = monotone && ll >= previous - 1e-9;
    previous = std::max(previous, ll);
  }
  const GmmParams& g = fit.params;
  const double f1 = selection_metrics(select_split(v, 0.5), noisy).f1;
  const double secs = seconds_since(start);
  const bool ok = std::abs(g.mean[0] - 0.5) <= 0.05 && std::abs(g.mean[1] - 3.0) <= 0.05 &&
                  std::abs(g.weight[0] - 0.5) <= 0.03 && std::abs(g.weight[1] - 0.5) <= 0.03 && monotone &&
                  f1 >= 0.95 && secs < 1.0;
  return {ok, "means (" + fmt("%.4f", g.mean[0]) + ", " + fmt("%.4f", g.mean[1]) + "), weights (" +
                  fmt("%.4f", g.weight[0]) + ", " + fmt("%.4f", g.weight[1]) + "), monotone " +
                  (monotone ? "yes" : "no") + " over " + std::to_string(fit.step_log_likelihoods.size()) +
                  " steps, split F1 " + fmt("%.4f", f1) + ", " + fmt("%.3f s", secs)};
}

// ---- 3. Noise ------------------------------------------------------------------

Outcome noise_exactness() {
  const Dataset d = testing::balanced_dataset(4, 500);
  const TransitionMap cyclic = TransitionMap::cyclic(4);
  auto rounded = [](double r, std::size_t n) { return static_cast<std::size_t>(std::round(r * static_cast<double>(n))); };
  std::size_t checks = 0, bad = 0;
  auto expect = [&](bool ok) {
    ++checks;
    bad += !ok;
  };
  for (double ratio : {0.1, 0.2, 0.4}) {
    const NoiseResult u = inject_uniform(d, ratio, 17);
    expect(u.manifest.num_flipped() == rounded(ratio, 2000));
    expect(format_manifest(u.manifest) == format_manifest(inject_uniform(d, ratio, 17).manifest));

    const NoiseResult a = inject_asymmetric(d, ratio, cyclic, 17);
    std::size_t want = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      want += rounded(ratio, 500);
      expect(a.manifest.flip_counts[c][cyclic(c)] == rounded(ratio, 500));
    }
    expect(a.manifest.num_flipped() == want);
    for (const Flip& f : a.manifest.flips) expect(f.new_label == cyclic(f.old_label));
    expect(format_manifest(a.manifest) == format_manifest(inject_asymmetric(d, ratio, cyclic, 17).manifest));

    const NoiseResult i = inject_instance_dependent(d, ratio, IdnOptions{}, 17);
    expect(i.manifest.num_flipped() == rounded(ratio, 2000));
    expect(format_manifest(i.manifest) == format_manifest(inject_instance_dependent(d, ratio, IdnOptions{}, 17).manifest));

    for (const NoiseResult* r : {&u, &a, &i}) {
      expect(validate(r->dataset).ok());
      expect(format_csv_dataset(r->dataset) ==
             format_csv_dataset(r == &u ? inject_uniform(d, ratio, 17).dataset
                                : r == &a ? inject_asymmetric(d, ratio, cyclic, 17).dataset
                                          : inject_instance_dependent(d, ratio, IdnOptions{}, 17).dataset));
      for (const Flip& f : r->manifest.flips) expect(r->dataset[f.id].observed_label == f.new_label);
    }
  }
  return {bad == 0, std::to_string(checks - bad) + "/" + std::to_string(checks) +
                        " count, support and determinism checks across uniform/asym/idn at 0.1/0.2/0.4"};
}

// ---- 4. Formulas ---------------------------------------------------------------

Outcome formula_checks() {
  const auto s = sharpen(ClassDistribution{{0.8, 0.2}}, 0.5);
  const std::vector<double> losses{1.0, 2.0, 3.0};
  const std::vector<ClassIndex> labels{0, 0, 0};
  const auto r = class_regularize(losses, labels, 1);
  const double rd = rdrop_loss(ClassDistribution{{0.9, 0.1}}, ClassDistribution{{0.1, 0.9}});
  SelfMixConfig cfg;
  cfg.lambda_p = 0.2;
  cfg.lambda_r = 0.3;
  const double total = total_loss(1.0, 2.0, 3.0, cfg);
  const bool ok = std::abs(s[0] - 0.9412) <= 1e-4 && std::abs(s[1] - 0.0588) <= 1e-4 &&
                  std::abs(r[0] + 1.2247) <= 1e-4 && std::abs(r[1]) <= 1e-4 && std::abs(r[2] - 1.2247) <= 1e-4 &&
                  std::abs(rd - 1.7578) <= 1e-4 && total == 2.3;
  return {ok, "sharpen [" + fmt("%.4f", s[0]) + ", " + fmt("%.4f", s[1]) + "], class_regularize [" +
                  fmt("%.4f", r[0]) + ", " + fmt("%.4f", r[1]) + ", " + fmt("%.4f", r[2]) + "], rdrop " +
                  fmt("%.4f", rd) + ", total " + fmt("%.15g", total)};
}

// ---- 5. Desk-scale robustness ---------------------------------------------------

Outcome desk_scale() {
  const auto start = Clock::now();
  double base_last = 0.0, mix_last = 0.0, f1 = 0.0;
  int wider_gap = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticCorpusOptions opts;
    opts.seed = seed;
    const SyntheticCorpus corpus = make_synthetic_corpus(opts);
    const NoiseResult noisy =
        inject_asymmetric(corpus.train, 0.4, TransitionMap::cyclic(4), derive_seed(seed, "noise"));
    TrainerSetup setup;
    setup.selfmix.seed = seed;
    const TrainReport base = train_baseline(setup, noisy.dataset, corpus.test);
    const TrainReport mix = train_selfmix(setup, noisy.dataset, corpus.test);
    base_last += base.last_acc / 5.0;
    mix_last += mix.last_acc / 5.0;
    f1 += mix.epochs.back().selection->f1 / 5.0;
    wider_gap += (base.best_acc - base.last_acc) > (mix.best_acc - mix.last_acc);
    per_seed += " [" + fmt("%.3f", base.best_acc) + "/" + fmt("%.3f", base.last_acc) + " vs " +
                fmt("%.3f", mix.best_acc) + "/" + fmt("%.3f", mix.last_acc) + "]";
  }
  const double secs = seconds_since(start);
  const bool ok = mix_last - base_last >= 0.05 && wider_gap >= 4 && f1 >= 0.80 && secs <= 600.0;
  return {ok, "last acc baseline " + fmt("%.4f", base_last) + " vs SelfMix " + fmt("%.4f", mix_last) +
                  ", baseline gap wider in " + std::to_string(wider_gap) + "/5 seeds, final selection F1 " +
                  fmt("%.4f", f1) + ", " + fmt("%.0f s", secs) + "; best/last per seed:" + per_seed};
}

// ---- 6. Class-regularized selection ---------------------------------------------

Outcome idn_selection() {
  // Two classes whose clean and noisy loss populations live on different
  // scales: class 0 around 0.1 / 0.6, class 1 around 1.0 / 3.0.
  Rng rng(606);
  std::vector<double> losses;
  std::vector<ClassIndex> labels;
  std::vector<bool> noisy;
  const double centers[2][2] = {{0.1, 0.6}, {1.0, 3.0}};
  for (std::size_t i = 0; i < 2000; ++i) {
    const ClassIndex c = i % 2;
    const bool is_noisy = (i / 2) % 5 < 2;
    losses.push_back(centers[c][is_noisy] * std::exp(0.15 * normal(rng, 0.0, 1.0)));
    labels.push_back(c);
    noisy.push_back(is_noisy);
  }
  const double raw = selection_metrics(select_split(losses, 0.5), noisy).f1;
  const double reg = selection_metrics(select_split(class_regularize(losses, labels, 2), 0.5), noisy).f1;
  return {reg >= raw + 0.10, "raw-loss F1 " + fmt("%.4f", raw) + ", class-regularized F1 " + fmt("%.4f", reg)};
}

// ---- 7. Invariants -----------------------------------------------------------------

struct InvariantRun {
  std::size_t invariants = 0, cases = 0, failed = 0;
  std::vector<std::string> broken;

  void run(const std::string& name, int n, const std::function<bool(Rng&, int)>& body) {
    Rng rng(fnv1a64(name));
    std::size_t bad = 0;
    for (int k = 0; k < n; ++k) bad += !body(rng, k);
    ++invariants;
    cases += static_cast<std::size_t>(n);
    failed += bad;
    if (bad) broken.push_back(name);
  }
};

Outcome invariant_suite() {
  InvariantRun inv;
  const int n = 200;

  inv.run("one_hot on simplex", n, [](Rng& r, int) {
    const std::size_t c = 1 + r.uniform_index(16);
    return one_hot(r.uniform_index(c), c).on_simplex();
  });
  inv.run("stratified determinism", n, [](Rng& r, int) {
    const Dataset d = testing::balanced_dataset(2 + r.uniform_index(4), 5 + r.uniform_index(30));
    const std::size_t k = r.uniform_index(d.size() + 1);
    const std::uint64_t s = r.next_u64();
    return stratified_indices(d, k, s) == stratified_indices(d, k, s);
  });
  inv.run("featurize sorted with unit weight", n, [](Rng& r, int) {
    std::string text;
    for (std::size_t i = 0, len = 1 + r.uniform_index(30); i < len; ++i) text.push_back("ab c,DE f"[r.uniform_index(9)]);
    const FeatureVector f = featurize_text(text, 1 + static_cast<std::uint32_t>(r.uniform_index(50)));
    if (f.empty()) return tokenize(text).empty();
    double total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i && f.indices[i - 1] >= f.indices[i]) return false;
      total += f.weights[i];
    }
    return std::abs(total - 1.0) < 1e-12;
  });
  inv.run("softmax shift invariance", n, [](Rng& r, int) {
    const std::size_t c = 1 + r.uniform_index(6);
    std::vector<double> z(c), w(c);
    const double shift = 200.0 * (r.uniform01() - 0.5);
    for (std::size_t k = 0; k < c; ++k) w[k] = (z[k] = 8.0 * (r.uniform01() - 0.5)) + shift;
    const auto a = softmax(z), b = softmax(w);
    for (std::size_t k = 0; k < c; ++k) {
      if (std::abs(a[k] - b[k]) > 1e-12) return false;
    }
    return a.on_simplex(1e-12);
  });
  inv.run("dropout-off forward is pure", n, [](Rng& r, int) {
    const ModelParams p = testing::random_model(16, 4, 3, 0.3, r);
    const Embedding e = encode(testing::random_features(16, 4, r), p);
    return head_forward(e, p, false, r.next_u64()) == head_forward(e, p, false, r.next_u64());
  });
  inv.run("EM monotone, params valid", n, [](Rng& r, int) {
    std::vector<double> v;
    for (std::size_t i = 0, m = 20 + r.uniform_index(200); i < m; ++i) {
      v.push_back(r.uniform01() < 0.5 ? normal(r, 0.2, 0.1 + r.uniform01()) : normal(r, 2.0, 0.1 + r.uniform01()));
    }
    const GmmFit fit = fit_gmm_traced(v, {100, 0.0, 0});
    double prev = fit.log_likelihood_trace.front();
    for (double ll : fit.step_log_likelihoods) {
      if (ll < prev - 1e-9) return false;
      prev = std::max(prev, ll);
    }
    const GmmParams& g = fit.params;
    return g.valid() && std::abs(g.weight[0] + g.weight[1] - 1.0) <= 1e-9 && g.var[0] >= kGmmVarianceFloor &&
           g.var[1] >= kGmmVarianceFloor && g.mean[0] <= g.mean[1];
  });
  inv.run("posteriors complementary and monotone", n, [](Rng& r, int) {
    GmmParams g;
    const double w = 0.05 + 0.9 * r.uniform01();
    g.weight = {w, 1.0 - w};
    g.mean = {r.uniform01(), 1.1 + 2.0 * r.uniform01()};
    g.var[0] = g.var[1] = 0.05 + r.uniform01();
    double prev = 1.0;
    for (double x = -4.0; x <= 6.0; x += 0.5) {
      const double pc = posterior_clean(g, x);
      if (pc < 0.0 || pc > 1.0 || pc > prev + 1e-15 || std::abs(pc + posterior_noisy(g, x) - 1.0) > 1e-12) return false;
      prev = pc;
    }
    return true;
  });
  inv.run("noise counts exact and consistent", n, [](Rng& r, int) {
    const Dataset d = testing::balanced_dataset(2 + r.uniform_index(4), 1 + r.uniform_index(60));
    const double ratio = 0.95 * r.uniform01();
    const std::uint64_t s = r.next_u64();
    const NoiseResult u = inject_uniform(d, ratio, s);
    const NoiseResult a = inject_asymmetric(d, ratio, TransitionMap::cyclic(d.num_classes()), s);
    std::size_t want = 0;
    for (std::size_t c : d.class_counts()) want += static_cast<std::size_t>(std::round(ratio * static_cast<double>(c)));
    std::size_t off = 0;
    for (std::size_t from = 0; from < d.num_classes(); ++from) {
      for (std::size_t to = 0; to < d.num_classes(); ++to) {
        if (to != (from + 1) % d.num_classes() && a.manifest.flip_counts[from][to]) return false;
        off += a.manifest.flip_counts[from][to];
      }
    }
    return u.manifest.num_flipped() == static_cast<std::size_t>(std::round(ratio * static_cast<double>(d.size()))) &&
           a.manifest.num_flipped() == want && off == want && validate(u.dataset).ok() && validate(a.dataset).ok();
  });
  inv.run("split partition", n, [](Rng& r, int) {
    std::vector<double> v;
    for (std::size_t i = 0, m = 5 + r.uniform_index(200); i < m; ++i) v.push_back(r.uniform01() * (1 + i % 3));
    const DataSplit s = select_split(v, 0.01 + 0.98 * r.uniform01());
    std::vector<std::size_t> all = s.labeled_ids;
    all.insert(all.end(), s.unlabeled_ids.begin(), s.unlabeled_ids.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i] != i) return false;
    }
    return all.size() == v.size();
  });
  inv.run("tau monotonicity", n, [](Rng& r, int) {
    std::vector<double> v;
    for (std::size_t i = 0, m = 5 + r.uniform_index(200); i < m; ++i) v.push_back(r.uniform01() < 0.6 ? normal(r, 0.3, 0.2) : normal(r, 2.0, 0.6));
    const GmmParams g = fit_gmm(v);
    const double t1 = 0.01 + 0.98 * r.uniform01(), t2 = 0.01 + 0.98 * r.uniform01();
    const DataSplit lo = split_with_gmm(v, g, std::min(t1, t2)), hi = split_with_gmm(v, g, std::max(t1, t2));
    const std::set<std::size_t> lo_u(lo.unlabeled_ids.begin(), lo.unlabeled_ids.end());
    for (std::size_t id : hi.labeled_ids) {
      if (lo_u.count(id)) return false;
    }
    for (std::size_t id : lo.labeled_ids) {
      if (lo.posteriors[id] < std::min(t1, t2)) return false;
    }
    return true;
  });
  inv.run("sharpened and mixed targets on simplex, lambda' in [0.5, 1]", n, [](Rng& r, int) {
    const std::size_t c = 2 + r.uniform_index(5);
    const ClassDistribution yi = r.uniform01() < 0.5 ? one_hot(r.uniform_index(c), c) : testing::random_simplex(c, r);
    const ClassDistribution yj = sharpen(testing::random_simplex(c, r), 0.1 + r.uniform01());
    const std::vector<double> e{r.uniform01()}, f{r.uniform01()};
    const MixResult m = embmix(e, yi, f, yj, 0.05 + 2.0 * r.uniform01(), r);
    bool ok = m.lambda >= 0.5 && m.lambda <= 1.0 && m.target.on_simplex(1e-9) && yj.on_simplex(1e-9);
    if (yi[yi.argmax()] == 1.0 && yj.argmax() != yi.argmax() && m.lambda > 0.5 && yj[yj.argmax()] == 1.0) {
      ok = ok && m.target.argmax() == yi.argmax();
    }
    return ok;
  });
  inv.run("loss terms non-negative, consistency zero without dropout", n, [](Rng& r, int) {
    const std::size_t c = 2 + r.uniform_index(3);
    ModelParams p = testing::random_model(16, 4, c, 0.0, r);
    const FeatureVector f = testing::random_features(16, 4, r);
    LossSpec spec;
    spec.lambda_p = 0.2;
    spec.lambda_r = 0.3;
    spec.cross_entropy.push_back({ModelInput::from_features(f), testing::random_simplex(c, r), r.next_u64()});
    spec.pseudo.push_back({ModelInput::from_features(f), r.next_u64()});
    spec.consistency.push_back({ModelInput::from_features(f), r.next_u64(), r.next_u64()});
    const LossValue v = evaluate_loss(spec, p);
    p.dropout_rate = 0.5;
    const LossValue w = evaluate_loss(spec, p);
    return v.cross_entropy >= 0.0 && v.pseudo >= 0.0 && v.consistency == 0.0 && w.consistency >= 0.0 &&
           rdrop_loss(testing::random_simplex(c, r), testing::random_simplex(c, r)) >= 0.0;
  });
  inv.run("class-regularized moments", n, [](Rng& r, int) {
    const std::size_t c = 1 + r.uniform_index(4), m = 2 * c + r.uniform_index(80);
    std::vector<double> l(m);
    std::vector<ClassIndex> y(m);
    for (std::size_t i = 0; i < m; ++i) {
      y[i] = i < 2 * c ? i % c : r.uniform_index(c);
      l[i] = 4.0 * r.uniform01() * static_cast<double>(1 + y[i]);
    }
    const auto z = class_regularize(l, y, c);
    for (std::size_t k = 0; k < c; ++k) {
      double s = 0.0, sq = 0.0, cnt = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (y[i] == k) {
          s += z[i];
          sq += z[i] * z[i];
          cnt += 1.0;
        }
      }
      if (std::abs(s / cnt) > 1e-9 || std::abs(sq / cnt - (s / cnt) * (s / cnt) - 1.0) > 1e-6) return false;
    }
    return true;
  });
  inv.run("histogram partition identity", n, [](Rng& r, int) {
    const std::size_t m = 1 + r.uniform_index(300);
    std::vector<double> l(m);
    std::vector<bool> noisy(m);
    for (std::size_t i = 0; i < m; ++i) {
      l[i] = 3.0 * r.uniform01();
      noisy[i] = r.uniform01() < 0.4;
    }
    std::size_t total = 0;
    for (const auto& b : loss_histogram(l, noisy, 1 + r.uniform_index(25))) total += b.clean + b.noisy;
    return total == m;
  });
  inv.run("selection metrics match set oracle", n, [](Rng& r, int) {
    const std::size_t m = 1 + r.uniform_index(60);
    DataSplit s;
    s.posteriors.assign(m, 0.5);
    std::vector<bool> noisy(m);
    std::size_t tp = 0, pos = 0, truth = 0;
    for (std::size_t i = 0; i < m; ++i) {
      noisy[i] = r.uniform01() < 0.4;
      truth += noisy[i];
      if (r.uniform01() < 0.5) {
        s.unlabeled_ids.push_back(i);
        ++pos;
        tp += noisy[i];
      } else {
        s.labeled_ids.push_back(i);
      }
    }
    const double p = pos ? static_cast<double>(tp) / static_cast<double>(pos) : 0.0;
    const double rc = truth ? static_cast<double>(tp) / static_cast<double>(truth) : 0.0;
    const double f = p + rc == 0.0 ? 0.0 : 2.0 * p * rc / (p + rc);
    const SelectionMetrics got = selection_metrics(s, noisy);
    return std::abs(got.precision - p) < 1e-12 && std::abs(got.recall - rc) < 1e-12 && std::abs(got.f1 - f) < 1e-12;
  });
  inv.run("oracle-free training is bit-identical", n, [](Rng& r, int k) {
    // Tiny corpora keep 200 paired trainings cheap.
    SyntheticCorpusOptions o;
    o.train_size = 24 + r.uniform_index(24);
    o.test_size = 12;
    o.min_length = 3;
    o.max_length = 6;
    o.seed = static_cast<std::uint64_t>(k);
    const SyntheticCorpus c = make_synthetic_corpus(o);
    const NoiseResult noisy = inject_asymmetric(c.train, 0.4, TransitionMap::cyclic(4), r.next_u64());
    std::vector<Example> stripped = noisy.dataset.examples();
    for (auto& e : stripped) {
      e.true_label.reset();
      e.corrupted.reset();
    }
    TrainerSetup setup;
    setup.encoder = {256, 4, 0.3, 0.1};
    setup.selfmix.total_epochs = 3;
    setup.selfmix.warmup_epochs = 1;
    setup.selfmix.batch_size = 8;
    setup.selfmix.eval_every = 2;
    setup.selfmix.seed = r.next_u64();
    ModelParams a, b;
    TrainHooks ha, hb;
    ha.on_finish = [&](const ModelParams& p) { a = p; };
    hb.on_finish = [&](const ModelParams& p) { b = p; };
    const TrainReport ra = train_selfmix(setup, noisy.dataset, c.test, ha);
    const TrainReport rb = train_selfmix(setup, Dataset("s", 4, stripped), c.test, hb);
    if (!(a == b) || ra.warnings != rb.warnings || ra.epochs.size() != rb.epochs.size()) return false;
    for (std::size_t e = 0; e < ra.epochs.size(); ++e) {
      const EpochRecord &x = ra.epochs[e], &y = rb.epochs[e];
      if (x.test_acc != y.test_acc || x.l_mix != y.l_mix || x.l_p != y.l_p || x.l_r != y.l_r ||
          x.labeled_count != y.labeled_count || x.step_acc != y.step_acc || y.selection) {
        return false;
      }
    }
    return true;
  });

  std::string detail = std::to_string(inv.invariants) + " invariants, " + std::to_string(inv.cases) + " cases, " +
                       std::to_string(inv.failed) + " failures";
  for (const auto& b : inv.broken) detail += "; broken: " + b;
  return {inv.failed == 0, detail};
}

}  // namespace

int main() {
  const auto start = Clock::now();
  report(1, "gradient correctness", gradient_check());
  report(2, "GMM recovery", gmm_recovery());
  report(3, "noise exactness", noise_exactness());
  report(4, "formula micro-checks", formula_checks());
  report(5, "desk-scale robustness", desk_scale());
  report(6, "class-regularized selection", idn_selection());
  report(7, "invariant suite", invariant_suite());
  std::printf("%d of 7 criteria passed in %.0f s\n", 7 - failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
