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

#include "selfmix/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "selfmix/error.hpp"
#include "selfmix/rng.hpp"

namespace selfmix {

namespace {

constexpr double kProbFloor = 1e-12;

bool finite_all(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

// Everything one head pass needs for its backward sweep.
struct HeadPass {
  Embedding e;
  std::vector<double> pre;     // e*W1 + b1
  std::vector<double> mask;    // empty when dropout is off
  std::vector<double> act;     // relu(pre) * mask
  std::vector<double> logits;
  ClassDistribution p;
  std::vector<double> log_p;   // exact log-softmax
};

HeadPass run_head(Embedding e, const ModelParams& m, bool dropout_on, std::uint64_t mask_seed) {
  const std::size_t h = m.hidden;
  const std::size_t c = m.classes;
  HeadPass pass;
  pass.e = std::move(e);
  pass.pre.assign(m.b1.begin(), m.b1.end());
  for (std::size_t i = 0; i < h; ++i) {
    const double ei = pass.e[i];
    if (ei == 0.0) continue;
    const double* row = m.w1.data() + i * h;
    for (std::size_t j = 0; j < h; ++j) pass.pre[j] += ei * row[j];
  }
  pass.act.resize(h);
  for (std::size_t j = 0; j < h; ++j) pass.act[j] = pass.pre[j] > 0.0 ? pass.pre[j] : 0.0;
  if (dropout_on && m.dropout_rate > 0.0) {
    pass.mask = dropout_mask(h, m.dropout_rate, mask_seed);
    for (std::size_t j = 0; j < h; ++j) pass.act[j] *= pass.mask[j];
  }
  pass.logits.assign(m.b2.begin(), m.b2.end());
  for (std::size_t i = 0; i < h; ++i) {
    const double ai = pass.act[i];
    if (ai == 0.0) continue;
    const double* row = m.w2.data() + i * c;
    for (std::size_t k = 0; k < c; ++k) pass.logits[k] += ai * row[k];
  }
  if (!finite_all(pass.logits)) throw NumericError("non-finite logits");
  pass.p = softmax(pass.logits);
  const double mx = *std::max_element(pass.logits.begin(), pass.logits.end());
  double z = 0.0;
  for (double l : pass.logits) z += std::exp(l - mx);
  const double lse = mx + std::log(z);
  pass.log_p.resize(c);
  for (std::size_t k = 0; k < c; ++k) pass.log_p[k] = pass.logits[k] - lse;
  return pass;
}

// Accumulates parameter gradients for one pass given dL/dlogits; returns dL/de.
Embedding head_backward(const HeadPass& pass, std::span<const double> dlogits,
                        const ModelParams& m, Gradients& g) {
  const std::size_t h = m.hidden;
  const std::size_t c = m.classes;
  for (std::size_t k = 0; k < c; ++k) g.b2[k] += dlogits[k];
  std::vector<double> dact(h, 0.0);
  for (std::size_t i = 0; i < h; ++i) {
    const double ai = pass.act[i];
    const double* wrow = m.w2.data() + i * c;
    double* grow = g.w2.data() + i * c;
    double acc = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      grow[k] += ai * dlogits[k];
      acc += wrow[k] * dlogits[k];
    }
    dact[i] = acc;
  }
  std::vector<double> dpre(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    if (pass.pre[j] <= 0.0) continue;
    dpre[j] = pass.mask.empty() ? dact[j] : dact[j] * pass.mask[j];
  }
  Embedding de(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) g.b1[j] += dpre[j];
  for (std::size_t i = 0; i < h; ++i) {
    const double ei = pass.e[i];
    const double* wrow = m.w1.data() + i * h;
    double* grow = g.w1.data() + i * h;
    double acc = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      grow[j] += ei * dpre[j];
      acc += wrow[j] * dpre[j];
    }
    de[i] = acc;
  }
  return de;
}

void input_backward(const ModelInput& input, std::span<const double> de, Gradients& g) {
  const std::size_t h = g.hidden;
  for (const auto& part : input.parts) {
    const FeatureVector& fv = part.features.get();
    for (std::size_t f = 0; f < fv.size(); ++f) {
      const double scale = part.coef * fv.weights[f];
      auto& row = g.row(fv.indices[f]);
      for (std::size_t j = 0; j < h; ++j) row[j] += scale * de[j];
    }
  }
}

void scale_into(std::vector<double>& out, std::span<const double> v, double s) {
  out.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
}

void check_term(double value, std::span<const double> dz, const char* group, std::size_t index) {
  if (!std::isfinite(value) || !finite_all(dz)) {
    throw NumericError(std::string("non-finite value in ") + group + " term " +
                       std::to_string(index));
  }
}

// Shared forward/backward driver; `grads` is null for forward-only use.
LossValue run_objective(const LossSpec& spec, const ModelParams& m, Gradients* grads) {
  LossValue out;
  const std::size_t c = m.classes;
  std::vector<double> dz(c);
  std::vector<double> scaled;

  auto finish_pass = [&](const ModelInput& input, const HeadPass& pass,
                         std::span<const double> dlogits, double weight) {
    if (!grads || weight == 0.0) return;
    scale_into(scaled, dlogits, weight);
    const Embedding de = head_backward(pass, scaled, m, *grads);
    input_backward(input, de, *grads);
  };
  auto forward = [&](const ModelInput& input, std::uint64_t seed) {
    return run_head(encode(input, m), m, spec.dropout, seed);
  };

  if (!spec.cross_entropy.empty()) {
    const double w = 1.0 / static_cast<double>(spec.cross_entropy.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < spec.cross_entropy.size(); ++t) {
      const auto& term = spec.cross_entropy[t];
      if (term.target.size() != c) throw ArgumentError("cross-entropy target width mismatch");
      const HeadPass pass = forward(term.input, term.mask_seed);
      double loss = 0.0;
      double mass = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        if (term.target[k] != 0.0) loss -= term.target[k] * pass.log_p[k];
        mass += term.target[k];
      }
      for (std::size_t k = 0; k < c; ++k) dz[k] = pass.p[k] * mass - term.target[k];
      check_term(loss, dz, "cross-entropy", t);
      sum += loss;
      finish_pass(term.input, pass, dz, w);
    }
    out.cross_entropy = sum * w;
  }

  const auto reduce = [&](std::size_t n) {
    return spec.regularizer_reduction == Reduction::Mean ? 1.0 / static_cast<double>(n) : 1.0;
  };

  if (!spec.pseudo.empty()) {
    const double r = reduce(spec.pseudo.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < spec.pseudo.size(); ++t) {
      const auto& term = spec.pseudo[t];
      const HeadPass pass = forward(term.input, term.mask_seed);
      const ClassIndex top = pass.p.argmax();
      const double loss = -pass.log_p[top];
      for (std::size_t k = 0; k < c; ++k) dz[k] = pass.p[k] - (k == top ? 1.0 : 0.0);
      check_term(loss, dz, "pseudo-label", t);
      sum += loss;
      finish_pass(term.input, pass, dz, spec.lambda_p * r);
    }
    out.pseudo = sum * r;
  }

  if (!spec.consistency.empty()) {
    const double r = reduce(spec.consistency.size());
    double sum = 0.0;
    std::vector<double> dz_b(c);
    std::vector<double> lp_a(c), lp_b(c);
    for (std::size_t t = 0; t < spec.consistency.size(); ++t) {
      const auto& term = spec.consistency[t];
      const Embedding e = encode(term.input, m);
      const HeadPass a = run_head(e, m, spec.dropout, term.mask_seed_a);
      const HeadPass b = run_head(e, m, spec.dropout, term.mask_seed_b);
      double kl_ab = 0.0, kl_ba = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        lp_a[k] = std::log(std::max(a.p[k], kProbFloor));
        lp_b[k] = std::log(std::max(b.p[k], kProbFloor));
        kl_ab += a.p[k] * (lp_a[k] - lp_b[k]);
        kl_ba += b.p[k] * (lp_b[k] - lp_a[k]);
      }
      const double loss = 0.5 * (kl_ab + kl_ba);
      for (std::size_t k = 0; k < c; ++k) {
        dz[k] = 0.5 * (a.p[k] * (lp_a[k] - lp_b[k]) + a.p[k] - b.p[k] - a.p[k] * kl_ab);
        dz_b[k] = 0.5 * (b.p[k] * (lp_b[k] - lp_a[k]) + b.p[k] - a.p[k] - b.p[k] * kl_ba);
      }
      check_term(loss, dz, "consistency", t);
      check_term(loss, dz_b, "consistency", t);
      sum += loss;
      finish_pass(term.input, a, dz, spec.lambda_r * r);
      finish_pass(term.input, b, dz_b, spec.lambda_r * r);
    }
    out.consistency = sum * r;
  }

  out.total = out.cross_entropy + spec.lambda_p * out.pseudo + spec.lambda_r * out.consistency;
  if (!std::isfinite(out.total)) throw NumericError("non-finite total loss");
  return out;
}

// Little-endian byte helpers for the checkpoint format.
template <typename T>
void put_le(std::string& out, T value) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("checkpoint truncated");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

ModelParams::ModelParams(std::size_t b, std::size_t h, std::size_t c, double rate)
    : buckets(b),
      hidden(h),
      classes(c),
      embedding(b * h, 0.0),
      w1(h * h, 0.0),
      b1(h, 0.0),
      w2(h * c, 0.0),
      b2(c, 0.0),
      dropout_rate(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ArgumentError("dropout_rate must be in [0, 1)");
}

bool ModelParams::all_finite() const {
  return finite_all(embedding) && finite_all(w1) && finite_all(b1) && finite_all(w2) &&
         finite_all(b2) && dropout_rate < 1.0;
}

bool ModelParams::same_shape(const ModelParams& o) const {
  return buckets == o.buckets && hidden == o.hidden && classes == o.classes;
}

ModelParams init_model(const EncoderConfig& config, std::size_t num_classes, std::uint64_t seed) {
  if (config.buckets == 0 || config.hidden == 0 || num_classes < 2) {
    throw ArgumentError("init_model: need buckets >= 1, hidden >= 1, classes >= 2");
  }
  ModelParams m(config.buckets, config.hidden, num_classes, config.dropout_rate);
  Rng rng(seed);
  auto fill = [&](std::vector<double>& v, double half_width) {
    for (double& x : v) x = (2.0 * rng.uniform01() - 1.0) * half_width;
  };
  const double h = static_cast<double>(config.hidden);
  const double c = static_cast<double>(num_classes);
  fill(m.embedding, config.embedding_init);
  fill(m.w1, std::sqrt(6.0 / h));         // He-uniform for the ReLU layer
  fill(m.w2, std::sqrt(6.0 / (h + c)));   // Glorot-uniform for the output layer
  return m;
}

Embedding encode(const FeatureVector& features, const ModelParams& params) {
  Embedding e(params.hidden, 0.0);
  for (std::size_t f = 0; f < features.size(); ++f) {
    const std::uint32_t idx = features.indices[f];
    if (idx >= params.buckets) {
      throw ArgumentError("encode: feature index " + std::to_string(idx) + " >= buckets " +
                          std::to_string(params.buckets));
    }
    const double w = features.weights[f];
    const auto row = params.embedding_row(idx);
    for (std::size_t j = 0; j < params.hidden; ++j) e[j] += w * row[j];
  }
  return e;
}

std::vector<double> dropout_mask(std::size_t hidden, double rate, std::uint64_t mask_seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ArgumentError("dropout rate must be in [0, 1)");
  std::vector<double> mask(hidden, 1.0);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uint64_t state = mask_seed;
  for (std::size_t j = 0; j < hidden; ++j) {
    const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    mask[j] = u >= rate ? keep_scale : 0.0;
  }
  return mask;
}

std::vector<double> head_forward(std::span<const double> embedding, const ModelParams& params,
                                 bool dropout_on, std::uint64_t mask_seed) {
  if (embedding.size() != params.hidden) throw ArgumentError("head_forward: embedding width mismatch");
  return run_head(Embedding(embedding.begin(), embedding.end()), params, dropout_on, mask_seed)
      .logits;
}

ClassDistribution softmax(std::span<const double> logits) {
  if (logits.empty()) throw ArgumentError("softmax: empty logits");
  if (!finite_all(logits)) throw NumericError("softmax: non-finite logit");
  const double mx = *std::max_element(logits.begin(), logits.end());
  ClassDistribution out{std::vector<double>(logits.size())};
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out.probs[k] = std::exp(logits[k] - mx);
    z += out.probs[k];
  }
  for (double& p : out.probs) p /= z;
  return out;
}

ClassDistribution predict(const FeatureVector& features, const ModelParams& params) {
  return softmax(head_forward(encode(features, params), params, false, 0));
}

ModelInput ModelInput::from_features(const FeatureVector& features) {
  ModelInput in;
  in.parts.push_back({std::cref(features), 1.0});
  return in;
}

ModelInput ModelInput::mixed(const FeatureVector& a, const FeatureVector& b, double lambda) {
  ModelInput in;
  in.parts.push_back({std::cref(a), lambda});
  in.parts.push_back({std::cref(b), 1.0 - lambda});
  return in;
}

ModelInput ModelInput::from_embedding(Embedding e) {
  ModelInput in;
  in.fixed = std::move(e);
  return in;
}

Embedding encode(const ModelInput& input, const ModelParams& params) {
  Embedding e(params.hidden, 0.0);
  if (!input.fixed.empty()) {
    if (input.fixed.size() != params.hidden) throw ArgumentError("encode: embedding width mismatch");
    e = input.fixed;
  }
  for (const auto& part : input.parts) {
    const Embedding pe = encode(part.features.get(), params);
    for (std::size_t j = 0; j < params.hidden; ++j) e[j] += part.coef * pe[j];
  }
  return e;
}

Gradients::Gradients(const ModelParams& shape)
    : buckets(shape.buckets),
      hidden(shape.hidden),
      classes(shape.classes),
      w1(shape.w1.size(), 0.0),
      b1(shape.b1.size(), 0.0),
      w2(shape.w2.size(), 0.0),
      b2(shape.b2.size(), 0.0) {}

std::vector<double>& Gradients::row(std::uint32_t r) {
  auto it = embedding_rows.find(r);
  if (it == embedding_rows.end()) it = embedding_rows.emplace(r, std::vector<double>(hidden, 0.0)).first;
  return it->second;
}

double Gradients::embedding(std::size_t r, std::size_t col) const {
  const auto it = embedding_rows.find(static_cast<std::uint32_t>(r));
  return it == embedding_rows.end() ? 0.0 : it->second[col];
}

bool Gradients::all_finite() const {
  for (const auto& [r, row] : embedding_rows) {
    if (!finite_all(row)) return false;
  }
  return finite_all(w1) && finite_all(b1) && finite_all(w2) && finite_all(b2);
}

BackwardResult backward(const LossSpec& spec, const ModelParams& params) {
  BackwardResult result{{}, Gradients(params)};
  result.loss = run_objective(spec, params, &result.grads);
  return result;
}

LossValue evaluate_loss(const LossSpec& spec, const ModelParams& params) {
  return run_objective(spec, params, nullptr);
}

std::string serialize_checkpoint(const ModelParams& params) {
  std::string out = "SMX1";
  put_le<std::uint64_t>(out, params.buckets);
  put_le<std::uint64_t>(out, params.hidden);
  put_le<std::uint64_t>(out, params.classes);
  for (const auto* arr : {&params.embedding, &params.w1, &params.b1, &params.w2, &params.b2}) {
    for (double x : *arr) put_le<double>(out, x);
  }
  return out;
}

ModelParams deserialize_checkpoint(const std::string& bytes, double dropout_rate) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "SMX1") != 0) throw FormatError("bad checkpoint magic");
  std::size_t pos = 4;
  const auto b = get_le<std::uint64_t>(bytes, pos);
  const auto h = get_le<std::uint64_t>(bytes, pos);
  const auto c = get_le<std::uint64_t>(bytes, pos);
  const std::uint64_t expected = 4 + 24 + 8 * (b * h + h * h + h + h * c + c);
  if (bytes.size() != expected) throw FormatError("checkpoint size does not match its dimensions");
  ModelParams m(b, h, c, dropout_rate);
  for (auto* arr : {&m.embedding, &m.w1, &m.b1, &m.w2, &m.b2}) {
    for (double& x : *arr) x = get_le<double>(bytes, pos);
  }
  return m;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  const std::string bytes = serialize_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ModelParams load_checkpoint(const std::string& path, double dropout_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str(), dropout_rate);
}

}  // namespace selfmix
