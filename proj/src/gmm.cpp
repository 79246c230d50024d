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

#include "selfmix/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "selfmix/error.hpp"

namespace selfmix {

namespace {

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(std::span<const double> xs) {
  Moments mo;
  for (double x : xs) mo.mean += x;
  mo.mean /= static_cast<double>(xs.size());
  for (double x : xs) mo.var += (x - mo.mean) * (x - mo.mean);
  mo.var /= static_cast<double>(xs.size());
  return mo;
}

void order_components(GmmParams& g) {
  if (g.mean[1] < g.mean[0]) {
    std::swap(g.weight[0], g.weight[1]);
    std::swap(g.mean[0], g.mean[1]);
    std::swap(g.var[0], g.var[1]);
  }
}

// One E+M step. Weights are floored then renormalized; variances floored.
GmmParams em_step(const GmmParams& g, std::span<const double> values) {
  double r_sum[2] = {0.0, 0.0};
  double rx_sum[2] = {0.0, 0.0};
  std::vector<double> resp0(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double l0 = log_weighted_density(g, 0, values[i]);
    const double l1 = log_weighted_density(g, 1, values[i]);
    const double r0 = std::exp(l0 - log_sum_exp(l0, l1));
    resp0[i] = r0;
    r_sum[0] += r0;
    r_sum[1] += 1.0 - r0;
    rx_sum[0] += r0 * values[i];
    rx_sum[1] += (1.0 - r0) * values[i];
  }
  GmmParams next = g;
  const double n = static_cast<double>(values.size());
  for (int k = 0; k < 2; ++k) {
    if (r_sum[k] <= 0.0) continue;  // empty component keeps its mean/var
    next.mean[k] = rx_sum[k] / r_sum[k];
  }
  double rvar[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d0 = values[i] - next.mean[0];
    const double d1 = values[i] - next.mean[1];
    rvar[0] += resp0[i] * d0 * d0;
    rvar[1] += (1.0 - resp0[i]) * d1 * d1;
  }
  for (int k = 0; k < 2; ++k) {
    if (r_sum[k] > 0.0) next.var[k] = std::max(rvar[k] / r_sum[k], kGmmVarianceFloor);
    next.weight[k] = std::max(r_sum[k] / n, kGmmWeightFloor);
  }
  const double wsum = next.weight[0] + next.weight[1];
  next.weight[0] /= wsum;
  next.weight[1] /= wsum;
  return next;
}

}  // namespace

bool GmmParams::valid() const {
  for (int k = 0; k < 2; ++k) {
    if (!(weight[k] >= 0.0) || !std::isfinite(mean[k]) || !(var[k] > 0.0) || !std::isfinite(var[k])) {
      return false;
    }
  }
  return std::abs(weight[0] + weight[1] - 1.0) <= 1e-9;
}

double log_weighted_density(const GmmParams& gmm, int k, double value) {
  const double d = value - gmm.mean[k];
  return std::log(gmm.weight[k]) - 0.5 * std::log(2.0 * std::numbers::pi * gmm.var[k]) -
         0.5 * d * d / gmm.var[k];
}

double log_likelihood(const GmmParams& gmm, std::span<const double> values) {
  double total = 0.0;
  for (double v : values) {
    total += log_sum_exp(log_weighted_density(gmm, 0, v), log_weighted_density(gmm, 1, v));
  }
  return total;
}

double posterior_clean(const GmmParams& gmm, double value) {
  if (gmm.degenerate()) return 1.0;
  const double l0 = log_weighted_density(gmm, 0, value);
  const double l1 = log_weighted_density(gmm, 1, value);
  // w = 1 / (1 + exp(l1 - l0)), evaluated on the side that cannot overflow.
  const double z = l1 - l0;
  if (z > 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

GmmFit fit_gmm_traced(std::span<const double> values, const GmmFitOptions& options) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("fit_gmm: non-finite value");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() < 2 || sorted.front() == sorted.back()) {
    throw DegenerateInputError("fit_gmm: need at least 2 distinct values");
  }

  const std::size_t half = sorted.size() / 2;
  const Moments lo = moments(std::span<const double>(sorted).first(half));
  const Moments hi = moments(std::span<const double>(sorted).subspan(half));
  GmmFit fit;
  fit.params.weight = {0.5, 0.5};
  fit.params.mean = {lo.mean, hi.mean};
  fit.params.var = {std::max(lo.var, kGmmVarianceFloor), std::max(hi.var, kGmmVarianceFloor)};

  double ll = log_likelihood(fit.params, values);
  fit.log_likelihood_trace.push_back(ll);
  for (int it = 0; it < options.max_iter; ++it) {
    const GmmParams candidate = em_step(fit.params, values);
    const double next_ll = log_likelihood(candidate, values);
    fit.step_log_likelihoods.push_back(next_ll);
    // A step is kept only when it improves by at least tol, so tol = inf
    // returns the initialization and the trace is non-decreasing.
    if (!(next_ll - ll >= options.tol)) break;
    fit.params = candidate;
    ll = next_ll;
    fit.log_likelihood_trace.push_back(ll);
    ++fit.iterations;
  }
  order_components(fit.params);
  return fit;
}

}  // namespace selfmix
