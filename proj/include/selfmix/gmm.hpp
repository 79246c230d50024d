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

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace selfmix {

inline constexpr double kGmmVarianceFloor = 1e-6;
inline constexpr double kGmmWeightFloor = 1e-4;
/// Means closer than this carry no separating signal.
inline constexpr double kGmmDegenerateGap = 1e-9;

/// Two-component 1-D Gaussian mixture. After fit_gmm, component 0 has the
/// lower mean (the "clean" component when fitted to losses).
struct GmmParams {
  std::array<double, 2> weight{0.5, 0.5};
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 2> var{1.0, 1.0};

  bool valid() const;
  bool degenerate() const { return mean[1] - mean[0] < kGmmDegenerateGap; }
};

struct GmmFitOptions {
  int max_iter = 100;
  double tol = 1e-6;
  /// Initialization is the deterministic sorted-half split; the seed is
  /// carried for interface stability and does not alter the result.
  std::uint64_t seed = 0;
};

struct GmmFit {
  GmmParams params;
  /// Log-likelihood of the initialization followed by each accepted EM step.
  std::vector<double> log_likelihood_trace;
  /// Log-likelihood after every EM step computed, including a final step
  /// rejected by the tolerance test. EM guarantees each entry is at least
  /// the preceding accepted value.
  std::vector<double> step_log_likelihoods;
  int iterations = 0;
};

/// EM fit. Throws DegenerateInputError with fewer than two distinct values.
GmmFit fit_gmm_traced(std::span<const double> values, const GmmFitOptions& options = {});

inline GmmParams fit_gmm(std::span<const double> values, int max_iter = 100, double tol = 1e-6,
                         std::uint64_t seed = 0) {
  return fit_gmm_traced(values, {max_iter, tol, seed}).params;
}

double log_likelihood(const GmmParams& gmm, std::span<const double> values);

/// Posterior of the lower-mean component; 1 when the fit is degenerate.
double posterior_clean(const GmmParams& gmm, double value);
inline double posterior_noisy(const GmmParams& gmm, double value) {
  return 1.0 - posterior_clean(gmm, value);
}

/// log(weight_k * N(value; mean_k, var_k)).
double log_weighted_density(const GmmParams& gmm, int component, double value);

}  // namespace selfmix
