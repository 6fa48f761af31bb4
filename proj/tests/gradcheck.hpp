// Copyright 2026 The ned-entrain Authors.
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

// Central finite-difference check of nn::backward.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ned/nn.hpp"

namespace ned::testing {

inline double train_loss(nn::ModelParams params, const nn::MlpSpec& spec,
                         const Matrix& x, const Matrix& target) {
  const auto r = nn::forward(params, spec, x, nn::Mode::kTrain);
  return nn::loss(spec.loss_kind, r.output, target).value;
}

// Moves every bias, gamma and beta off its initial value so that no ReLU
// sits exactly on its kink (zero-initialized biases fed by an all-zero row).
inline void jitter_params(nn::ModelParams& params, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 0.3);
  for (auto& layer : params.dense)
    for (double& b : layer.bias) b += d(rng);
  for (auto& bn : params.norm)
    if (bn) {
      for (double& g : bn->gamma) g += d(rng);
      for (double& b : bn->beta) b += d(rng);
    }
}

// Largest per-tensor relative error ||a - n|| / (||a|| + ||n||).
inline double gradient_check(const nn::ModelParams& params,
                             const nn::MlpSpec& spec, const Matrix& x,
                             const Matrix& target, double step = 1e-5) {
  nn::ModelParams work = params;
  const auto fwd = nn::forward(work, spec, x, nn::Mode::kTrain);
  const auto l = nn::loss(spec.loss_kind, fwd.output, target);
  const auto analytic = nn::backward(fwd.cache, params, spec, l.grad);

  double worst = 0.0;
  const std::size_t tensors = analytic.tensors.size();
  for (std::size_t t = 0; t < tensors; ++t) {
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    const std::size_t len = analytic.tensors[t].size();
    for (std::size_t i = 0; i < len; ++i) {
      nn::ModelParams plus = params, minus = params;
      plus.trainable()[t][i] += step;
      minus.trainable()[t][i] -= step;
      const double numeric = (train_loss(plus, spec, x, target) -
                              train_loss(minus, spec, x, target)) /
                             (2.0 * step);
      const double a = analytic.tensors[t][i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
    const double denom = std::sqrt(a2) + std::sqrt(n2);
    if (denom > 1e-10) worst = std::max(worst, std::sqrt(diff2) / denom);
  }
  return worst;
}

}  // namespace ned::testing
