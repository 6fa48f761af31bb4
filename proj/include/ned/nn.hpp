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

// A small feed-forward network engine: fully connected layers, batch
// normalization, ReLU, smooth-L1 and softmax-KL losses, hand-written
// backpropagation, and Adam. Everything is float64.
//
// Layer l maps widths[l] -> widths[l+1]. Every layer except the last is
// followed by ReLU; layers that are neither the bottleneck nor the output
// additionally get batch normalization between the FC and the ReLU.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "ned/matrix.hpp"

namespace ned::nn {

enum class LossKind { kSmoothL1, kKlDivergence };
enum class Mode { kTrain, kEval };

struct MlpSpec {
  std::vector<std::size_t> layer_widths;
  std::size_t bottleneck_index = 0;
  LossKind loss_kind = LossKind::kSmoothL1;
  // Reconstruction + mapping loss when true, mapping only otherwise.
  bool dual_loss = false;
  bool batch_norm = true;

  std::size_t num_layers() const { return layer_widths.size() - 1; }
  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t output_width() const { return layer_widths.back(); }
  std::size_t bottleneck_width() const { return layer_widths[bottleneck_index]; }
  bool has_relu(std::size_t layer) const { return layer + 1 < num_layers(); }
  bool has_norm(std::size_t layer) const {
    return batch_norm && has_relu(layer) && layer + 1 != bottleneck_index;
  }

  // Throws ShapeMismatch when the topology is unusable.
  void validate() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct DenseLayer {
  Matrix weight;  // out x in
  std::vector<double> bias;
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct BatchNormLayer {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double eps = 1e-5;
  double momentum = 0.1;
  friend bool operator==(const BatchNormLayer&, const BatchNormLayer&) = default;
};

struct ModelParams {
  std::vector<DenseLayer> dense;
  std::vector<std::optional<BatchNormLayer>> norm;

  // Learnable tensors in declaration order: per layer W, b, then gamma and
  // beta when the layer is normalized. Gradients and Adam state use the
  // same order.
  std::vector<std::span<double>> trainable();
  std::vector<std::span<const double>> trainable() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases, gamma = 1,
// beta = 0, running stats (0, 1).
ModelParams init_params(const MlpSpec& spec, std::uint64_t seed);

struct LayerCache {
  Matrix input;
  Matrix pre_activation;  // after BN affine (or FC when not normalized)
  Matrix xhat;            // normalized FC output, BN layers only
  std::vector<double> inv_std;
};

struct ForwardCache {
  Mode mode = Mode::kEval;
  std::vector<LayerCache> layers;
};

struct ForwardResult {
  Matrix output;
  Matrix bottleneck;
  ForwardCache cache;
};

// TRAIN mode normalizes with batch statistics and updates the running
// statistics in `params`; EVAL mode uses the running statistics and leaves
// `params` untouched.
ForwardResult forward(ModelParams& params, const MlpSpec& spec,
                      const Matrix& batch, Mode mode);
ForwardResult forward(const ModelParams& params, const MlpSpec& spec,
                      const Matrix& batch);

// EVAL-mode forward stopped at the bottleneck.
Matrix encode(const ModelParams& params, const MlpSpec& spec,
              const Matrix& batch);

struct Gradients {
  std::vector<std::vector<double>> tensors;
};

// Exact gradients of the loss with respect to every trainable tensor, given
// the loss gradient with respect to the network output. Requires a
// TRAIN-mode cache (StaleCache otherwise).
Gradients backward(const ForwardCache& cache, const ModelParams& params,
                   const MlpSpec& spec, const Matrix& output_grad);

struct LossResult {
  double value = 0.0;
  Matrix grad;  // d value / d pred
};

// Huber at 1, mean over all elements.
LossResult smooth_l1_loss(const Matrix& pred, const Matrix& target);

// Row-wise KL(softmax(target) || softmax(pred)), mean over rows. The
// gradient flows through the pred softmax only.
LossResult kl_loss(const Matrix& pred, const Matrix& target);

LossResult loss(LossKind kind, const Matrix& pred, const Matrix& target);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Zeroed accumulators shaped like `params`.
AdamState make_adam_state(std::span<const std::span<double>> params);

void adam_step(std::span<const std::span<double>> params, const Gradients& grads,
               AdamState& state);

nlohmann::json spec_to_json(const MlpSpec& spec);
MlpSpec spec_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& j, const MlpSpec& spec);

}  // namespace ned::nn
