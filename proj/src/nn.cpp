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

#include "ned/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "ned/error.hpp"
#include "ned/kernels.hpp"

namespace ned::nn {

using nlohmann::json;

void MlpSpec::validate() const {
  if (layer_widths.size() < 3)
    fail(ErrorKind::kShapeMismatch, "MlpSpec needs at least 3 layer widths");
  for (std::size_t w : layer_widths)
    if (w == 0) fail(ErrorKind::kShapeMismatch, "layer widths must be >= 1");
  if (bottleneck_index == 0 || bottleneck_index + 1 >= layer_widths.size())
    fail(ErrorKind::kShapeMismatch,
         "bottleneck_index must point at an interior layer");
  if (dual_loss && input_width() != output_width())
    fail(ErrorKind::kShapeMismatch,
         "dual loss needs output width equal to input width");
}

std::vector<std::span<double>> ModelParams::trainable() {
  std::vector<std::span<double>> out;
  for (std::size_t l = 0; l < dense.size(); ++l) {
    out.emplace_back(dense[l].weight.flat());
    out.emplace_back(dense[l].bias);
    if (norm[l]) {
      out.emplace_back(norm[l]->gamma);
      out.emplace_back(norm[l]->beta);
    }
  }
  return out;
}

std::vector<std::span<const double>> ModelParams::trainable() const {
  std::vector<std::span<const double>> out;
  for (auto s : const_cast<ModelParams*>(this)->trainable()) out.emplace_back(s);
  return out;
}

ModelParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const std::size_t in = spec.layer_widths[l], out = spec.layer_widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer d{Matrix(out, in), std::vector<double>(out, 0.0)};
    for (double& w : d.weight.flat()) w = u(rng);
    p.dense.push_back(std::move(d));
    if (spec.has_norm(l)) {
      BatchNormLayer bn;
      bn.gamma.assign(out, 1.0);
      bn.beta.assign(out, 0.0);
      bn.running_mean.assign(out, 0.0);
      bn.running_var.assign(out, 1.0);
      p.norm.emplace_back(std::move(bn));
    } else {
      p.norm.emplace_back(std::nullopt);
    }
  }
  return p;
}

namespace {

void check_params(const ModelParams& params, const MlpSpec& spec) {
  if (params.dense.size() != spec.num_layers() ||
      params.norm.size() != spec.num_layers())
    fail(ErrorKind::kShapeMismatch, "parameters do not match the MlpSpec");
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const auto& d = params.dense[l];
    if (d.weight.rows() != spec.layer_widths[l + 1] ||
        d.weight.cols() != spec.layer_widths[l] ||
        d.bias.size() != spec.layer_widths[l + 1] ||
        params.norm[l].has_value() != spec.has_norm(l))
      fail(ErrorKind::kShapeMismatch,
           "layer " + std::to_string(l) + " parameters do not match the MlpSpec");
  }
}

// Shared forward pass. `running` receives the running-stat updates in TRAIN
// mode; `cache` is filled when non-null. Stops after layer `last_layer`.
Matrix run_forward(const ModelParams& params, const MlpSpec& spec,
                   const Matrix& batch, Mode mode, std::size_t last_layer,
                   ForwardCache* cache, Matrix* bottleneck,
                   std::vector<BatchNormLayer>* running) {
  if (batch.cols() != spec.input_width())
    fail(ErrorKind::kShapeMismatch,
         "batch has " + std::to_string(batch.cols()) + " columns, network expects " +
             std::to_string(spec.input_width()));
  if (batch.rows() == 0) fail(ErrorKind::kShapeMismatch, "empty batch");
  check_params(params, spec);

  const std::size_t n = batch.rows();
  if (cache) {
    cache->mode = mode;
    cache->layers.assign(last_layer + 1, {});
  }
  Matrix a = batch;
  for (std::size_t l = 0; l <= last_layer; ++l) {
    const DenseLayer& dl = params.dense[l];
    Matrix z;
    kernels::linear_forward(a, dl.weight, dl.bias, z);
    const std::size_t width = z.cols();

    if (params.norm[l]) {
      const BatchNormLayer& bn = *params.norm[l];
      std::vector<double> mean(width), var(width), inv_std(width);
      if (mode == Mode::kTrain) {
        kernels::column_moments(z, mean, var);
      } else {
        mean = bn.running_mean;
        var = bn.running_var;
      }
      for (std::size_t c = 0; c < width; ++c)
        inv_std[c] = 1.0 / std::sqrt(var[c] + bn.eps);
      Matrix xhat(n, width);
      for (std::size_t r = 0; r < n; ++r) {
        auto zr = z.row(r);
        auto xr = xhat.row(r);
        for (std::size_t c = 0; c < width; ++c) {
          xr[c] = (zr[c] - mean[c]) * inv_std[c];
          zr[c] = bn.gamma[c] * xr[c] + bn.beta[c];
        }
      }
      if (mode == Mode::kTrain && running) {
        BatchNormLayer& rs = (*running)[l];
        for (std::size_t c = 0; c < width; ++c) {
          rs.running_mean[c] =
              (1.0 - bn.momentum) * rs.running_mean[c] + bn.momentum * mean[c];
          rs.running_var[c] =
              (1.0 - bn.momentum) * rs.running_var[c] + bn.momentum * var[c];
        }
      }
      if (cache) {
        cache->layers[l].xhat = std::move(xhat);
        cache->layers[l].inv_std = std::move(inv_std);
      }
    }

    if (cache) {
      cache->layers[l].input = std::move(a);
      cache->layers[l].pre_activation = z;
    }
    if (spec.has_relu(l))
      for (double& v : z.flat()) v = v > 0.0 ? v : 0.0;
    if (bottleneck && l + 1 == spec.bottleneck_index) *bottleneck = z;
    a = std::move(z);
  }
  return a;
}

}  // namespace

ForwardResult forward(ModelParams& params, const MlpSpec& spec,
                      const Matrix& batch, Mode mode) {
  if (mode == Mode::kEval) return forward(std::as_const(params), spec, batch);
  ForwardResult r;
  std::vector<BatchNormLayer> running(params.norm.size());
  for (std::size_t l = 0; l < params.norm.size(); ++l)
    if (params.norm[l]) running[l] = *params.norm[l];
  r.output = run_forward(params, spec, batch, Mode::kTrain,
                         spec.num_layers() - 1, &r.cache, &r.bottleneck,
                         &running);
  for (std::size_t l = 0; l < params.norm.size(); ++l)
    if (params.norm[l]) {
      params.norm[l]->running_mean = std::move(running[l].running_mean);
      params.norm[l]->running_var = std::move(running[l].running_var);
    }
  return r;
}

ForwardResult forward(const ModelParams& params, const MlpSpec& spec,
                      const Matrix& batch) {
  ForwardResult r;
  r.output = run_forward(params, spec, batch, Mode::kEval,
                         spec.num_layers() - 1, &r.cache, &r.bottleneck,
                         nullptr);
  return r;
}

Matrix encode(const ModelParams& params, const MlpSpec& spec,
              const Matrix& batch) {
  return run_forward(params, spec, batch, Mode::kEval,
                     spec.bottleneck_index - 1, nullptr, nullptr, nullptr);
}

Gradients backward(const ForwardCache& cache, const ModelParams& params,
                   const MlpSpec& spec, const Matrix& output_grad) {
  if (cache.mode != Mode::kTrain)
    fail(ErrorKind::kStaleCache, "backward needs a TRAIN-mode forward cache");
  if (cache.layers.size() != spec.num_layers())
    fail(ErrorKind::kStaleCache, "cache does not cover the whole network");
  check_params(params, spec);

  std::vector<std::vector<double>> per_layer_w(spec.num_layers()),
      per_layer_b(spec.num_layers()), per_layer_g(spec.num_layers()),
      per_layer_beta(spec.num_layers());

  Matrix g = output_grad;
  for (std::size_t l = spec.num_layers(); l-- > 0;) {
    const LayerCache& lc = cache.layers[l];
    if (!g.same_shape(lc.pre_activation))
      fail(ErrorKind::kShapeMismatch, "gradient shape does not match cache");
    const std::size_t n = g.rows(), width = g.cols();

    if (spec.has_relu(l)) {
      auto gf = g.flat();
      auto pf = lc.pre_activation.flat();
      for (std::size_t i = 0; i < gf.size(); ++i)
        if (!(pf[i] > 0.0)) gf[i] = 0.0;
    }

    if (params.norm[l]) {
      const BatchNormLayer& bn = *params.norm[l];
      std::vector<double> dgamma(width, 0.0), dbeta(width, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        auto gr = g.row(r);
        auto xr = lc.xhat.row(r);
        for (std::size_t c = 0; c < width; ++c) {
          dgamma[c] += gr[c] * xr[c];
          dbeta[c] += gr[c];
        }
      }
      // dxhat = g * gamma; dz = inv_std / N * (N dxhat - sum dxhat
      //                                         - xhat * sum(dxhat xhat))
      const double nn = static_cast<double>(n);
      for (std::size_t r = 0; r < n; ++r) {
        auto gr = g.row(r);
        auto xr = lc.xhat.row(r);
        for (std::size_t c = 0; c < width; ++c) {
          const double sum_dxhat = bn.gamma[c] * dbeta[c];
          const double sum_dxhat_xhat = bn.gamma[c] * dgamma[c];
          gr[c] = lc.inv_std[c] / nn *
                  (nn * bn.gamma[c] * gr[c] - sum_dxhat - xr[c] * sum_dxhat_xhat);
        }
      }
      per_layer_g[l] = std::move(dgamma);
      per_layer_beta[l] = std::move(dbeta);
    }

    Matrix dw;
    std::vector<double> db(width);
    kernels::linear_backward_params(g, lc.input, dw, db);
    const auto flat = dw.flat();
    per_layer_w[l].assign(flat.begin(), flat.end());
    per_layer_b[l] = std::move(db);
    if (l > 0) {
      Matrix dx;
      kernels::linear_backward_input(g, params.dense[l].weight, dx);
      g = std::move(dx);
    }
  }

  Gradients out;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    out.tensors.push_back(std::move(per_layer_w[l]));
    out.tensors.push_back(std::move(per_layer_b[l]));
    if (params.norm[l]) {
      out.tensors.push_back(std::move(per_layer_g[l]));
      out.tensors.push_back(std::move(per_layer_beta[l]));
    }
  }
  return out;
}

LossResult smooth_l1_loss(const Matrix& pred, const Matrix& target) {
  if (!pred.same_shape(target))
    fail(ErrorKind::kShapeMismatch, "smooth_l1_loss: shapes differ");
  LossResult r{0.0, Matrix(pred.rows(), pred.cols())};
  const double n = static_cast<double>(pred.size());
  auto p = pred.flat();
  auto t = target.flat();
  auto g = r.grad.flat();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    const double ad = std::abs(d);
    sum += ad < 1.0 ? 0.5 * d * d : ad - 0.5;
    g[i] = std::clamp(d, -1.0, 1.0) / n;
  }
  r.value = sum / n;
  return r;
}

namespace {

void log_softmax(std::span<const double> x, std::span<double> out) {
  const double mx = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
}

}  // namespace

LossResult kl_loss(const Matrix& pred, const Matrix& target) {
  if (!pred.same_shape(target))
    fail(ErrorKind::kShapeMismatch, "kl_loss: shapes differ");
  LossResult r{0.0, Matrix(pred.rows(), pred.cols())};
  const std::size_t d = pred.cols();
  const double rows = static_cast<double>(pred.rows());
  std::vector<double> lq(d), lp(d);
  double sum = 0.0;
  for (std::size_t row = 0; row < pred.rows(); ++row) {
    log_softmax(target.row(row), lq);
    log_softmax(pred.row(row), lp);
    double kl = 0.0;
    auto g = r.grad.row(row);
    for (std::size_t i = 0; i < d; ++i) {
      const double q = std::exp(lq[i]);
      kl += q * (lq[i] - lp[i]);
      g[i] = (std::exp(lp[i]) - q) / rows;
    }
    sum += kl;
  }
  r.value = sum / rows;
  return r;
}

LossResult loss(LossKind kind, const Matrix& pred, const Matrix& target) {
  return kind == LossKind::kSmoothL1 ? smooth_l1_loss(pred, target)
                                     : kl_loss(pred, target);
}

AdamState make_adam_state(std::span<const std::span<double>> params) {
  AdamState s;
  for (auto p : params) {
    s.m.emplace_back(p.size(), 0.0);
    s.v.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<const std::span<double>> params, const Gradients& grads,
               AdamState& state) {
  if (grads.tensors.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    fail(ErrorKind::kShapeMismatch, "adam_step: tensor count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k)
    if (grads.tensors[k].size() != params[k].size() ||
        state.m[k].size() != params[k].size() ||
        state.v[k].size() != params[k].size())
      fail(ErrorKind::kShapeMismatch,
           "adam_step: tensor " + std::to_string(k) + " shape mismatch");

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    const auto& g = grads.tensors[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

json spec_to_json(const MlpSpec& spec) {
  return json{{"layer_widths", spec.layer_widths},
              {"bottleneck_index", spec.bottleneck_index},
              {"loss_kind", spec.loss_kind == LossKind::kSmoothL1
                                ? "SMOOTH_L1"
                                : "KL_DIVERGENCE"},
              {"dual_loss", spec.dual_loss},
              {"batch_norm", spec.batch_norm}};
}

MlpSpec spec_from_json(const json& j) {
  try {
    MlpSpec s;
    s.layer_widths = j.at("layer_widths").get<std::vector<std::size_t>>();
    s.bottleneck_index = j.at("bottleneck_index").get<std::size_t>();
    const auto lk = j.at("loss_kind").get<std::string>();
    if (lk == "SMOOTH_L1") s.loss_kind = LossKind::kSmoothL1;
    else if (lk == "KL_DIVERGENCE") s.loss_kind = LossKind::kKlDivergence;
    else fail(ErrorKind::kSchemaViolation, "unknown loss_kind '" + lk + "'");
    s.dual_loss = j.at("dual_loss").get<bool>();
    s.batch_norm = j.value("batch_norm", true);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorKind::kSchemaViolation, std::string("bad MlpSpec: ") + e.what());
  }
}

json params_to_json(const ModelParams& params) {
  json layers = json::array();
  for (std::size_t l = 0; l < params.dense.size(); ++l) {
    const auto& d = params.dense[l];
    const auto w = d.weight.flat();
    json layer{{"rows", d.weight.rows()},
               {"cols", d.weight.cols()},
               {"weight", std::vector<double>(w.begin(), w.end())},
               {"bias", d.bias}};
    if (params.norm[l]) {
      const auto& bn = *params.norm[l];
      layer["batch_norm"] = json{{"gamma", bn.gamma},
                                 {"beta", bn.beta},
                                 {"running_mean", bn.running_mean},
                                 {"running_var", bn.running_var},
                                 {"eps", bn.eps},
                                 {"momentum", bn.momentum}};
    } else {
      layer["batch_norm"] = nullptr;
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

ModelParams params_from_json(const json& j, const MlpSpec& spec) {
  try {
    ModelParams p;
    for (const auto& layer : j) {
      DenseLayer d{Matrix(layer.at("rows").get<std::size_t>(),
                          layer.at("cols").get<std::size_t>()),
                   layer.at("bias").get<std::vector<double>>()};
      const auto w = layer.at("weight").get<std::vector<double>>();
      if (w.size() != d.weight.size())
        fail(ErrorKind::kShapeMismatch, "weight size does not match rows x cols");
      std::copy(w.begin(), w.end(), d.weight.data());
      p.dense.push_back(std::move(d));
      const auto& bnj = layer.at("batch_norm");
      if (bnj.is_null()) {
        p.norm.emplace_back(std::nullopt);
      } else {
        BatchNormLayer bn;
        bn.gamma = bnj.at("gamma").get<std::vector<double>>();
        bn.beta = bnj.at("beta").get<std::vector<double>>();
        bn.running_mean = bnj.at("running_mean").get<std::vector<double>>();
        bn.running_var = bnj.at("running_var").get<std::vector<double>>();
        bn.eps = bnj.at("eps").get<double>();
        bn.momentum = bnj.at("momentum").get<double>();
        p.norm.emplace_back(std::move(bn));
      }
    }
    check_params(p, spec);
    return p;
  } catch (const json::exception& e) {
    fail(ErrorKind::kSchemaViolation, std::string("bad parameters: ") + e.what());
  }
}

}  // namespace ned::nn
