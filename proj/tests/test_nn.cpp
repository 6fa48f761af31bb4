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

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "doctest.h"
#include "gen.hpp"
#include "gradcheck.hpp"
#include "ned/error.hpp"
#include "ned/kernels.hpp"
#include "ned/nn.hpp"

using namespace ned;
using namespace ned::nn;
using ned::testing::Gen;

namespace {

MlpSpec small_spec(Gen& g, LossKind kind, bool bn) {
  MlpSpec s;
  const std::size_t layers = g.index(3, 5);
  for (std::size_t i = 0; i < layers; ++i) s.layer_widths.push_back(g.index(2, 8));
  s.bottleneck_index = g.index(1, layers - 2);
  s.loss_kind = kind;
  s.batch_norm = bn;
  return s;
}

Matrix one(double v) { return Matrix(1, 1, v); }

}  // namespace

TEST_CASE("spec validation") {
  MlpSpec s{{4, 3, 4}, 1};
  CHECK_NOTHROW(s.validate());
  CHECK_THROWS_AS((MlpSpec{{4, 4}, 1}.validate()), Error);
  CHECK_THROWS_AS((MlpSpec{{4, 0, 4}, 1}.validate()), Error);
  CHECK_THROWS_AS((MlpSpec{{4, 3, 4}, 0}.validate()), Error);
  CHECK_THROWS_AS((MlpSpec{{4, 3, 4}, 2}.validate()), Error);
  MlpSpec dual{{4, 3, 5}, 1, LossKind::kSmoothL1, true};
  CHECK_THROWS_AS(dual.validate(), Error);
}

TEST_CASE("layer layout") {
  MlpSpec s{{228, 128, 30, 128, 228}, 2};
  CHECK(s.has_norm(0));
  CHECK_FALSE(s.has_norm(1));  // feeds the bottleneck
  CHECK(s.has_norm(2));
  CHECK_FALSE(s.has_norm(3));
  CHECK(s.has_relu(1));
  CHECK_FALSE(s.has_relu(3));
  const ModelParams p = init_params(s, 1);
  CHECK(p.trainable().size() == 4 * 2 + 2 * 2);
  for (const auto& bn : p.norm)
    if (bn) {
      CHECK(bn->gamma == std::vector<double>(bn->gamma.size(), 1.0));
      CHECK(bn->running_var == std::vector<double>(bn->gamma.size(), 1.0));
    }
  for (std::size_t l = 0; l < p.dense.size(); ++l) {
    const double bound = std::sqrt(6.0 / static_cast<double>(s.layer_widths[l]));
    for (double w : p.dense[l].weight.flat()) CHECK(std::abs(w) <= bound);
  }
}

TEST_CASE("forward examples") {
  MlpSpec s{{3, 4, 2, 4, 3}, 2};
  ModelParams p = init_params(s, 3);
  for (auto t : p.trainable()) std::fill(t.begin(), t.end(), 0.0);
  for (auto& bn : p.norm)
    if (bn) std::fill(bn->gamma.begin(), bn->gamma.end(), 1.0);
  Gen g(5);
  const Matrix x = g.matrix(6, 3);
  const Matrix train = forward(p, s, x, Mode::kTrain).output;
  const Matrix eval = forward(std::as_const(p), s, x).output;
  for (double v : train.flat()) CHECK(v == 0.0);
  for (double v : eval.flat()) CHECK(v == 0.0);

  // 2 -> 2 -> 2 with identity weights and no normalization.
  MlpSpec id{{2, 2, 2}, 1, LossKind::kSmoothL1, false, false};
  ModelParams q = init_params(id, 1);
  for (auto& d : q.dense) {
    d.weight = Matrix(2, 2);
    d.weight(0, 0) = d.weight(1, 1) = 1.0;
  }
  q.dense[1].weight(0, 1) = 3.0;
  q.dense[1].bias = {0.5, -1.0};
  Matrix in(1, 2);
  in(0, 0) = -1.0;
  in(0, 1) = 2.0;
  const auto r = forward(std::as_const(q), id, in);
  CHECK(r.bottleneck(0, 0) == 0.0);
  CHECK(r.bottleneck(0, 1) == 2.0);
  CHECK(r.output(0, 0) == 0.0 + 3.0 * 2.0 + 0.5);
  CHECK(r.output(0, 1) == 2.0 - 1.0);
}

TEST_CASE("eval is pure and repeatable") {
  Gen g(11);
  MlpSpec s{{5, 6, 3, 6, 5}, 2};
  ModelParams p = init_params(s, 2);
  forward(p, s, g.matrix(16, 5, 3.0), Mode::kTrain);  // move running stats
  const ModelParams before = p;
  const Matrix x = g.matrix(7, 5);
  const auto a = forward(std::as_const(p), s, x);
  const auto b = forward(std::as_const(p), s, x);
  CHECK(a.output == b.output);
  CHECK(a.bottleneck == b.bottleneck);
  CHECK(p == before);
  CHECK(encode(p, s, x) == a.bottleneck);
}

TEST_CASE("train mode updates running stats") {
  Gen g(12);
  MlpSpec s{{3, 4, 2, 4, 3}, 2};
  ModelParams p = init_params(s, 4);
  const Matrix x = g.matrix(10, 3);
  Matrix z;
  ned::kernels::linear_forward(x, p.dense[0].weight, p.dense[0].bias, z);
  std::vector<double> mean(4), var(4);
  ned::kernels::reference::column_moments(z, mean, var);
  forward(p, s, x, Mode::kTrain);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(p.norm[0]->running_mean[c] == doctest::Approx(0.1 * mean[c]).epsilon(1e-12));
    CHECK(p.norm[0]->running_var[c] ==
          doctest::Approx(0.9 + 0.1 * var[c]).epsilon(1e-12));
    CHECK(p.norm[0]->running_var[c] >= 0.0);
  }
}

TEST_CASE("batch norm normalizes each feature in train mode") {
  Gen g(21);
  for (int trial = 0; trial < 50; ++trial) {
    MlpSpec s{{4, 6, 2, 6, 4}, 2};
    ModelParams p = init_params(s, static_cast<std::uint64_t>(trial));
    // Large-variance inputs keep eps/(var+eps) below the tolerance.
    const Matrix x = g.matrix(g.index(8, 64), 4, 200.0);
    const auto r = forward(p, s, x, Mode::kTrain);
    const Matrix& xhat = r.cache.layers[0].xhat;
    std::vector<double> mean(6), var(6);
    ned::kernels::reference::column_moments(xhat, mean, var);
    for (std::size_t c = 0; c < 6; ++c) {
      CHECK(std::abs(mean[c]) < 1e-6);
      CHECK(std::abs(var[c] - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("backward rejects eval caches and zero gradients give zero") {
  Gen g(31);
  MlpSpec s{{3, 4, 2, 4, 3}, 2};
  ModelParams p = init_params(s, 9);
  const Matrix x = g.matrix(5, 3);
  const auto eval = forward(std::as_const(p), s, x);
  try {
    backward(eval.cache, p, s, Matrix(5, 3));
    FAIL("expected StaleCache");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kStaleCache);
  }
  const auto train = forward(p, s, x, Mode::kTrain);
  const auto grads = backward(train.cache, p, s, Matrix(5, 3));
  for (const auto& t : grads.tensors)
    for (double v : t) CHECK(v == 0.0);
}

TEST_CASE("last-layer gradient of mean squared output") {
  Gen g(41);
  MlpSpec s{{4, 5, 3}, 1, LossKind::kSmoothL1, false, false};
  ModelParams p = init_params(s, 5);
  const Matrix x = g.matrix(6, 4);
  const auto r = forward(p, s, x, Mode::kTrain);
  const double n = static_cast<double>(r.output.size());
  Matrix dy = r.output;
  for (double& v : dy.flat()) v *= 2.0 / n;
  const auto grads = backward(r.cache, p, s, dy);
  const Matrix& h = r.cache.layers[1].input;
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t i = 0; i < 5; ++i) {
      double expect = 0.0;
      for (std::size_t k = 0; k < 6; ++k) expect += r.output(k, o) * h(k, i);
      expect *= 2.0 / n;
      CHECK(grads.tensors[2][o * 5 + i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("gradients match finite differences") {
  Gen g(51);
  for (int trial = 0; trial < 24; ++trial) {
    const LossKind kind = trial % 2 ? LossKind::kKlDivergence : LossKind::kSmoothL1;
    const MlpSpec s = small_spec(g, kind, trial % 3 != 2);
    ModelParams p = init_params(s, static_cast<std::uint64_t>(100 + trial));
    ned::testing::jitter_params(p, g.engine());
    const std::size_t n = g.index(4, 10);
    const Matrix x = g.matrix(n, s.input_width());
    const Matrix t = g.matrix(n, s.output_width(), 2.0);
    CAPTURE(trial);
    CHECK(ned::testing::gradient_check(p, s, x, t) < 1e-4);
  }
}

TEST_CASE("smooth L1 closed form") {
  for (double d : {0.0, 0.5, -0.5, 1.0, -1.0, 3.0, -3.0}) {
    const auto r = smooth_l1_loss(one(d), one(0.0));
    const double h = std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
    CHECK(std::abs(r.value - h) <= 1e-12);
    CHECK(std::abs(r.grad(0, 0) - std::clamp(d, -1.0, 1.0)) <= 1e-12);
  }
  CHECK(smooth_l1_loss(one(0.5), one(0.0)).value == 0.125);
  CHECK(smooth_l1_loss(one(3.0), one(0.0)).value == 2.5);
  Gen g(61);
  const Matrix a = g.matrix(3, 4);
  const auto same = smooth_l1_loss(a, a);
  CHECK(same.value == 0.0);
  for (double v : same.grad.flat()) CHECK(v == 0.0);
  CHECK_THROWS_AS(smooth_l1_loss(a, g.matrix(4, 3)), Error);
}

TEST_CASE("KL loss") {
  Matrix p(1, 2), q(1, 2);
  q(0, 1) = std::log(3.0);
  const double expect = 0.25 * std::log(0.5) + 0.75 * std::log(1.5);
  CHECK(std::abs(kl_loss(p, q).value - expect) < 1e-12);
  CHECK(std::abs(kl_loss(p, q).value - 0.13081) < 1e-5);
  CHECK(kl_loss(q, q).value == doctest::Approx(0.0).epsilon(1e-15));

  Gen g(71);
  for (int i = 0; i < 500; ++i) {
    const std::size_t w = g.index(1, 12);
    const Matrix a = g.matrix(g.index(1, 4), w, 3.0);
    const Matrix b = g.matrix(a.rows(), w, 3.0);
    const double base = kl_loss(a, b).value;
    CHECK(base >= -1e-12);
    Matrix shifted = a;
    for (std::size_t r = 0; r < a.rows(); ++r) {
      const double c = g.normal(0.0, 10.0);
      for (double& v : shifted.row(r)) v += c;
    }
    CHECK(std::abs(kl_loss(shifted, b).value - base) < 1e-12);
  }
}

TEST_CASE("adam examples") {
  std::vector<double> w{0.0};
  std::vector<std::span<double>> params{w};
  AdamState st = make_adam_state(params);
  adam_step(params, Gradients{{{0.0}}}, st);
  CHECK(w[0] == 0.0);
  CHECK(st.t == 1);

  st = make_adam_state(params);
  adam_step(params, Gradients{{{1.0}}}, st);
  CHECK(w[0] == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(st.t == 1);

  w[0] = 0.0;
  st = make_adam_state(params);
  double prev = w[0];
  for (int i = 0; i < 1000; ++i) {
    adam_step(params, Gradients{{{-2.5}}}, st);
    CHECK(w[0] > prev);
    prev = w[0];
  }
  CHECK(st.t == 1000);
  CHECK_THROWS_AS(adam_step(params, Gradients{{{1.0, 2.0}}}, st), Error);
}

TEST_CASE("json round trip is bit exact") {
  Gen g(81);
  MlpSpec s{{5, 7, 3, 7, 5}, 2, LossKind::kKlDivergence, true};
  ModelParams p = init_params(s, 77);
  forward(p, s, g.matrix(9, 5), Mode::kTrain);
  const auto s2 = spec_from_json(nlohmann::json::parse(spec_to_json(s).dump()));
  CHECK(s2 == s);
  const auto p2 = params_from_json(nlohmann::json::parse(params_to_json(p).dump()), s2);
  CHECK(p2 == p);
}
