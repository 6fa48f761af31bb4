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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ned/kernels.hpp"
#include "ned/matrix.hpp"

namespace {

ned::Matrix random_matrix(std::size_t r, std::size_t c, unsigned seed) {
  ned::Matrix m(r, c);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  for (double& v : m.flat()) v = d(rng);
  return m;
}

template <bool Parallel>
void BM_LinearForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const ned::Matrix x = random_matrix(n, in, 1);
  const ned::Matrix w = random_matrix(out, in, 2);
  const std::vector<double> b(out, 0.1);
  ned::Matrix y(n, out);
  for (auto _ : state) {
    if constexpr (Parallel)
      ned::kernels::linear_forward(x, w, b, y);
    else
      ned::kernels::reference::linear_forward(x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * in * out));
}

template <bool Parallel>
void BM_LinearBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const ned::Matrix x = random_matrix(n, in, 1);
  const ned::Matrix w = random_matrix(out, in, 2);
  const ned::Matrix dy = random_matrix(n, out, 3);
  ned::Matrix dw(out, in), dx(n, in);
  std::vector<double> db(out);
  for (auto _ : state) {
    if constexpr (Parallel) {
      ned::kernels::linear_backward_params(dy, x, dw, db);
      ned::kernels::linear_backward_input(dy, w, dx);
    } else {
      ned::kernels::reference::linear_backward_params(dy, x, dw, db);
      ned::kernels::reference::linear_backward_input(dy, w, dx);
    }
    benchmark::DoNotOptimize(dw.data());
    benchmark::DoNotOptimize(dx.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(2 * n * in * out));
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({128, 228, 128})->Args({128, 512, 128})->Args({128, 768, 512});
}

}  // namespace

BENCHMARK(BM_LinearForward<true>)->Name("linear_forward/openmp")->Apply(shapes);
BENCHMARK(BM_LinearForward<false>)->Name("linear_forward/reference")->Apply(shapes);
BENCHMARK(BM_LinearBackward<true>)->Name("linear_backward/openmp")->Apply(shapes);
BENCHMARK(BM_LinearBackward<false>)->Name("linear_backward/reference")->Apply(shapes);

BENCHMARK_MAIN();
