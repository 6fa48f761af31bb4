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

// Dense kernels used by the network engine.
//
// `ned::kernels` holds the OpenMP versions. Each output element is
// accumulated by exactly one thread in a fixed order, so results are
// bit-identical for any thread count. `ned::kernels::reference` holds the
// plain serial loops the parallel kernels are tested and benchmarked
// against.

#include <span>

#include "ned/matrix.hpp"

namespace ned::kernels {

// y = x * w^T + b, with w stored (out x in).
void linear_forward(const Matrix& x, const Matrix& w, std::span<const double> b,
                    Matrix& y);

// dw = dy^T * x and db = column sums of dy.
void linear_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw,
                            std::span<double> db);

// dx = dy * w.
void linear_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);

// Per-column mean and population variance.
void column_moments(const Matrix& x, std::span<double> mean,
                    std::span<double> var);

namespace reference {

void linear_forward(const Matrix& x, const Matrix& w, std::span<const double> b,
                    Matrix& y);
void linear_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw,
                            std::span<double> db);
void linear_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);
void column_moments(const Matrix& x, std::span<double> mean,
                    std::span<double> var);

}  // namespace reference

}  // namespace ned::kernels
