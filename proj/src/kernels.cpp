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

#include "ned/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#if defined(__AVX__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace ned::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

// C[i][j] = init[j] + sum_p A[i][p] * B[p][j], summed in ascending p with
// fma so every element matches the scalar reference bit for bit. A is read
// through strides so transposed operands need no copy; B and C are row-major.
struct Operand {
  const double* data;
  std::size_t row_stride, col_stride;
  double at(std::size_t i, std::size_t p) const {
    return data[i * row_stride + p * col_stride];
  }
};

constexpr std::size_t kRows = 4;
constexpr std::size_t kCols = 8;

template <std::size_t MR, std::size_t NR>
inline void micro_kernel(const Operand& a, std::size_t i0, const double* b,
                         std::size_t ldb, std::size_t j0, std::size_t depth,
                         const double* init, double* c, std::size_t ldc) {
  double acc[MR][NR];
  for (std::size_t k = 0; k < MR; ++k)
    for (std::size_t j = 0; j < NR; ++j) acc[k][j] = init ? init[j0 + j] : 0.0;
  for (std::size_t p = 0; p < depth; ++p) {
    const double* bp = b + p * ldb + j0;
    for (std::size_t k = 0; k < MR; ++k) {
      const double ak = a.at(i0 + k, p);
      for (std::size_t j = 0; j < NR; ++j)
        acc[k][j] = std::fma(ak, bp[j], acc[k][j]);
    }
  }
  for (std::size_t k = 0; k < MR; ++k)
    for (std::size_t j = 0; j < NR; ++j) c[(i0 + k) * ldc + j0 + j] = acc[k][j];
}

#if defined(__AVX__) && defined(__FMA__)
template <std::size_t MR>
inline void micro_kernel_simd(const Operand& a, std::size_t i0, const double* b,
                              std::size_t ldb, std::size_t j0,
                              std::size_t depth, const double* init, double* c,
                              std::size_t ldc) {
  __m256d lo[MR], hi[MR];
  const __m256d init_lo = init ? _mm256_loadu_pd(init + j0) : _mm256_setzero_pd();
  const __m256d init_hi =
      init ? _mm256_loadu_pd(init + j0 + 4) : _mm256_setzero_pd();
  for (std::size_t k = 0; k < MR; ++k) {
    lo[k] = init_lo;
    hi[k] = init_hi;
  }
  for (std::size_t p = 0; p < depth; ++p) {
    const double* bp = b + p * ldb + j0;
    const __m256d blo = _mm256_loadu_pd(bp);
    const __m256d bhi = _mm256_loadu_pd(bp + 4);
    for (std::size_t k = 0; k < MR; ++k) {
      const __m256d ak = _mm256_set1_pd(a.at(i0 + k, p));
      lo[k] = _mm256_fmadd_pd(ak, blo, lo[k]);
      hi[k] = _mm256_fmadd_pd(ak, bhi, hi[k]);
    }
  }
  for (std::size_t k = 0; k < MR; ++k) {
    _mm256_storeu_pd(c + (i0 + k) * ldc + j0, lo[k]);
    _mm256_storeu_pd(c + (i0 + k) * ldc + j0 + 4, hi[k]);
  }
}
#endif

template <std::size_t MR>
void row_block(const Operand& a, std::size_t i0, const double* b,
               std::size_t ldb, std::size_t j_begin, std::size_t j_end,
               std::size_t depth, const double* init, double* c,
               std::size_t ldc) {
  std::size_t j0 = j_begin;
  for (; j0 + kCols <= j_end; j0 += kCols)
#if defined(__AVX__) && defined(__FMA__)
    micro_kernel_simd<MR>(a, i0, b, ldb, j0, depth, init, c, ldc);
#else
    micro_kernel<MR, kCols>(a, i0, b, ldb, j0, depth, init, c, ldc);
#endif
  for (; j0 < j_end; ++j0)
    micro_kernel<MR, 1>(a, i0, b, ldb, j0, depth, init, c, ldc);
}

// Columns of B swept per pass, sized so a panel stays in L2 across rows.
std::size_t panel_width(std::size_t depth) {
  constexpr std::size_t kPanelBytes = 256 * 1024;
  const std::size_t w = kPanelBytes / (sizeof(double) * std::max<std::size_t>(depth, 1));
  return std::max(kCols, w / kCols * kCols);
}

void gemm(const Operand& a, std::size_t rows, const double* b, std::size_t cols,
          std::size_t depth, const double* init, double* c) {
  const auto blocks = static_cast<std::ptrdiff_t>((rows + kRows - 1) / kRows);
  const bool par = rows * cols * depth >= kParallelWork;
  const std::size_t panel = panel_width(depth);
  // Packed copy of the current panel; power-of-two row strides in B would
  // otherwise map the whole panel onto a few cache sets.
  thread_local std::vector<double> packed;
  for (std::size_t jb = 0; jb < cols; jb += panel) {
    const std::size_t je = std::min(cols, jb + panel), pw = je - jb;
    packed.resize(depth * pw);
    for (std::size_t p = 0; p < depth; ++p)
      std::copy(b + p * cols + jb, b + p * cols + je, packed.data() + p * pw);
    const double* pb = packed.data();
    const double* pinit = init ? init + jb : nullptr;
    double* pc = c + jb;
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
      const std::size_t i0 = static_cast<std::size_t>(blk) * kRows;
      switch (std::min(kRows, rows - i0)) {
        case 4: row_block<4>(a, i0, pb, pw, 0, pw, depth, pinit, pc, cols); break;
        case 3: row_block<3>(a, i0, pb, pw, 0, pw, depth, pinit, pc, cols); break;
        case 2: row_block<2>(a, i0, pb, pw, 0, pw, depth, pinit, pc, cols); break;
        default: row_block<1>(a, i0, pb, pw, 0, pw, depth, pinit, pc, cols); break;
      }
    }
  }
}

}  // namespace

void linear_forward(const Matrix& x, const Matrix& w, std::span<const double> b,
                    Matrix& y) {
  const std::size_t n = x.rows(), in = x.cols(), out = w.rows();
  assert(w.cols() == in && b.size() == out);
  if (y.rows() != n || y.cols() != out) y = Matrix(n, out);

  // Transposed copy so the micro-kernel streams contiguous weight rows.
  thread_local std::vector<double> wt;
  wt.resize(in * out);
  constexpr std::size_t kTile = 32;
  for (std::size_t o0 = 0; o0 < out; o0 += kTile)
    for (std::size_t i0 = 0; i0 < in; i0 += kTile)
      for (std::size_t o = o0; o < std::min(out, o0 + kTile); ++o)
        for (std::size_t i = i0; i < std::min(in, i0 + kTile); ++i)
          wt[i * out + o] = w(o, i);
  gemm({x.data(), in, 1}, n, wt.data(), out, in, b.data(), y.data());
}

void linear_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw,
                            std::span<double> db) {
  const std::size_t n = x.rows(), in = x.cols(), out = dy.cols();
  assert(dy.rows() == n && db.size() == out);
  if (dw.rows() != out || dw.cols() != in) dw = Matrix(out, in);
  for (std::size_t o = 0; o < out; ++o) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += dy(r, o);
    db[o] = s;
  }
  gemm({dy.data(), 1, out}, out, x.data(), in, n, nullptr, dw.data());
}

void linear_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
  const std::size_t n = dy.rows(), out = w.rows(), in = w.cols();
  assert(dy.cols() == out);
  if (dx.rows() != n || dx.cols() != in) dx = Matrix(n, in);
  gemm({dy.data(), out, 1}, n, w.data(), in, out, nullptr, dx.data());
}

void column_moments(const Matrix& x, std::span<double> mean,
                    std::span<double> var) {
  const std::size_t n = x.rows(), d = x.cols();
  assert(mean.size() == d && var.size() == d && n > 0);
  std::fill(mean.begin(), mean.end(), 0.0);
  std::fill(var.begin(), var.end(), 0.0);
  // Row-wise sweeps keep the access pattern contiguous; the per-column
  // accumulation order is the row order either way.
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.row(r).data();
    for (std::size_t c = 0; c < d; ++c) mean[c] += xr[c];
  }
  for (std::size_t c = 0; c < d; ++c) mean[c] /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.row(r).data();
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = xr[c] - mean[c];
      var[c] += dev * dev;
    }
  }
  for (std::size_t c = 0; c < d; ++c) var[c] /= static_cast<double>(n);
}

namespace reference {

void linear_forward(const Matrix& x, const Matrix& w, std::span<const double> b,
                    Matrix& y) {
  y = Matrix(x.rows(), w.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t o = 0; o < w.rows(); ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < x.cols(); ++i) s = std::fma(x(r, i), w(o, i), s);
      y(r, o) = s;
    }
}

void linear_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw,
                            std::span<double> db) {
  dw = Matrix(dy.cols(), x.cols());
  for (std::size_t o = 0; o < dy.cols(); ++o) {
    double bs = 0.0;
    for (std::size_t r = 0; r < dy.rows(); ++r) bs += dy(r, o);
    db[o] = bs;
    for (std::size_t i = 0; i < x.cols(); ++i) {
      double s = 0.0;
      for (std::size_t r = 0; r < dy.rows(); ++r) s = std::fma(dy(r, o), x(r, i), s);
      dw(o, i) = s;
    }
  }
}

void linear_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
  dx = Matrix(dy.rows(), w.cols());
  for (std::size_t r = 0; r < dy.rows(); ++r)
    for (std::size_t i = 0; i < w.cols(); ++i) {
      double s = 0.0;
      for (std::size_t o = 0; o < w.rows(); ++o) s = std::fma(dy(r, o), w(o, i), s);
      dx(r, i) = s;
    }
}

void column_moments(const Matrix& x, std::span<double> mean,
                    std::span<double> var) {
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, c);
    const double m = s / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r)
      ss += (x(r, c) - m) * (x(r, c) - m);
    mean[c] = m;
    var[c] = ss / n;
  }
}

}  // namespace reference

}  // namespace ned::kernels
