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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gen.hpp"
#include "json.hpp"
#include "ned/corpus.hpp"
#include "ned/error.hpp"
#include "ned/features.hpp"
#include "oracle.hpp"

using namespace ned;
using ned::testing::Gen;
namespace fs = std::filesystem;

namespace {

FrameMatrix random_frames(Gen& g, std::size_t rows, double scale = 1.0) {
  return {"s", 0, g.matrix(rows, kNumDescriptors, scale)};
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("functionals of [1,2,3,4,5]") {
  const std::vector<double> v{4, 2, 5, 1, 3};
  const auto f = column_functionals(v);
  CHECK(f[0] == 3.0);
  CHECK(f[1] == 3.0);
  CHECK(f[2] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(f[3] == doctest::Approx(1.04).epsilon(1e-12));
  CHECK(f[4] == doctest::Approx(4.96).epsilon(1e-12));
  CHECK(f[5] == doctest::Approx(3.92).epsilon(1e-12));
}

TEST_CASE("degenerate frames") {
  FrameMatrix one{"s", 0, Matrix(1, kNumDescriptors, 2.5)};
  const auto f = compute_functionals(one);
  REQUIRE(f.size() == kFunctionalDim);
  for (std::size_t c = 0; c < kNumDescriptors; ++c) {
    CHECK(f[6 * c + 0] == 2.5);
    CHECK(f[6 * c + 1] == 2.5);
    CHECK(f[6 * c + 2] == 0.0);
    CHECK(f[6 * c + 3] == 2.5);
    CHECK(f[6 * c + 4] == 2.5);
    CHECK(f[6 * c + 5] == 0.0);
  }
  Gen g(1);
  FrameMatrix a = random_frames(g, 1);
  FrameMatrix b{"s", 0, Matrix(2, kNumDescriptors)};
  for (std::size_t r = 0; r < 2; ++r)
    std::copy(a.frames.row(0).begin(), a.frames.row(0).end(), b.frames.row(r).begin());
  CHECK(compute_functionals(a) == compute_functionals(b));

  CHECK(kind_of([] { compute_functionals({"s", 0, Matrix(0, kNumDescriptors)}); }) ==
        ErrorKind::kEmptyFrames);
  CHECK(kind_of([] { compute_functionals({"s", 0, Matrix(3, 37)}); }) ==
        ErrorKind::kShapeMismatch);
}

TEST_CASE("functionals match the brute-force oracle") {
  Gen g(2);
  for (int i = 0; i < 200; ++i) {
    const FrameMatrix fm = random_frames(g, g.index(1, 120), g.uniform(0.1, 50.0));
    const auto got = compute_functionals(fm);
    const auto want = ned::testing::brute_functionals(fm.frames);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(std::abs(got[k] - want[k]) <= 1e-12);
  }
}

TEST_CASE("functionals are invariant under frame shuffling") {
  Gen g(3);
  for (int i = 0; i < 100; ++i) {
    FrameMatrix fm = random_frames(g, g.index(1, 60));
    const auto base = compute_functionals(fm);
    std::vector<std::size_t> perm(fm.frames.rows());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g.engine());
    FrameMatrix shuffled{"s", 0, Matrix(fm.frames.rows(), kNumDescriptors)};
    for (std::size_t r = 0; r < perm.size(); ++r) {
      auto src = fm.frames.row(perm[r]);
      std::copy(src.begin(), src.end(), shuffled.frames.row(r).begin());
    }
    CHECK(compute_functionals(shuffled) == base);
  }
}

TEST_CASE("functionals scale with a positive factor") {
  Gen g(4);
  for (int i = 0; i < 100; ++i) {
    FrameMatrix fm = random_frames(g, g.index(1, 60));
    const double a = g.uniform(0.01, 100.0);
    FrameMatrix scaled = fm;
    for (double& v : scaled.frames.flat()) v *= a;
    const auto base = compute_functionals(fm);
    const auto s = compute_functionals(scaled);
    for (std::size_t k = 0; k < base.size(); ++k)
      CHECK(s[k] == doctest::Approx(a * base[k]).epsilon(1e-9).scale(a));
  }
}

TEST_CASE("zscore fit examples") {
  const std::vector<std::vector<double>> v{{0, 10}, {2, 10}};
  const NormStats st = zscore_fit(v);
  CHECK(st.mean == std::vector<double>{1, 10});
  CHECK(st.std == std::vector<double>{1, 0});
  CHECK(st.constant == std::vector<bool>{false, true});
  CHECK(st.dimension() == 2);
  CHECK(zscore_apply(std::vector<double>{3, 10}, st) == std::vector<double>{2, 0});
  CHECK(zscore_apply(st.mean, st) == std::vector<double>{0, 0});

  const std::vector<std::vector<double>> same(5, {1.5, -2.0, 7.0});
  const NormStats flat = zscore_fit(same);
  CHECK(flat.std == std::vector<double>{0, 0, 0});
  CHECK(flat.constant == std::vector<bool>{true, true, true});

  CHECK(kind_of([] {
          const std::vector<std::vector<double>> bad{{1, 2}, {1}};
          zscore_fit(bad);
        }) == ErrorKind::kDimensionMismatch);
  CHECK(kind_of([] {
          const std::vector<std::vector<double>> single{{1, 2}};
          zscore_fit(single);
        }) == ErrorKind::kDimensionMismatch);
  CHECK(kind_of([&] { zscore_apply(std::vector<double>{1}, st); }) ==
        ErrorKind::kDimensionMismatch);
}

TEST_CASE("zscore fit then apply standardizes") {
  Gen g(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = g.index(2, 300), d = g.index(1, 20);
    std::vector<std::vector<double>> v(n);
    const double offset = g.normal(0, 100), scale = g.uniform(0.001, 1000);
    for (auto& x : v) {
      x = g.vec(d, scale);
      for (double& e : x) e += offset;
      x[0] = 4.0;  // one constant dimension
    }
    const NormStats st = zscore_fit(v);
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    std::vector<std::vector<double>> z;
    for (const auto& x : v) z.push_back(zscore_apply(x, st));
    for (const auto& x : z)
      for (std::size_t k = 0; k < d; ++k) mean[k] += x[k] / static_cast<double>(n);
    for (const auto& x : z)
      for (std::size_t k = 0; k < d; ++k)
        var[k] += (x[k] - mean[k]) * (x[k] - mean[k]) / static_cast<double>(n);
    CHECK(st.constant[0]);
    for (std::size_t k = 0; k < d; ++k) {
      CHECK(std::abs(mean[k]) < 1e-9);
      if (!st.constant[k]) CHECK(std::abs(std::sqrt(var[k]) - 1.0) < 1e-9);
    }
    for (const auto& x : v) {
      const auto back = zscore_apply(zscore_invert(zscore_apply(x, st), st), st);
      const auto once = zscore_apply(x, st);
      for (std::size_t k = 1; k < d; ++k) CHECK(std::abs(back[k] - once[k]) < 1e-12);
    }
  }
}

TEST_CASE("frames directory to session JSONL") {
  const fs::path dir = fs::temp_directory_path() / "ned_test_frames";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Gen g(6);
  std::vector<FrameMatrix> units;
  {
    std::ofstream idx(dir / "units.csv");
    idx << "session_id,speaker,unit_index,start_s,end_s,unit_kind,turn_index,"
           "frames_file\n";
    for (int u = 2; u >= 0; --u) {  // out of order on purpose
      idx << "sess," << (u % 2 ? "B" : "A") << ',' << u << ',' << u << ','
          << u + 0.8 << ",TURN," << u << ",u" << u << ".csv\n";
    }
    for (int u = 0; u < 3; ++u) {
      FrameMatrix fm = random_frames(g, 5 + u);
      std::ofstream f(dir / ("u" + std::to_string(u) + ".csv"));
      f.precision(17);
      for (std::size_t c = 0; c < kNumDescriptors; ++c)
        f << (c ? "," : "") << "lld" << c;
      f << '\n';
      for (std::size_t r = 0; r < fm.frames.rows(); ++r) {
        for (std::size_t c = 0; c < kNumDescriptors; ++c)
          f << (c ? "," : "") << fm.frames(r, c);
        f << '\n';
      }
      units.push_back(fm);
    }
  }
  CHECK(functionals_from_directory(dir, dir / "out" / "sess.jsonl") == 3);

  std::ifstream in(dir / "out" / "sess.jsonl");
  std::string line;
  int u = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["unit_index"] == u);
    CHECK(j["feature_set"] == "LLD228");
    const auto features = j["features"].get<std::vector<double>>();
    CHECK(features == compute_functionals(units[u]));
    ++u;
  }
  CHECK(u == 3);

  {
    std::ofstream bad(dir / "u1.csv");
    bad << "a,b,c\n1,2,3\n";
  }
  CHECK(kind_of([&] { functionals_from_directory(dir, dir / "x.jsonl"); }) ==
        ErrorKind::kSchemaViolation);
  fs::remove_all(dir);
}
