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

// Per-unit statistical functionals over frame-level low-level descriptors,
// and z-score normalization of unit feature vectors.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ned/corpus.hpp"
#include "ned/matrix.hpp"

namespace ned {

inline constexpr std::size_t kNumDescriptors = 38;
inline constexpr std::size_t kNumFunctionals = 6;
inline constexpr std::size_t kFunctionalDim = kNumDescriptors * kNumFunctionals;

// Frame-level descriptors of one unit: one row per frame, 38 columns
// (4 prosodic, 31 spectral, 3 voice-quality).
struct FrameMatrix {
  std::string session_id;
  std::int64_t unit_index = 0;
  Matrix frames;
};

// Percentile of an ascending-sorted sample, linear interpolation at
// rank q*(n-1).
double sorted_percentile(std::span<const double> sorted, double q);

// Six functionals of one column, in output order:
// mean, median, population std, p1, p99, range (p99 - p1).
std::array<double, kNumFunctionals> column_functionals(
    std::span<const double> values);

// [f1..f6 of column 0, f1..f6 of column 1, ...]; 228 values for 38 columns.
std::vector<double> compute_functionals(const FrameMatrix& frames);

enum class NormScope { kSession, kCorpus };

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  // True where std == 0; those dimensions normalize to 0.
  std::vector<bool> constant;
  NormScope scope = NormScope::kCorpus;

  std::size_t dimension() const { return mean.size(); }
};

NormStats zscore_fit(std::span<const std::vector<double>> vectors,
                     NormScope scope = NormScope::kCorpus);
std::vector<double> zscore_apply(std::span<const double> v,
                                 const NormStats& stats);
void zscore_apply_inplace(std::span<double> v, const NormStats& stats);
// Inverse map for non-constant dimensions; constant ones return the mean.
std::vector<double> zscore_invert(std::span<const double> z,
                                  const NormStats& stats);

// Reads one frame CSV: a header row naming 38 descriptors, then one row of
// 38 numbers per frame.
Matrix read_frame_csv(const std::filesystem::path& file);

// Converts a directory of frame CSVs into a session JSONL file. The
// directory holds `units.csv` with columns
//   session_id,speaker,unit_index,start_s,end_s,unit_kind,turn_index,frames_file
// and the frame CSVs it references. Returns the number of units written.
std::size_t functionals_from_directory(const std::filesystem::path& frames_dir,
                                       const std::filesystem::path& out_jsonl);

}  // namespace ned
