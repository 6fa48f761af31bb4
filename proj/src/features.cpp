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

#include "ned/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ned/error.hpp"

namespace ned {

namespace fs = std::filesystem;

double sorted_percentile(std::span<const double> sorted, double q) {
  assert(!sorted.empty());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::array<double, kNumFunctionals> column_functionals(
    std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::kEmptyFrames, "no frames");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  // Summing the sorted copy makes the result independent of frame order.
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : s) ss += (v - mean) * (v - mean);
  const double p1 = sorted_percentile(s, 0.01);
  const double p99 = sorted_percentile(s, 0.99);
  return {mean, sorted_percentile(s, 0.5), std::sqrt(ss / n), p1, p99,
          p99 - p1};
}

std::vector<double> compute_functionals(const FrameMatrix& fm) {
  const Matrix& f = fm.frames;
  if (f.rows() == 0) fail(ErrorKind::kEmptyFrames, "frame matrix has no rows");
  if (f.cols() != kNumDescriptors)
    fail(ErrorKind::kShapeMismatch,
         "frame matrix has " + std::to_string(f.cols()) + " columns, expected " +
             std::to_string(kNumDescriptors));
  std::vector<double> out;
  out.reserve(kFunctionalDim);
  std::vector<double> col(f.rows());
  for (std::size_t c = 0; c < f.cols(); ++c) {
    for (std::size_t r = 0; r < f.rows(); ++r) col[r] = f(r, c);
    const auto fx = column_functionals(col);
    out.insert(out.end(), fx.begin(), fx.end());
  }
  return out;
}

NormStats zscore_fit(std::span<const std::vector<double>> vectors,
                     NormScope scope) {
  if (vectors.size() < 2)
    fail(ErrorKind::kDimensionMismatch, "zscore_fit needs at least 2 vectors");
  const std::size_t d = vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != d)
      fail(ErrorKind::kDimensionMismatch, "zscore_fit: vectors of differing length");

  NormStats st;
  st.scope = scope;
  st.mean.assign(d, 0.0);
  st.std.assign(d, 0.0);
  const double n = static_cast<double>(vectors.size());
  for (const auto& v : vectors)
    for (std::size_t i = 0; i < d; ++i) st.mean[i] += v[i];
  for (double& m : st.mean) m /= n;
  for (const auto& v : vectors)
    for (std::size_t i = 0; i < d; ++i) {
      const double dev = v[i] - st.mean[i];
      st.std[i] += dev * dev;
    }
  st.constant.assign(d, false);
  for (std::size_t i = 0; i < d; ++i) {
    st.std[i] = std::sqrt(st.std[i] / n);
    st.constant[i] = st.std[i] == 0.0;
  }
  return st;
}

void zscore_apply_inplace(std::span<double> v, const NormStats& stats) {
  if (v.size() != stats.dimension())
    fail(ErrorKind::kDimensionMismatch,
         "zscore_apply: vector has " + std::to_string(v.size()) +
             " dims, stats have " + std::to_string(stats.dimension()));
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = stats.constant[i] ? 0.0 : (v[i] - stats.mean[i]) / stats.std[i];
}

std::vector<double> zscore_apply(std::span<const double> v,
                                 const NormStats& stats) {
  std::vector<double> out(v.begin(), v.end());
  zscore_apply_inplace(out, stats);
  return out;
}

std::vector<double> zscore_invert(std::span<const double> z,
                                  const NormStats& stats) {
  if (z.size() != stats.dimension())
    fail(ErrorKind::kDimensionMismatch, "zscore_invert: dimension mismatch");
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    out[i] = stats.constant[i] ? stats.mean[i]
                               : z[i] * stats.std[i] + stats.mean[i];
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, const fs::path& file,
                    std::size_t line) {
  const std::string t = trim(field);
  double v = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || !std::isfinite(v))
    fail(ErrorKind::kSchemaViolation, file.string() + ":" +
                                          std::to_string(line) +
                                          ": bad number '" + t + "'");
  return v;
}

std::int64_t parse_int(const std::string& field, const fs::path& file,
                       std::size_t line) {
  const std::string t = trim(field);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || v < 0)
    fail(ErrorKind::kSchemaViolation, file.string() + ":" +
                                          std::to_string(line) +
                                          ": bad integer '" + t + "'");
  return v;
}

}  // namespace

Matrix read_frame_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::kMissingFile, "cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorKind::kEmptyFrames, file.string() + ": empty file");
  if (split_csv(line).size() != kNumDescriptors)
    fail(ErrorKind::kSchemaViolation,
         file.string() + ":1: header must name " +
             std::to_string(kNumDescriptors) + " descriptors");
  std::vector<double> values;
  std::size_t rows = 0, ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != kNumDescriptors)
      fail(ErrorKind::kSchemaViolation,
           file.string() + ":" + std::to_string(ln) + ": expected " +
               std::to_string(kNumDescriptors) + " columns");
    for (const auto& f : fields) values.push_back(parse_double(f, file, ln));
    ++rows;
  }
  if (rows == 0) fail(ErrorKind::kEmptyFrames, file.string() + ": no frames");
  Matrix m(rows, kNumDescriptors);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

std::size_t functionals_from_directory(const fs::path& frames_dir,
                                       const fs::path& out_jsonl) {
  const fs::path index = frames_dir / "units.csv";
  std::ifstream in(index);
  if (!in) fail(ErrorKind::kMissingFile, "cannot open " + index.string());
  std::string line;
  std::getline(in, line);
  const std::vector<std::string> expected{
      "session_id", "speaker",    "unit_index", "start_s",
      "end_s",      "unit_kind",  "turn_index", "frames_file"};
  auto header = split_csv(line);
  for (auto& h : header) h = trim(h);
  if (header != expected)
    fail(ErrorKind::kSchemaViolation,
         index.string() + ":1: header must be session_id,speaker,unit_index,"
                          "start_s,end_s,unit_kind,turn_index,frames_file");

  Session session;
  std::size_t ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != expected.size())
      fail(ErrorKind::kSchemaViolation,
           index.string() + ":" + std::to_string(ln) + ": expected 8 columns");
    UnitRecord u;
    u.session_id = trim(f[0]);
    u.speaker = trim(f[1]);
    u.unit_index = parse_int(f[2], index, ln);
    u.start_s = parse_double(f[3], index, ln);
    u.end_s = parse_double(f[4], index, ln);
    auto kind = parse_unit_kind(trim(f[5]));
    if (!kind)
      fail(ErrorKind::kSchemaViolation,
           index.string() + ":" + std::to_string(ln) + ": bad unit_kind");
    u.unit_kind = *kind;
    u.turn_index = parse_int(f[6], index, ln);
    u.feature_set = FeatureSet::kLld228;
    if (session.session_id.empty()) session.session_id = u.session_id;
    if (u.session_id != session.session_id)
      fail(ErrorKind::kSchemaViolation,
           index.string() + ":" + std::to_string(ln) +
               ": one frames directory must describe a single session");
    FrameMatrix fm{u.session_id, u.unit_index,
                   read_frame_csv(frames_dir / trim(f[7]))};
    u.features = compute_functionals(fm);
    session.units.push_back(std::move(u));
  }
  if (session.units.empty())
    fail(ErrorKind::kEmptyResult, index.string() + ": no units listed");
  std::stable_sort(session.units.begin(), session.units.end(),
                   [](const UnitRecord& a, const UnitRecord& b) {
                     return a.unit_index < b.unit_index;
                   });
  if (out_jsonl.has_parent_path()) fs::create_directories(out_jsonl.parent_path());
  write_session_jsonl(session, out_jsonl);
  return session.units.size();
}

}  // namespace ned
