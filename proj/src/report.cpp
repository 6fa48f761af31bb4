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

#include "ned/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ned/error.hpp"

namespace ned {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string format_cell(double mean, double std) {
  return fixed(mean * 100.0, 2) + " (±" + fixed(std * 100.0, 2) + ")";
}

std::string report_csv(std::span<const AccuracyReport> reports) {
  std::ostringstream os;
  os << "experiment_id,preset,unit_kind,direction,baseline,k,mean,std,cell,"
        "fold_accuracies,evaluated,correct,ties,skipped\n";
  for (const auto& r : reports) {
    std::size_t ev = 0, co = 0, ti = 0, sk = 0;
    for (const auto& f : r.folds) {
      ev += f.evaluated;
      co += f.correct;
      ti += f.ties;
      sk += f.skipped;
    }
    std::string folds;
    for (std::size_t i = 0; i < r.per_fold_accuracy.size(); ++i) {
      if (i) folds += ';';
      folds += fixed(r.per_fold_accuracy[i], 6);
    }
    os << r.experiment_id << ',' << to_string(r.preset) << ','
       << to_string(r.unit_kind) << ',' << to_string(r.direction) << ','
       << to_string(r.baseline) << ',' << r.per_fold_accuracy.size() << ','
       << fixed(r.mean, 6) << ',' << fixed(r.std, 6) << ",\""
       << format_cell(r.mean, r.std) << "\"," << folds << ',' << ev << ','
       << co << ',' << ti << ',' << sk << '\n';
  }
  return os.str();
}

std::string report_markdown(std::span<const AccuracyReport> reports) {
  std::ostringstream os;
  os << "| Experiment | Preset | Unit | Direction | Baseline | Accuracy |\n"
     << "|---|---|---|---|---|---|\n";
  for (const auto& r : reports)
    os << "| " << r.experiment_id << " | " << to_string(r.preset) << " | "
       << to_string(r.unit_kind) << " | " << to_string(r.direction) << " | "
       << to_string(r.baseline) << " | " << format_cell(r.mean, r.std)
       << " |\n";
  return os.str();
}

std::string skips_csv(std::span<const AccuracyReport> reports) {
  std::ostringstream os;
  os << "experiment_id,preset,unit_kind,direction,baseline,fold,evaluated,"
        "correct,ties,skipped\n";
  for (const auto& r : reports)
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
      const auto& o = r.folds[f];
      os << r.experiment_id << ',' << to_string(r.preset) << ','
         << to_string(r.unit_kind) << ',' << to_string(r.direction) << ','
         << to_string(r.baseline) << ',' << f << ',' << o.evaluated << ','
         << o.correct << ',' << o.ties << ',' << o.skipped << '\n';
    }
  return os.str();
}

void emit_report(std::span<const AccuracyReport> reports,
                 const std::filesystem::path& dir) {
  if (reports.empty()) fail(ErrorKind::kInvalidSpec, "no reports to emit");
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) fail(ErrorKind::kIo, "cannot write " + (dir / name).string());
    out << text;
  };
  write("report.csv", report_csv(reports));
  write("report.md", report_markdown(reports));
  write("skips.csv", skips_csv(reports));
}

}  // namespace ned
