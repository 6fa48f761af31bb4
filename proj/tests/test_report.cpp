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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ned/error.hpp"
#include "ned/report.hpp"

using namespace ned;
namespace fs = std::filesystem;

namespace {

AccuracyReport make_report(double mean, double std) {
  AccuracyReport r;
  r.experiment_id = "exp3";
  r.preset = Preset::kTrillAuditory;
  r.baseline = Baseline::kTenRt;
  r.per_fold_accuracy = {mean - std, mean + std};
  r.mean = mean;
  r.std = std;
  r.folds = {{10, 8, 1, 2}, {12, 9, 0, 0}};
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("table cell format") {
  CHECK(format_cell(0.8414, 0.0003) == "84.14 (±0.03)");
  CHECK(format_cell(0.9414, 0.0012) == "94.14 (±0.12)");
  CHECK(format_cell(0.6755, 0.0) == "67.55 (±0.00)");
  CHECK(format_cell(1.0, 0.0) == "100.00 (±0.00)");
  CHECK(format_cell(0.5, 0.05) == "50.00 (±5.00)");
}

TEST_CASE("csv and markdown renderings") {
  const std::vector<AccuracyReport> rs{make_report(0.8414, 0.0003),
                                       make_report(0.5, 0.01)};
  const auto csv = lines(report_csv(rs));
  REQUIRE(csv.size() == rs.size() + 1);
  CHECK(csv[0] ==
        "experiment_id,preset,unit_kind,direction,baseline,k,mean,std,cell,"
        "fold_accuracies,evaluated,correct,ties,skipped");
  CHECK(csv[1] ==
        "exp3,TRILL_AUDITORY,TURN,ANY,TEN_RT,2,0.841400,0.000300,\"84.14 (±0.03)\","
        "0.841100;0.841700,22,17,1,2");
  const auto md = lines(report_markdown(rs));
  REQUIRE(md.size() == rs.size() + 2);
  CHECK(md[2].find("84.14 (±0.03)") != std::string::npos);
  const auto skips = lines(skips_csv(rs));
  CHECK(skips.size() == 1 + 2 * rs.size());
  CHECK(skips[1] == "exp3,TRILL_AUDITORY,TURN,ANY,TEN_RT,0,10,8,1,2");
}

TEST_CASE("emit_report writes three files") {
  const fs::path dir = fs::temp_directory_path() / "ned_test_report";
  fs::remove_all(dir);
  const std::vector<AccuracyReport> rs{make_report(0.7, 0.02)};
  emit_report(rs, dir);
  for (const char* f : {"report.csv", "report.md", "skips.csv"}) CHECK(fs::exists(dir / f));
  std::ifstream in(dir / "report.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == report_csv(rs));
  CHECK_THROWS_AS(emit_report(std::vector<AccuracyReport>{}, dir), Error);
  fs::remove_all(dir);
}
