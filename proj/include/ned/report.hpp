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

#include <filesystem>
#include <span>
#include <string>

#include "ned/experiments.hpp"

namespace ned {

// "84.14 (±0.03)": mean and std scaled to percent, two decimals.
std::string format_cell(double mean, double std);

std::string report_csv(std::span<const AccuracyReport> reports);
std::string report_markdown(std::span<const AccuracyReport> reports);
std::string skips_csv(std::span<const AccuracyReport> reports);

// Writes report.csv, report.md and skips.csv into `dir`.
void emit_report(std::span<const AccuracyReport> reports,
                 const std::filesystem::path& dir);

}  // namespace ned
