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

// Session-grouped k-fold evaluation of entrainment models: consecutive NED
// against non-consecutive baselines, and the three experiment drivers.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ned/corpus.hpp"
#include "ned/entrainment.hpp"

namespace ned {

struct FoldPlan {
  std::size_t k = 10;
  std::map<std::string, std::size_t> assignments;  // session_id -> fold
  std::vector<std::vector<std::size_t>> folds;     // fold -> session indices
};

// Seeded session-level partition; fold sizes differ by at most one.
FoldPlan kfold_split(const Corpus& corpus, std::size_t k, std::uint64_t seed);

// Non-consecutive baseline: one random turn, or the mean NED over ten.
enum class Baseline { kOneRt, kTenRt };
std::string_view to_string(Baseline b);
std::size_t baseline_count(Baseline b);

struct FoldOutcome {
  std::size_t evaluated = 0;  // pairs compared
  std::size_t correct = 0;
  std::size_t ties = 0;     // counted as incorrect
  std::size_t skipped = 0;  // not enough non-consecutive candidates
  double accuracy() const {
    return evaluated == 0 ? 0.0
                          : static_cast<double>(correct) /
                                static_cast<double>(evaluated);
  }
};

struct EvalOptions {
  UnitKind unit_kind = UnitKind::kTurn;
  Direction direction = Direction::kAny;
  Baseline baseline = Baseline::kOneRt;
};

// Scores every consecutive pair of the test sessions against a sampled
// non-consecutive baseline from the partner's speaker.
FoldOutcome evaluate_fold(const TrainedModel& model,
                          std::span<const Session* const> test_sessions,
                          const EvalOptions& options, std::uint64_t seed);

struct AccuracyReport {
  std::string experiment_id;
  Preset preset = Preset::kLldAuditory;
  UnitKind unit_kind = UnitKind::kTurn;
  Direction direction = Direction::kAny;
  Baseline baseline = Baseline::kOneRt;
  std::vector<double> per_fold_accuracy;
  double mean = 0.0;
  double std = 0.0;  // population std over folds
  std::vector<FoldOutcome> folds;
};

// Fills mean and std from per_fold_accuracy.
void summarize(AccuracyReport& report);

struct CrossValidationOptions {
  std::string experiment_id = "cv";
  ModelConfig config;
  UnitKind unit_kind = UnitKind::kTurn;
  Direction direction = Direction::kAny;
  std::vector<Baseline> baselines{Baseline::kOneRt};
  std::size_t k = 10;
  std::uint64_t seed = 0;
  // Parallel fold jobs; 0 means the OpenMP default.
  int jobs = 0;
};

// Trains one model per fold on the other k-1 folds (features z-scored with
// statistics of the training folds) and evaluates it on the held-out fold.
// Returns one report per requested baseline.
std::vector<AccuracyReport> cross_validate(const Corpus& corpus,
                                           const CrossValidationOptions& options);

struct ExperimentOptions {
  std::uint64_t seed = 0;
  std::size_t k = 10;
  int jobs = 0;
  // Zero keeps the preset default.
  int epochs = 0;
};

// Preset configuration sized to the corpus features. Real feature families
// must match the preset (LLD228 for LLD_AUDITORY, ...); SYNTH fits any.
// `epochs` > 0 overrides the preset default.
ModelConfig preset_config(Preset preset, const Corpus& corpus, int epochs = 0);

// IPU vs turn with the LLD auditory preset: {IPU report, turn report}.
std::vector<AccuracyReport> run_experiment_1(const Corpus& corpus_ipu,
                                             const Corpus& corpus_turn,
                                             const ExperimentOptions& options);

// Direction split with the LLD auditory preset: {A_TO_B, B_TO_A}.
std::vector<AccuracyReport> run_experiment_2(const Corpus& corpus,
                                             const ExperimentOptions& options);

// Every preset against one and ten random non-consecutive turns.
std::vector<AccuracyReport> run_experiment_3(const Corpus& corpus,
                                             std::span<const Preset> presets,
                                             const ExperimentOptions& options);

}  // namespace ned
