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

#include "ned/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <set>

#include <omp.h>

#include "ned/error.hpp"
#include "ned/seed.hpp"

namespace ned {

std::string_view to_string(Baseline b) {
  return b == Baseline::kOneRt ? "ONE_RT" : "TEN_RT";
}

std::size_t baseline_count(Baseline b) { return b == Baseline::kOneRt ? 1 : 10; }

FoldPlan kfold_split(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::kTooFewSessions, "k must be at least 2");
  const std::size_t n = corpus.sessions.size();
  if (n < k)
    fail(ErrorKind::kTooFewSessions,
         std::to_string(n) + " sessions cannot fill " + std::to_string(k) +
             " folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, {0x666f6c64}));
  std::shuffle(order.begin(), order.end(), rng);

  FoldPlan plan;
  plan.k = k;
  plan.folds.resize(k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t fold = i % k;
    plan.folds[fold].push_back(order[i]);
    plan.assignments[corpus.sessions[order[i]].session_id] = fold;
  }
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

FoldOutcome evaluate_fold(const TrainedModel& model,
                          std::span<const Session* const> test_sessions,
                          const EvalOptions& options, std::uint64_t seed) {
  FoldOutcome out;
  const std::size_t count = baseline_count(options.baseline);
  const NedMetric metric = model.config.ned_metric;
  const Polarity polarity = model.config.closeness_polarity;

  for (std::size_t si = 0; si < test_sessions.size(); ++si) {
    const Session& s = *test_sessions[si];
    PairSet pairs;
    try {
      pairs = build_consecutive_pairs(s, options.unit_kind, options.direction);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEmptyResult) throw;
      continue;
    }
    if (pairs.pairs.empty()) continue;

    // Embed every unit of the session once.
    Matrix x(s.units.size(), s.dimension());
    for (std::size_t u = 0; u < s.units.size(); ++u) {
      std::copy(s.units[u].features.begin(), s.units[u].features.end(),
                x.row(u).begin());
      if (model.norm) zscore_apply_inplace(x.row(u), *model.norm);
    }
    const Matrix z = encode_normalized(model, x);

    for (std::size_t pi = 0; pi < pairs.pairs.size(); ++pi) {
      const auto [anchor, partner] = pairs.pairs[pi];
      std::vector<std::size_t> others;
      try {
        others = sample_nonconsecutive(s, anchor, partner, count,
                                       derive_seed(seed, {si, pi}));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInsufficientUnits) throw;
        ++out.skipped;
        continue;
      }
      ++out.evaluated;
      try {
        const double consecutive = ned(metric, z.row(anchor), z.row(partner));
        double baseline = 0.0;
        for (std::size_t o : others) baseline += ned(metric, z.row(anchor), z.row(o));
        baseline /= static_cast<double>(others.size());
        if (consecutive == baseline)
          ++out.ties;
        else if (is_closer(polarity, consecutive, baseline))
          ++out.correct;
      } catch (const Error& e) {
        // A zero embedding has no direction; treat the case as a tie.
        if (e.kind() != ErrorKind::kZeroVector) throw;
        ++out.ties;
      }
    }
  }
  return out;
}

void summarize(AccuracyReport& r) {
  const double k = static_cast<double>(r.per_fold_accuracy.size());
  if (r.per_fold_accuracy.empty()) {
    r.mean = r.std = 0.0;
    return;
  }
  r.mean = std::accumulate(r.per_fold_accuracy.begin(),
                           r.per_fold_accuracy.end(), 0.0) / k;
  double ss = 0.0;
  for (double a : r.per_fold_accuracy) ss += (a - r.mean) * (a - r.mean);
  r.std = std::sqrt(ss / k);
}

namespace {

std::vector<std::vector<double>> unit_features(const Session& s, UnitKind kind) {
  std::vector<std::vector<double>> out;
  for (const auto& u : s.units)
    if (u.unit_kind == kind) out.push_back(u.features);
  return out;
}

struct FoldResult {
  std::vector<FoldOutcome> per_baseline;
};

FoldResult run_fold(const Corpus& corpus, const FoldPlan& plan,
                    std::size_t fold, const CrossValidationOptions& opt) {
  const std::uint64_t fold_seed = derive_seed(opt.seed, {fold});
  const std::set<std::size_t> held_out(plan.folds[fold].begin(),
                                       plan.folds[fold].end());

  std::vector<std::vector<double>> train_units;
  std::vector<const Session*> train, test;
  for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
    const Session& s = corpus.sessions[i];
    if (held_out.count(i)) {
      test.push_back(&s);
    } else {
      train.push_back(&s);
      auto f = unit_features(s, opt.unit_kind);
      train_units.insert(train_units.end(), std::make_move_iterator(f.begin()),
                         std::make_move_iterator(f.end()));
    }
  }
  const NormStats stats = zscore_fit(train_units, NormScope::kCorpus);

  std::vector<PairMatrices> parts;
  for (const Session* s : train) {
    try {
      const PairSet ps = build_consecutive_pairs(*s, opt.unit_kind, opt.direction);
      parts.push_back(pair_matrices(*s, ps, &stats));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEmptyResult) throw;
    }
  }
  const PairMatrices pairs = concat(parts);
  if (pairs.size() == 0)
    fail(ErrorKind::kEmptyPairSet,
         "fold " + std::to_string(fold) + " has no training pairs");

  TrainedModel model = train_model(opt.config, pairs, derive_seed(fold_seed, {1}));
  model.norm = stats;

  FoldResult r;
  for (Baseline b : opt.baselines)
    r.per_baseline.push_back(evaluate_fold(
        model, test, {opt.unit_kind, opt.direction, b},
        derive_seed(fold_seed, {2})));
  return r;
}

void check_compatible(const Corpus& corpus, const ModelConfig& config) {
  if (corpus.sessions.empty())
    fail(ErrorKind::kTooFewSessions, "corpus has no sessions");
  if (corpus.dimension() != config.spec.input_width())
    fail(ErrorKind::kDimensionMismatch,
         "corpus features have " + std::to_string(corpus.dimension()) +
             " dims, model expects " +
             std::to_string(config.spec.input_width()));
}

}  // namespace

ModelConfig preset_config(Preset preset, const Corpus& corpus, int epochs) {
  static const std::map<Preset, FeatureSet> family{
      {Preset::kLldAuditory, FeatureSet::kLld228},
      {Preset::kTrillAuditory, FeatureSet::kTrill512},
      {Preset::kSentSemantic, FeatureSet::kSent768},
      {Preset::kUseSemantic, FeatureSet::kUse512}};
  if (corpus.feature_set != FeatureSet::kSynth &&
      corpus.feature_set != family.at(preset))
    fail(ErrorKind::kDimensionMismatch,
         std::string(to_string(preset)) + " needs " +
             std::string(to_string(family.at(preset))) + " features, corpus has " +
             std::string(to_string(corpus.feature_set)));
  ModelConfig c = make_config(preset, corpus.dimension());
  if (epochs > 0) c.epochs = epochs;
  return c;
}

std::vector<AccuracyReport> cross_validate(const Corpus& corpus,
                                           const CrossValidationOptions& opt) {
  check_compatible(corpus, opt.config);
  if (opt.baselines.empty())
    fail(ErrorKind::kInvalidSpec, "no baselines requested");
  const FoldPlan plan = kfold_split(corpus, opt.k, opt.seed);

  std::vector<FoldResult> results(opt.k);
  std::vector<std::exception_ptr> errors(opt.k);
  const int jobs = opt.jobs > 0 ? opt.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
  for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(opt.k); ++f) {
    try {
      results[f] = run_fold(corpus, plan, static_cast<std::size_t>(f), opt);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<AccuracyReport> reports;
  for (std::size_t b = 0; b < opt.baselines.size(); ++b) {
    AccuracyReport r;
    r.experiment_id = opt.experiment_id;
    r.preset = opt.config.preset;
    r.unit_kind = opt.unit_kind;
    r.direction = opt.direction;
    r.baseline = opt.baselines[b];
    for (const auto& fr : results) {
      r.folds.push_back(fr.per_baseline[b]);
      r.per_fold_accuracy.push_back(fr.per_baseline[b].accuracy());
    }
    summarize(r);
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<AccuracyReport> run_experiment_1(const Corpus& corpus_ipu,
                                             const Corpus& corpus_turn,
                                             const ExperimentOptions& options) {
  if (corpus_ipu.unit_kind != UnitKind::kIpu ||
      corpus_turn.unit_kind != UnitKind::kTurn)
    fail(ErrorKind::kSchemaViolation,
         "experiment 1 needs an IPU corpus and a TURN corpus");
  if (corpus_ipu.feature_set != corpus_turn.feature_set ||
      (corpus_turn.feature_set != FeatureSet::kLld228 &&
       corpus_turn.feature_set != FeatureSet::kSynth))
    fail(ErrorKind::kSchemaViolation,
         "experiment 1 needs LLD228 (or SYNTH) features in both corpora");
  std::set<std::string> a, b;
  for (const auto& s : corpus_ipu.sessions) a.insert(s.session_id);
  for (const auto& s : corpus_turn.sessions) b.insert(s.session_id);
  if (a != b)
    fail(ErrorKind::kSchemaViolation,
         "IPU and turn corpora must cover the same sessions");

  std::vector<AccuracyReport> out;
  for (const Corpus* c : {&corpus_ipu, &corpus_turn}) {
    CrossValidationOptions cv;
    cv.experiment_id = "exp1";
    cv.config = preset_config(Preset::kLldAuditory, *c, options.epochs);
    cv.unit_kind = c->unit_kind;
    cv.k = options.k;
    cv.seed = options.seed;
    cv.jobs = options.jobs;
    auto r = cross_validate(*c, cv);
    out.push_back(std::move(r.front()));
  }
  return out;
}

std::vector<AccuracyReport> run_experiment_2(const Corpus& corpus,
                                             const ExperimentOptions& options) {
  std::vector<AccuracyReport> out;
  for (Direction d : {Direction::kAToB, Direction::kBToA}) {
    CrossValidationOptions cv;
    cv.experiment_id = "exp2";
    cv.config = preset_config(Preset::kLldAuditory, corpus, options.epochs);
    cv.unit_kind = corpus.unit_kind;
    cv.direction = d;
    cv.k = options.k;
    cv.seed = options.seed;
    cv.jobs = options.jobs;
    auto r = cross_validate(corpus, cv);
    out.push_back(std::move(r.front()));
  }
  return out;
}

std::vector<AccuracyReport> run_experiment_3(const Corpus& corpus,
                                             std::span<const Preset> presets,
                                             const ExperimentOptions& options) {
  if (presets.empty()) fail(ErrorKind::kInvalidSpec, "no presets requested");
  std::vector<AccuracyReport> out;
  for (Preset p : presets) {
    CrossValidationOptions cv;
    cv.experiment_id = "exp3";
    cv.config = preset_config(p, corpus, options.epochs);
    cv.unit_kind = corpus.unit_kind;
    cv.baselines = {Baseline::kOneRt, Baseline::kTenRt};
    cv.k = options.k;
    cv.seed = options.seed;
    cv.jobs = options.jobs;
    for (auto& r : cross_validate(corpus, cv)) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ned
