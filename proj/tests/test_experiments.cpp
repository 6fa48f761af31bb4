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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "gen.hpp"
#include "ned/error.hpp"
#include "ned/experiments.hpp"
#include "ned/synthgen.hpp"

using namespace ned;
using ned::testing::Gen;

namespace {

Corpus sessions_only(std::size_t n) {
  Corpus c;
  for (std::size_t i = 0; i < n; ++i) {
    Session s;
    s.session_id = "s" + std::to_string(i);
    c.sessions.push_back(s);
  }
  return c;
}

GenSpec small_synth(double rho, std::uint64_t seed) {
  GenSpec s;
  s.num_sessions = 20;
  s.turns_per_session = 24;
  s.dim = 16;
  s.coupling = rho;
  s.seed = seed;
  return s;
}

ExperimentOptions opts(std::uint64_t seed, int epochs = 5) {
  ExperimentOptions o;
  o.seed = seed;
  o.k = 10;
  o.epochs = epochs;
  return o;
}

}  // namespace

TEST_CASE("fold plans") {
  const FoldPlan ten = kfold_split(sessions_only(10), 10, 1);
  for (const auto& f : ten.folds) CHECK(f.size() == 1);

  const FoldPlan p = kfold_split(sessions_only(23), 10, 2);
  std::vector<std::size_t> sizes;
  for (const auto& f : p.folds) sizes.push_back(f.size());
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  CHECK(sizes == std::vector<std::size_t>{3, 3, 3, 2, 2, 2, 2, 2, 2, 2});

  try {
    kfold_split(sessions_only(5), 10, 1);
    FAIL("expected TooFewSessions");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTooFewSessions);
  }

  Gen g(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = g.index(2, 12);
    const Corpus c = sessions_only(g.index(k, 60));
    const std::uint64_t seed = g.index(0, 1u << 30);
    const FoldPlan plan = kfold_split(c, k, seed);
    std::multiset<std::size_t> seen;
    std::size_t lo = c.sessions.size(), hi = 0;
    for (std::size_t f = 0; f < k; ++f) {
      lo = std::min(lo, plan.folds[f].size());
      hi = std::max(hi, plan.folds[f].size());
      for (std::size_t i : plan.folds[f]) {
        seen.insert(i);
        CHECK(plan.assignments.at(c.sessions[i].session_id) == f);
      }
    }
    CHECK(hi - lo <= 1);
    CHECK(seen.size() == c.sessions.size());
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == c.sessions.size());
    CHECK(plan.assignments == kfold_split(c, k, seed).assignments);
  }
}

TEST_CASE("constant encoder ties everything") {
  const Corpus c = generate_corpus(small_synth(0.5, 1));
  const std::vector<const Session*> test{&c.sessions[0], &c.sessions[1]};
  for (Preset p : {Preset::kLldAuditory, Preset::kTrillAuditory}) {
    TrainedModel m;
    m.config = make_config(p, 16);
    m.params = nn::init_params(m.config.spec, 1);
    for (auto t : m.params.trainable()) std::fill(t.begin(), t.end(), 0.0);
    for (Baseline b : {Baseline::kOneRt, Baseline::kTenRt}) {
      const FoldOutcome o = evaluate_fold(m, test, {UnitKind::kTurn, Direction::kAny, b}, 5);
      CHECK(o.evaluated > 0);
      CHECK(o.correct == 0);
      CHECK(o.ties == o.evaluated);
      CHECK(o.accuracy() == 0.0);
    }
  }
}

TEST_CASE("exact copies are always closer") {
  // B turns copy the preceding A turn; A turns are fresh draws.
  Gen g(4);
  std::vector<Session> sessions;
  for (int s = 0; s < 4; ++s) {
    std::vector<std::vector<double>> f;
    for (int t = 0; t < 24; ++t) f.push_back(t % 2 ? f.back() : g.vec(16));
    sessions.push_back(ned::testing::alternating_session(f, "copy" + std::to_string(s)));
  }
  std::vector<PairMatrices> parts;
  for (const auto& s : sessions)
    parts.push_back(pair_matrices(s, build_consecutive_pairs(s, UnitKind::kTurn,
                                                             Direction::kAToB)));
  ModelConfig cfg = make_config(Preset::kLldAuditory, 16);
  const TrainedModel m = train_model(cfg, concat(parts), 6);
  std::vector<const Session*> test;
  for (const auto& s : sessions) test.push_back(&s);
  for (Baseline b : {Baseline::kOneRt, Baseline::kTenRt}) {
    const FoldOutcome o =
        evaluate_fold(m, test, {UnitKind::kTurn, Direction::kAToB, b}, 7);
    CHECK(o.evaluated == 4 * 12);
    CHECK(o.accuracy() == 1.0);
  }
}

TEST_CASE("skipped pairs are tallied") {
  const Session s = ned::testing::alternating_session(
      {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {2.0, 0.5}, {0.3, 0.1}, {0.7, 2.0}});
  TrainedModel m;
  m.config = make_config(Preset::kLldAuditory, 2);
  m.params = nn::init_params(m.config.spec, 3);
  const std::vector<const Session*> test{&s};
  const FoldOutcome ten =
      evaluate_fold(m, test, {UnitKind::kTurn, Direction::kAny, Baseline::kTenRt}, 1);
  CHECK(ten.evaluated == 0);
  CHECK(ten.skipped == 5);
  const FoldOutcome one =
      evaluate_fold(m, test, {UnitKind::kTurn, Direction::kAny, Baseline::kOneRt}, 1);
  CHECK(one.evaluated + one.skipped == 5);
  CHECK(one.evaluated > 0);
}

TEST_CASE("summaries recompute from fold accuracies") {
  AccuracyReport r;
  r.per_fold_accuracy = {0.5, 0.75, 1.0, 0.25};
  summarize(r);
  CHECK(r.mean == 0.625);
  CHECK(std::abs(r.std - std::sqrt(0.078125)) < 1e-12);
}

TEST_CASE("cross validation is deterministic and thread-count independent") {
  const Corpus c = generate_corpus(small_synth(0.8, 2));
  CrossValidationOptions cv;
  cv.config = preset_config(Preset::kTrillAuditory, c, 3);
  cv.baselines = {Baseline::kOneRt, Baseline::kTenRt};
  cv.seed = 11;
  cv.jobs = 1;
  const auto a = cross_validate(c, cv);
  cv.jobs = 4;
  const auto b = cross_validate(c, cv);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].per_fold_accuracy == b[i].per_fold_accuracy);
    CHECK(a[i].per_fold_accuracy.size() == 10);
    for (double v : a[i].per_fold_accuracy) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    AccuracyReport copy = a[i];
    summarize(copy);
    CHECK(std::abs(copy.mean - a[i].mean) <= 1e-12);
    CHECK(std::abs(copy.std - a[i].std) <= 1e-12);
  }
}

TEST_CASE("experiment 1 on identical IPU and turn data") {
  GenSpec t = small_synth(0.8, 3);
  GenSpec i = t;
  i.ipus_per_turn = 1;
  const Corpus turns = generate_corpus(t);
  const Corpus ipus = generate_corpus(i);
  const auto r = run_experiment_1(ipus, turns, opts(5, 3));
  REQUIRE(r.size() == 2);
  CHECK(r[0].unit_kind == UnitKind::kIpu);
  CHECK(r[1].unit_kind == UnitKind::kTurn);
  CHECK(r[0].mean == r[1].mean);
  CHECK(r[0].per_fold_accuracy == r[1].per_fold_accuracy);
  CHECK_THROWS_AS(run_experiment_1(turns, turns, opts(5)), Error);
}

TEST_CASE("experiment 2 on symmetric coupling") {
  double gap = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Corpus c = generate_corpus(small_synth(0.8, 100 + seed));
    const auto r = run_experiment_2(c, opts(seed));
    REQUIRE(r.size() == 2);
    CHECK(r[0].direction == Direction::kAToB);
    CHECK(r[1].direction == Direction::kBToA);
    gap += (r[0].mean - r[1].mean) / 10.0;
  }
  CHECK(std::abs(gap) < 0.05);
}

TEST_CASE("experiment 3 grid and preset checks") {
  const Corpus c = generate_corpus(small_synth(0.8, 4));
  const std::vector<Preset> presets{Preset::kLldAuditory, Preset::kUseSemantic};
  const auto r = run_experiment_3(c, presets, opts(1, 2));
  REQUIRE(r.size() == 4);
  CHECK(r[0].baseline == Baseline::kOneRt);
  CHECK(r[1].baseline == Baseline::kTenRt);
  CHECK(r[2].preset == Preset::kUseSemantic);
  for (const auto& rep : r)
    for (const auto& f : rep.folds) CHECK(f.skipped == 0);

  Corpus lld = c;
  lld.feature_set = FeatureSet::kLld228;
  CHECK_THROWS_AS(preset_config(Preset::kTrillAuditory, lld), Error);
}
