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

#include "ned/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ned/error.hpp"
#include "ned/seed.hpp"

namespace ned {

using nlohmann::json;

void GenSpec::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorKind::kInvalidSpec, m); };
  if (num_sessions < 1) bad("num_sessions must be >= 1");
  if (turns_per_session < 4) bad("turns_per_session must be >= 4");
  if (dim < 1) bad("dim must be >= 1");
  if (!(coupling >= 0.0 && coupling <= 1.0)) bad("coupling must lie in [0, 1]");
  if (!(speaker_offset_scale >= 0.0) || !std::isfinite(speaker_offset_scale))
    bad("speaker_offset_scale must be >= 0");
  if (!(noise_scale > 0.0) || !std::isfinite(noise_scale))
    bad("noise_scale must be > 0");
  if (!(ipu_noise_scale >= 0.0) || !std::isfinite(ipu_noise_scale))
    bad("ipu_noise_scale must be >= 0");
}

GenSpec gen_spec_from_json(const json& j) {
  try {
    GenSpec s;
    s.num_sessions = j.at("num_sessions").get<std::size_t>();
    s.turns_per_session = j.at("turns_per_session").get<std::size_t>();
    s.dim = j.at("dim").get<std::size_t>();
    s.coupling = j.at("coupling").get<double>();
    s.speaker_offset_scale = j.value("speaker_offset_scale", 1.0);
    s.noise_scale = j.value("noise_scale", 1.0);
    const auto mode = j.value("mode", std::string("SYMMETRIC_HH"));
    if (mode == "SYMMETRIC_HH") s.mode = GenMode::kSymmetricHH;
    else if (mode == "ONE_WAY_HM") s.mode = GenMode::kOneWayHM;
    else fail(ErrorKind::kInvalidSpec, "unknown mode '" + mode + "'");
    s.seed = j.value("seed", std::uint64_t{0});
    s.ipus_per_turn = j.value("ipus_per_turn", std::size_t{0});
    s.ipu_noise_scale = j.value("ipu_noise_scale", 0.0);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidSpec, std::string("bad generator spec: ") + e.what());
  }
}

json gen_spec_to_json(const GenSpec& s) {
  return json{{"num_sessions", s.num_sessions},
              {"turns_per_session", s.turns_per_session},
              {"dim", s.dim},
              {"coupling", s.coupling},
              {"speaker_offset_scale", s.speaker_offset_scale},
              {"noise_scale", s.noise_scale},
              {"mode", s.mode == GenMode::kSymmetricHH ? "SYMMETRIC_HH"
                                                       : "ONE_WAY_HM"},
              {"seed", s.seed},
              {"ipus_per_turn", s.ipus_per_turn},
              {"ipu_noise_scale", s.ipu_noise_scale}};
}

namespace {

constexpr double kTurnStride = 2.0;
constexpr double kTurnLength = 1.8;

Session generate_session(const GenSpec& spec, std::size_t index) {
  std::mt19937_64 rng(derive_seed(spec.seed, {index}));
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool hm = spec.mode == GenMode::kOneWayHM;

  Session s;
  s.session_id = "synth" + std::to_string(index);
  const std::string a = hm ? "human" : "A";
  const std::string b = hm ? "machine" : "B";
  s.speakers = {a, b};
  if (hm) {
    s.interlocutor_kind = InterlocutorKind::kHumanMachine;
    s.machine_speaker = b;
  }

  std::vector<double> style_a(spec.dim), style_b(spec.dim);
  for (double& v : style_a) v = spec.speaker_offset_scale * normal(rng);
  for (double& v : style_b) v = spec.speaker_offset_scale * normal(rng);

  const UnitKind kind = spec.ipus_per_turn > 0 ? UnitKind::kIpu : UnitKind::kTurn;
  std::vector<double> latent(spec.dim, 0.0), x(spec.dim);
  std::int64_t unit_index = 0;
  for (std::size_t t = 0; t < spec.turns_per_session; ++t) {
    const bool speaker_is_a = t % 2 == 0;
    const bool coupled = !hm || speaker_is_a;
    const double rho = (t == 0 || !coupled) ? 0.0 : spec.coupling;
    const auto& style = speaker_is_a ? style_a : style_b;
    for (std::size_t i = 0; i < spec.dim; ++i) {
      latent[i] = rho * latent[i] + spec.noise_scale * normal(rng);
      x[i] = style[i] + latent[i];
    }

    const double start = kTurnStride * static_cast<double>(t);
    const std::size_t pieces = kind == UnitKind::kIpu ? spec.ipus_per_turn : 1;
    const double len = kTurnLength / static_cast<double>(pieces);
    for (std::size_t p = 0; p < pieces; ++p) {
      UnitRecord u;
      u.session_id = s.session_id;
      u.speaker = speaker_is_a ? a : b;
      u.unit_index = unit_index++;
      u.start_s = start + len * static_cast<double>(p);
      u.end_s = u.start_s + len;
      u.unit_kind = kind;
      u.turn_index = kind == UnitKind::kTurn ? u.unit_index
                                             : static_cast<std::int64_t>(t);
      u.features = x;
      if (kind == UnitKind::kIpu && spec.ipu_noise_scale > 0.0)
        for (double& v : u.features)
          v += spec.ipu_noise_scale * spec.noise_scale * normal(rng);
      u.feature_set = FeatureSet::kSynth;
      s.units.push_back(std::move(u));
    }
  }
  return s;
}

}  // namespace

Corpus generate_corpus(const GenSpec& spec) {
  spec.validate();
  Corpus c;
  c.corpus_name = "synthetic";
  c.feature_set = FeatureSet::kSynth;
  c.unit_kind = spec.ipus_per_turn > 0 ? UnitKind::kIpu : UnitKind::kTurn;
  c.sessions.resize(spec.num_sessions);
#pragma omp parallel for schedule(static) if (spec.num_sessions * spec.turns_per_session * spec.dim > (1u << 16))
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(spec.num_sessions); ++i)
    c.sessions[i] = generate_session(spec, static_cast<std::size_t>(i));
  return c;
}

OracleBand oracle_accuracy(const GenSpec& spec, Direction direction,
                           std::size_t min_pairs) {
  spec.validate();
  std::size_t evaluated = 0, correct = 0;
  for (std::uint64_t rep = 0; evaluated < min_pairs; ++rep) {
    GenSpec g = spec;
    g.seed = derive_seed(spec.seed, {0x6f7261636c65, rep});
    const Corpus c = generate_corpus(g);
    const std::size_t before = evaluated;
    for (std::size_t si = 0; si < c.sessions.size(); ++si) {
      const Session& s = c.sessions[si];
      const PairSet ps = build_consecutive_pairs(s, c.unit_kind, direction);
      for (std::size_t pi = 0; pi < ps.pairs.size(); ++pi) {
        const auto [anchor, partner] = ps.pairs[pi];
        std::vector<std::size_t> other;
        try {
          other = sample_nonconsecutive(s, anchor, partner, 1,
                                        derive_seed(g.seed, {si, pi}));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kInsufficientUnits) throw;
          continue;
        }
        const auto& fa = s.units[anchor].features;
        double dc = 0.0, dn = 0.0;
        for (std::size_t i = 0; i < fa.size(); ++i) {
          dc += std::abs(fa[i] - s.units[partner].features[i]);
          dn += std::abs(fa[i] - s.units[other.front()].features[i]);
        }
        ++evaluated;
        if (dc < dn) ++correct;
      }
    }
    if (evaluated == before)
      fail(ErrorKind::kInvalidSpec, "generator spec yields no scorable pairs");
  }
  OracleBand band;
  band.pairs = evaluated;
  band.accuracy = static_cast<double>(correct) / static_cast<double>(evaluated);
  const double se = std::sqrt(band.accuracy * (1.0 - band.accuracy) /
                              static_cast<double>(evaluated));
  band.lower = std::max(0.0, band.accuracy - 3.0 * se);
  band.upper = std::min(1.0, band.accuracy + 3.0 * se);
  return band;
}

}  // namespace ned
