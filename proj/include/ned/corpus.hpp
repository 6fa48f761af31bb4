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

// Canonical corpus representation: sessions of utterance units (IPUs or
// turns) stored as JSON Lines, indexed by a JSON manifest, plus the
// cross-speaker pairing used for training and evaluation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ned {

enum class UnitKind { kIpu, kTurn };
enum class FeatureSet { kLld228, kTrill512, kSent768, kUse512, kSynth };
enum class InterlocutorKind { kHumanHuman, kHumanMachine };

// Direction of a consecutive pair. Speaker A is whoever produces the first
// unit of the session.
enum class Direction { kAny, kAToB, kBToA };

std::string_view to_string(UnitKind k);
std::string_view to_string(FeatureSet f);
std::string_view to_string(InterlocutorKind k);
std::string_view to_string(Direction d);
std::optional<UnitKind> parse_unit_kind(std::string_view s);
std::optional<FeatureSet> parse_feature_set(std::string_view s);
std::optional<InterlocutorKind> parse_interlocutor_kind(std::string_view s);
std::optional<Direction> parse_direction(std::string_view s);

// Native vector width of a feature family; nullopt for SYNTH.
std::optional<std::size_t> native_dimension(FeatureSet f);

struct UnitRecord {
  std::string session_id;
  std::string speaker;
  std::int64_t unit_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  UnitKind unit_kind = UnitKind::kTurn;
  // Turn the unit belongs to; equals unit_index for turns.
  std::int64_t turn_index = 0;
  std::vector<double> features;
  FeatureSet feature_set = FeatureSet::kSynth;
};

struct Session {
  std::string session_id;
  std::vector<UnitRecord> units;
  // The two speaker labels as listed in the manifest.
  std::vector<std::string> speakers;
  InterlocutorKind interlocutor_kind = InterlocutorKind::kHumanHuman;
  // Set for human-machine sessions.
  std::optional<std::string> machine_speaker;

  // Role A: the human in a human-machine session with a labelled machine,
  // otherwise the first speaker to produce a unit.
  const std::string& speaker_a() const;
  std::size_t dimension() const {
    return units.empty() ? 0 : units.front().features.size();
  }
};

struct Corpus {
  std::string corpus_name;
  FeatureSet feature_set = FeatureSet::kSynth;
  UnitKind unit_kind = UnitKind::kTurn;
  std::vector<Session> sessions;

  std::size_t dimension() const {
    return sessions.empty() ? 0 : sessions.front().dimension();
  }
};

// One problem found while validating a corpus on disk.
struct Diagnostic {
  std::string file;
  std::size_t line = 0;  // 0 when not tied to a line
  std::string session_id;
  std::string kind;  // error kind name, e.g. "SchemaViolation"
  std::string message;

  std::string format() const;
};

struct ManifestLoad {
  Corpus corpus;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

// Parses and validates everything, collecting all diagnostics.
ManifestLoad read_manifest(const std::filesystem::path& manifest);

// Like read_manifest but throws ned::Error on the first diagnostic.
Corpus load_manifest(const std::filesystem::path& manifest);

// Checks the in-memory Session invariants; empty result means valid.
std::vector<Diagnostic> validate_session(const Session& session,
                                         FeatureSet feature_set,
                                         UnitKind unit_kind);

// Writes `<dir>/manifest.json` and `<dir>/sessions/<id>.jsonl`.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
void write_session_jsonl(const Session& session,
                         const std::filesystem::path& file);

// Index pair into Session::units.
struct UnitPair {
  std::size_t first = 0;
  std::size_t second = 0;
  friend bool operator==(const UnitPair&, const UnitPair&) = default;
};

struct PairSet {
  std::string session_id;
  std::vector<UnitPair> pairs;
  Direction direction = Direction::kAny;
  UnitKind unit_kind = UnitKind::kTurn;
};

// Cross-speaker adjacency pairs. For turns, each turn is paired with the
// following turn when the floor changes. For IPUs, the last IPU of a turn is
// paired with the first IPU of the next turn by the other speaker.
// Same-speaker adjacencies are skipped. Throws EmptyResult when the session
// has fewer than two units of the requested kind.
PairSet build_consecutive_pairs(const Session& session, UnitKind unit_kind,
                                Direction direction);

// The unit that forms a consecutive pair with `anchor`, if any.
std::optional<std::size_t> consecutive_partner(const Session& session,
                                               std::size_t anchor);

// `count` distinct units of the other speaker, excluding `excluded`
// (normally the consecutive partner), drawn uniformly without replacement.
std::vector<std::size_t> sample_nonconsecutive(
    const Session& session, std::size_t anchor,
    std::optional<std::size_t> excluded, std::size_t count, std::uint64_t seed);

// Same, with the exclusion derived from consecutive_partner().
std::vector<std::size_t> sample_nonconsecutive(const Session& session,
                                               std::size_t anchor,
                                               std::size_t count,
                                               std::uint64_t seed);

}  // namespace ned
