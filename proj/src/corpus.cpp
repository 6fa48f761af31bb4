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

#include "ned/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ned/error.hpp"

namespace ned {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(UnitKind k) {
  return k == UnitKind::kIpu ? "IPU" : "TURN";
}

std::string_view to_string(FeatureSet f) {
  switch (f) {
    case FeatureSet::kLld228: return "LLD228";
    case FeatureSet::kTrill512: return "TRILL512";
    case FeatureSet::kSent768: return "SENT768";
    case FeatureSet::kUse512: return "USE512";
    case FeatureSet::kSynth: return "SYNTH";
  }
  return "SYNTH";
}

std::string_view to_string(InterlocutorKind k) {
  return k == InterlocutorKind::kHumanHuman ? "HUMAN_HUMAN" : "HUMAN_MACHINE";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kAny: return "ANY";
    case Direction::kAToB: return "A_TO_B";
    case Direction::kBToA: return "B_TO_A";
  }
  return "ANY";
}

std::optional<UnitKind> parse_unit_kind(std::string_view s) {
  if (s == "IPU") return UnitKind::kIpu;
  if (s == "TURN") return UnitKind::kTurn;
  return std::nullopt;
}

std::optional<FeatureSet> parse_feature_set(std::string_view s) {
  for (auto f : {FeatureSet::kLld228, FeatureSet::kTrill512,
                 FeatureSet::kSent768, FeatureSet::kUse512,
                 FeatureSet::kSynth})
    if (s == to_string(f)) return f;
  return std::nullopt;
}

std::optional<InterlocutorKind> parse_interlocutor_kind(std::string_view s) {
  if (s == "HUMAN_HUMAN") return InterlocutorKind::kHumanHuman;
  if (s == "HUMAN_MACHINE") return InterlocutorKind::kHumanMachine;
  return std::nullopt;
}

std::optional<Direction> parse_direction(std::string_view s) {
  for (auto d : {Direction::kAny, Direction::kAToB, Direction::kBToA})
    if (s == to_string(d)) return d;
  return std::nullopt;
}

std::optional<std::size_t> native_dimension(FeatureSet f) {
  switch (f) {
    case FeatureSet::kLld228: return 228;
    case FeatureSet::kTrill512: return 512;
    case FeatureSet::kSent768: return 768;
    case FeatureSet::kUse512: return 512;
    case FeatureSet::kSynth: return std::nullopt;
  }
  return std::nullopt;
}

std::string Diagnostic::format() const {
  std::ostringstream os;
  os << (file.empty() ? "<memory>" : file);
  if (line > 0) os << ':' << line;
  os << ": " << kind;
  if (!session_id.empty()) os << ": session " << session_id;
  os << ": " << message;
  return os.str();
}

const std::string& Session::speaker_a() const {
  if (machine_speaker) {
    for (const auto& u : units)
      if (u.speaker != *machine_speaker) return u.speaker;
  }
  return units.front().speaker;
}

namespace {

struct DiagSink {
  std::vector<Diagnostic>& out;
  std::string file;
  std::string session_id;

  void add(ErrorKind kind, std::size_t line, std::string message) {
    out.push_back({file, line, session_id, std::string(error_kind_name(kind)),
                   std::move(message)});
  }
};

// Parses one JSONL line into a UnitRecord; returns false and records a
// diagnostic when a field is missing or mistyped.
bool parse_unit(const json& j, std::size_t line, DiagSink& sink,
                UnitRecord& u) {
  auto schema = [&](const std::string& msg) {
    sink.add(ErrorKind::kSchemaViolation, line, msg);
    return false;
  };
  if (!j.is_object()) return schema("line is not a JSON object");

  auto str_field = [&](const char* name, std::string& dst) {
    auto it = j.find(name);
    if (it == j.end() || !it->is_string())
      return schema(std::string("missing or non-string field '") + name + "'");
    dst = it->get<std::string>();
    return true;
  };
  auto int_field = [&](const char* name, std::int64_t& dst) {
    auto it = j.find(name);
    if (it == j.end() || !it->is_number_integer())
      return schema(std::string("missing or non-integer field '") + name +
                    "'");
    dst = it->get<std::int64_t>();
    if (dst < 0) return schema(std::string("negative '") + name + "'");
    return true;
  };
  auto num_field = [&](const char* name, double& dst) {
    auto it = j.find(name);
    if (it == j.end() || !it->is_number())
      return schema(std::string("missing or non-numeric field '") + name +
                    "'");
    dst = it->get<double>();
    return true;
  };

  std::string kind, fset;
  if (!str_field("session_id", u.session_id) ||
      !str_field("speaker", u.speaker) ||
      !int_field("unit_index", u.unit_index) ||
      !num_field("start_s", u.start_s) || !num_field("end_s", u.end_s) ||
      !str_field("unit_kind", kind) ||
      !int_field("turn_index", u.turn_index) ||
      !str_field("feature_set", fset))
    return false;

  auto k = parse_unit_kind(kind);
  if (!k) return schema("unknown unit_kind '" + kind + "'");
  u.unit_kind = *k;
  auto f = parse_feature_set(fset);
  if (!f) return schema("unknown feature_set '" + fset + "'");
  u.feature_set = *f;

  auto it = j.find("features");
  if (it == j.end() || !it->is_array() || it->empty())
    return schema("missing or empty 'features' array");
  u.features.clear();
  u.features.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) return schema("non-numeric entry in 'features'");
    const double d = v.get<double>();
    if (!std::isfinite(d)) return schema("non-finite entry in 'features'");
    u.features.push_back(d);
  }
  return true;
}

// Checks invariants over a parsed session. `lines[i]` is the file line of
// units[i] (or 0 for in-memory sessions).
void check_session(const Session& s, FeatureSet feature_set,
                   UnitKind unit_kind, const std::vector<std::size_t>& lines,
                   DiagSink& sink) {
  auto line_of = [&](std::size_t i) { return i < lines.size() ? lines[i] : 0; };
  auto schema = [&](std::size_t line, const std::string& msg) {
    sink.add(ErrorKind::kSchemaViolation, line, msg);
  };

  if (s.units.empty()) {
    schema(0, "session has no units");
    return;
  }

  std::set<std::string> seen;
  const std::size_t dim = s.units.front().features.size();
  const auto native = native_dimension(feature_set);
  if (native && dim != *native)
    sink.add(ErrorKind::kDimensionMismatch, line_of(0),
             "feature dimension " + std::to_string(dim) + " but " +
                 std::string(to_string(feature_set)) + " requires " +
                 std::to_string(*native));

  for (std::size_t i = 0; i < s.units.size(); ++i) {
    const UnitRecord& u = s.units[i];
    const std::size_t ln = line_of(i);
    seen.insert(u.speaker);
    if (u.session_id != s.session_id)
      schema(ln, "session_id '" + u.session_id + "' does not match manifest");
    if (u.start_s < 0.0) schema(ln, "start_s must be >= 0");
    if (!(u.end_s > u.start_s)) schema(ln, "end_s must exceed start_s");
    if (u.unit_kind != unit_kind)
      schema(ln, "unit_kind " + std::string(to_string(u.unit_kind)) +
                     " does not match corpus unit_kind " +
                     std::string(to_string(unit_kind)));
    if (u.unit_kind == UnitKind::kTurn && u.turn_index != u.unit_index)
      schema(ln, "turn_index must equal unit_index for TURN units");
    if (u.feature_set != feature_set)
      schema(ln, "feature_set " + std::string(to_string(u.feature_set)) +
                     " does not match corpus feature_set " +
                     std::string(to_string(feature_set)));
    if (u.features.size() != dim)
      sink.add(ErrorKind::kDimensionMismatch, ln,
               "feature dimension " + std::to_string(u.features.size()) +
                   " differs from session dimension " + std::to_string(dim));
    if (i > 0) {
      const UnitRecord& p = s.units[i - 1];
      if (u.unit_index <= p.unit_index)
        schema(ln, "unit_index must be strictly increasing");
      if (u.start_s < p.start_s)
        schema(ln, "units must be sorted by start_s");
      if (u.unit_kind == UnitKind::kIpu && u.turn_index < p.turn_index)
        schema(ln, "turn_index must be non-decreasing");
    }
  }

  if (seen.size() != 2)
    schema(0, "expected exactly 2 speakers, found " +
                  std::to_string(seen.size()));
  if (!s.speakers.empty()) {
    std::set<std::string> declared(s.speakers.begin(), s.speakers.end());
    if (declared.size() != 2 || s.speakers.size() != 2)
      schema(0, "manifest must declare exactly 2 distinct speakers");
    else
      for (const auto& sp : seen)
        if (!declared.count(sp))
          schema(0, "speaker '" + sp + "' not declared in manifest");
  }
  if (s.machine_speaker) {
    if (s.interlocutor_kind != InterlocutorKind::kHumanMachine)
      schema(0, "machine_speaker given for a HUMAN_HUMAN session");
    if (!seen.count(*s.machine_speaker))
      schema(0, "machine_speaker '" + *s.machine_speaker +
                    "' does not speak in the session");
  }
}

json unit_to_json(const UnitRecord& u) {
  return json{{"session_id", u.session_id},
              {"speaker", u.speaker},
              {"unit_index", u.unit_index},
              {"start_s", u.start_s},
              {"end_s", u.end_s},
              {"unit_kind", to_string(u.unit_kind)},
              {"turn_index", u.turn_index},
              {"features", u.features},
              {"feature_set", to_string(u.feature_set)}};
}

}  // namespace

std::vector<Diagnostic> validate_session(const Session& session,
                                         FeatureSet feature_set,
                                         UnitKind unit_kind) {
  std::vector<Diagnostic> out;
  DiagSink sink{out, "", session.session_id};
  check_session(session, feature_set, unit_kind, {}, sink);
  return out;
}

ManifestLoad read_manifest(const fs::path& manifest) {
  ManifestLoad result;
  auto& diags = result.diagnostics;
  DiagSink top{diags, manifest.string(), ""};

  std::ifstream in(manifest);
  if (!in) {
    top.add(ErrorKind::kMissingFile, 0, "cannot open manifest");
    return result;
  }
  json m;
  try {
    m = json::parse(in);
  } catch (const json::parse_error& e) {
    top.add(ErrorKind::kSchemaViolation, 0,
            std::string("manifest is not valid JSON: ") + e.what());
    return result;
  }
  if (!m.is_object()) {
    top.add(ErrorKind::kSchemaViolation, 0, "manifest must be a JSON object");
    return result;
  }

  Corpus& corpus = result.corpus;
  auto top_str = [&](const char* name) -> std::optional<std::string> {
    auto it = m.find(name);
    if (it == m.end() || !it->is_string()) {
      top.add(ErrorKind::kSchemaViolation, 0,
              std::string("manifest field '") + name + "' missing or not a string");
      return std::nullopt;
    }
    return it->get<std::string>();
  };
  auto name = top_str("corpus_name");
  auto fset = top_str("feature_set");
  auto ukind = top_str("unit_kind");
  if (name) corpus.corpus_name = *name;
  if (fset) {
    if (auto f = parse_feature_set(*fset)) corpus.feature_set = *f;
    else top.add(ErrorKind::kSchemaViolation, 0, "unknown feature_set '" + *fset + "'");
  }
  if (ukind) {
    if (auto k = parse_unit_kind(*ukind)) corpus.unit_kind = *k;
    else top.add(ErrorKind::kSchemaViolation, 0, "unknown unit_kind '" + *ukind + "'");
  }
  auto sessions = m.find("sessions");
  if (sessions == m.end() || !sessions->is_array() || sessions->empty()) {
    top.add(ErrorKind::kSchemaViolation, 0, "'sessions' must be a non-empty array");
    return result;
  }
  if (!diags.empty()) return result;

  const fs::path base = manifest.parent_path();
  std::set<std::string> ids;
  std::optional<std::size_t> corpus_dim;
  for (const auto& entry : *sessions) {
    Session s;
    DiagSink sink{diags, manifest.string(), ""};
    if (!entry.is_object() || !entry.contains("session_id") ||
        !entry["session_id"].is_string() || !entry.contains("path") ||
        !entry["path"].is_string()) {
      sink.add(ErrorKind::kSchemaViolation, 0,
               "session entry needs string 'session_id' and 'path'");
      continue;
    }
    s.session_id = entry["session_id"].get<std::string>();
    sink.session_id = s.session_id;
    if (!ids.insert(s.session_id).second) {
      sink.add(ErrorKind::kSchemaViolation, 0, "duplicate session_id");
      continue;
    }
    auto ik = entry.value("interlocutor_kind", std::string("HUMAN_HUMAN"));
    if (auto k = parse_interlocutor_kind(ik)) s.interlocutor_kind = *k;
    else sink.add(ErrorKind::kSchemaViolation, 0, "unknown interlocutor_kind '" + ik + "'");
    if (auto sp = entry.find("speakers"); sp != entry.end()) {
      if (!sp->is_array()) {
        sink.add(ErrorKind::kSchemaViolation, 0, "'speakers' must be an array");
      } else {
        for (const auto& v : *sp)
          if (v.is_string()) s.speakers.push_back(v.get<std::string>());
          else sink.add(ErrorKind::kSchemaViolation, 0, "speaker labels must be strings");
      }
    }
    if (auto ms = entry.find("machine_speaker"); ms != entry.end() && !ms->is_null()) {
      if (ms->is_string()) s.machine_speaker = ms->get<std::string>();
      else sink.add(ErrorKind::kSchemaViolation, 0, "'machine_speaker' must be a string");
    }

    fs::path path = entry["path"].get<std::string>();
    if (path.is_relative()) path = base / path;
    sink.file = path.string();
    std::ifstream sf(path);
    if (!sf) {
      sink.add(ErrorKind::kMissingFile, 0, "session file not found");
      continue;
    }
    std::vector<std::size_t> lines;
    std::string text;
    std::size_t ln = 0;
    bool parse_ok = true;
    while (std::getline(sf, text)) {
      ++ln;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      UnitRecord u;
      json j;
      try {
        j = json::parse(text);
      } catch (const json::parse_error&) {
        sink.add(ErrorKind::kSchemaViolation, ln, "line is not valid JSON");
        parse_ok = false;
        continue;
      }
      if (!parse_unit(j, ln, sink, u)) {
        parse_ok = false;
        continue;
      }
      s.units.push_back(std::move(u));
      lines.push_back(ln);
    }
    if (!parse_ok) continue;
    const std::size_t before = diags.size();
    check_session(s, corpus.feature_set, corpus.unit_kind, lines, sink);
    if (diags.size() != before) continue;
    if (corpus_dim && s.dimension() != *corpus_dim) {
      sink.add(ErrorKind::kDimensionMismatch, 0,
               "session dimension " + std::to_string(s.dimension()) +
                   " differs from corpus dimension " +
                   std::to_string(*corpus_dim));
      continue;
    }
    corpus_dim = s.dimension();
    corpus.sessions.push_back(std::move(s));
  }
  return result;
}

Corpus load_manifest(const fs::path& manifest) {
  ManifestLoad r = read_manifest(manifest);
  if (!r.ok()) {
    const Diagnostic& d = r.diagnostics.front();
    ErrorKind kind = ErrorKind::kSchemaViolation;
    if (d.kind == error_kind_name(ErrorKind::kMissingFile))
      kind = ErrorKind::kMissingFile;
    else if (d.kind == error_kind_name(ErrorKind::kDimensionMismatch))
      kind = ErrorKind::kDimensionMismatch;
    fail(kind, d.format());
  }
  return std::move(r.corpus);
}

void write_session_jsonl(const Session& session, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + file.string());
  for (const auto& u : session.units) out << unit_to_json(u).dump() << '\n';
  if (!out) fail(ErrorKind::kIo, "write failed for " + file.string());
}

void write_corpus(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir / "sessions");
  json sessions = json::array();
  for (const auto& s : corpus.sessions) {
    const std::string rel = "sessions/" + s.session_id + ".jsonl";
    write_session_jsonl(s, dir / rel);
    json e{{"session_id", s.session_id},
           {"path", rel},
           {"interlocutor_kind", to_string(s.interlocutor_kind)},
           {"speakers", s.speakers}};
    if (s.machine_speaker) e["machine_speaker"] = *s.machine_speaker;
    sessions.push_back(std::move(e));
  }
  json m{{"corpus_name", corpus.corpus_name},
         {"feature_set", to_string(corpus.feature_set)},
         {"unit_kind", to_string(corpus.unit_kind)},
         {"sessions", std::move(sessions)}};
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

namespace {

// Runs of units sharing a turn (one unit per run for TURN corpora).
struct TurnSpan {
  std::size_t first = 0;
  std::size_t last = 0;
};

std::vector<TurnSpan> turn_spans(const Session& s, UnitKind kind) {
  std::vector<TurnSpan> spans;
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    const UnitRecord& u = s.units[i];
    if (u.unit_kind != kind) continue;
    if (kind == UnitKind::kIpu && !spans.empty()) {
      const UnitRecord& prev = s.units[spans.back().last];
      if (prev.turn_index == u.turn_index && prev.speaker == u.speaker) {
        spans.back().last = i;
        continue;
      }
    }
    spans.push_back({i, i});
  }
  return spans;
}

}  // namespace

PairSet build_consecutive_pairs(const Session& session, UnitKind unit_kind,
                                Direction direction) {
  const std::size_t qualifying = static_cast<std::size_t>(std::count_if(
      session.units.begin(), session.units.end(),
      [&](const UnitRecord& u) { return u.unit_kind == unit_kind; }));
  if (qualifying < 2)
    fail(ErrorKind::kEmptyResult,
         "session " + session.session_id + " has fewer than 2 " +
             std::string(to_string(unit_kind)) + " units");

  PairSet out{session.session_id, {}, direction, unit_kind};
  const std::string& a = session.speaker_a();
  const auto spans = turn_spans(session, unit_kind);
  for (std::size_t t = 0; t + 1 < spans.size(); ++t) {
    const UnitRecord& x1 = session.units[spans[t].last];
    const UnitRecord& x2 = session.units[spans[t + 1].first];
    if (x1.speaker == x2.speaker) continue;
    const bool from_a = x1.speaker == a;
    if (direction == Direction::kAToB && !from_a) continue;
    if (direction == Direction::kBToA && from_a) continue;
    out.pairs.push_back({spans[t].last, spans[t + 1].first});
  }
  return out;
}

std::optional<std::size_t> consecutive_partner(const Session& session,
                                               std::size_t anchor) {
  if (anchor >= session.units.size()) return std::nullopt;
  const UnitKind kind = session.units[anchor].unit_kind;
  const auto spans = turn_spans(session, kind);
  for (std::size_t t = 0; t + 1 < spans.size(); ++t) {
    if (spans[t].last != anchor) continue;
    const std::size_t next = spans[t + 1].first;
    if (session.units[next].speaker != session.units[anchor].speaker)
      return next;
    return std::nullopt;
  }
  return std::nullopt;
}

std::vector<std::size_t> sample_nonconsecutive(
    const Session& session, std::size_t anchor,
    std::optional<std::size_t> excluded, std::size_t count,
    std::uint64_t seed) {
  if (anchor >= session.units.size())
    fail(ErrorKind::kInsufficientUnits, "anchor index out of range");
  const UnitRecord& a = session.units[anchor];
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < session.units.size(); ++i) {
    const UnitRecord& u = session.units[i];
    if (u.speaker == a.speaker || u.unit_kind != a.unit_kind) continue;
    if (excluded && i == *excluded) continue;
    pool.push_back(i);
  }
  if (count == 0 || pool.size() < count)
    fail(ErrorKind::kInsufficientUnits,
         "session " + session.session_id + ": need " + std::to_string(count) +
             " non-consecutive units, have " + std::to_string(pool.size()));

  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

std::vector<std::size_t> sample_nonconsecutive(const Session& session,
                                               std::size_t anchor,
                                               std::size_t count,
                                               std::uint64_t seed) {
  return sample_nonconsecutive(session, anchor,
                               consecutive_partner(session, anchor), count,
                               seed);
}

}  // namespace ned
