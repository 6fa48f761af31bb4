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

#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "ned/corpus.hpp"
#include "ned/entrainment.hpp"
#include "ned/error.hpp"
#include "ned/experiments.hpp"
#include "ned/features.hpp"
#include "ned/report.hpp"
#include "ned/seed.hpp"
#include "ned/synthgen.hpp"

namespace ned::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fully resolved settings of one invocation; echoed into run.json.
struct RunConfig {
  std::string subcommand;
  std::string manifest;
  std::string ipu_manifest;
  std::string preset;
  std::uint64_t seed = 0;
  std::string seed_source = "default";
  std::string out;
  std::string out_dir;
  std::string frames_dir;
  std::string spec_path;
  std::string model;
  std::string direction = "ANY";
  int experiment_id = 0;
  std::size_t k = 10;
  int jobs = 0;
  int epochs = 0;
  int verbosity = 0;
  std::vector<std::string> baselines;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json to_json(const RunConfig& c) {
  return json{{"subcommand", c.subcommand},
              {"manifest", c.manifest},
              {"ipu_manifest", c.ipu_manifest},
              {"preset", c.preset},
              {"seed", c.seed},
              {"seed_source", c.seed_source},
              {"out", c.out},
              {"out_dir", c.out_dir},
              {"frames_dir", c.frames_dir},
              {"spec", c.spec_path},
              {"model", c.model},
              {"direction", c.direction},
              {"experiment_id", c.experiment_id},
              {"k", c.k},
              {"jobs", c.jobs},
              {"epochs", c.epochs > 0 ? c.epochs : ModelConfig{}.epochs},
              {"batch_size", ModelConfig{}.batch_size},
              {"learning_rate", ModelConfig{}.learning_rate},
              {"baselines", c.baselines},
              {"verbosity", c.verbosity}};
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void resolve_seed(RunConfig& c, bool flag_given) {
  if (flag_given) c.seed_source = "flag";
  if (const char* env = std::getenv("NED_SEED"); env && *env) {
    const std::string s(env);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw UsageError("NED_SEED must be a non-negative integer, got '" + s + "'");
    c.seed = v;
    c.seed_source = "NED_SEED";
  }
}

Preset require_preset(const std::string& name) {
  auto p = parse_preset(name);
  if (!p) throw UsageError("unknown preset '" + name + "' (lld|trill|sent|use)");
  return *p;
}

std::vector<Preset> parse_preset_list(const std::string& list) {
  if (list.empty() || list == "all")
    return {Preset::kLldAuditory, Preset::kTrillAuditory, Preset::kSentSemantic,
            Preset::kUseSemantic};
  std::vector<Preset> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(require_preset(item));
  return out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_validate(const RunConfig& c, std::ostream& out) {
  const ManifestLoad r = read_manifest(c.manifest);
  for (const auto& d : r.diagnostics) out << d.format() << '\n';
  if (!r.ok()) return kExitFailure;
  std::size_t units = 0;
  for (const auto& s : r.corpus.sessions) units += s.units.size();
  out << "ok: " << r.corpus.sessions.size() << " sessions, " << units
      << " units, dimension " << r.corpus.dimension() << '\n';
  return kExitOk;
}

int cmd_functionals(const RunConfig& c, std::ostream& out) {
  const std::size_t n = functionals_from_directory(c.frames_dir, c.out);
  out << "wrote " << n << " units to " << c.out << '\n';
  return kExitOk;
}

int cmd_synth(const RunConfig& c, bool seed_given, std::ostream& out) {
  std::ifstream in(c.spec_path);
  if (!in) fail(ErrorKind::kMissingFile, "cannot open " + c.spec_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kInvalidSpec, std::string("spec is not valid JSON: ") + e.what());
  }
  GenSpec spec = gen_spec_from_json(j);
  if (seed_given || c.seed_source == "NED_SEED") spec.seed = c.seed;
  const Corpus corpus = generate_corpus(spec);
  write_corpus(corpus, c.out_dir);
  json run = to_json(c);
  run["generator"] = gen_spec_to_json(spec);
  write_json(fs::path(c.out_dir) / "run.json", run);
  out << "wrote " << corpus.sessions.size() << " sessions to " << c.out_dir
      << '\n';
  return kExitOk;
}

NormStats fit_corpus_norm(const Corpus& corpus) {
  std::vector<std::vector<double>> units;
  for (const auto& s : corpus.sessions)
    for (const auto& u : s.units)
      if (u.unit_kind == corpus.unit_kind) units.push_back(u.features);
  return zscore_fit(units, NormScope::kCorpus);
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Preset preset = require_preset(c.preset);
  const auto direction = parse_direction(c.direction);
  if (!direction) throw UsageError("unknown direction '" + c.direction + "'");
  const Corpus corpus = load_manifest(c.manifest);
  const ModelConfig config = preset_config(preset, corpus, c.epochs);
  const NormStats stats = fit_corpus_norm(corpus);

  std::vector<PairMatrices> parts;
  for (const auto& s : corpus.sessions) {
    try {
      parts.push_back(pair_matrices(
          s, build_consecutive_pairs(s, corpus.unit_kind, *direction), &stats));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEmptyResult) throw;
    }
  }
  TrainedModel model = train_model(config, concat(parts), c.seed);
  model.norm = stats;
  save_checkpoint(model, c.out);
  write_json(c.out + ".run.json", to_json(c));
  if (c.verbosity > 0)
    for (std::size_t e = 0; e < model.training_log.size(); ++e)
      err << "epoch " << e << " loss " << model.training_log[e] << '\n';
  out << "trained " << to_string(preset) << " on "
      << concat(parts).size() << " pairs -> " << c.out << '\n';
  return kExitOk;
}

int cmd_score(const RunConfig& c, std::ostream& out) {
  const TrainedModel model = load_checkpoint(c.model);
  const Corpus corpus = load_manifest(c.manifest);
  std::ostringstream csv;
  csv << "session_id,pair_index,ned_consecutive,ned_nonconsec_1,"
         "ned_nonconsec_mean10\n";
  std::size_t rows = 0;
  for (std::size_t si = 0; si < corpus.sessions.size(); ++si) {
    const Session& s = corpus.sessions[si];
    PairSet ps;
    try {
      ps = build_consecutive_pairs(s, corpus.unit_kind, Direction::kAny);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEmptyResult) throw;
      continue;
    }
    std::vector<std::vector<double>> z;
    z.reserve(s.units.size());
    for (const auto& u : s.units) z.push_back(encode(model, u));
    const NedMetric metric = model.config.ned_metric;
    for (std::size_t pi = 0; pi < ps.pairs.size(); ++pi) {
      const auto [a, b] = ps.pairs[pi];
      const std::uint64_t pair_seed = derive_seed(c.seed, {si, pi});
      csv << s.session_id << ',' << pi << ',' << fmt17(ned(metric, z[a], z[b]));
      for (std::size_t count : {std::size_t{1}, std::size_t{10}}) {
        csv << ',';
        try {
          const auto others = sample_nonconsecutive(s, a, b, count, pair_seed);
          double m = 0.0;
          for (std::size_t o : others) m += ned(metric, z[a], z[o]);
          csv << fmt17(m / static_cast<double>(count));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kInsufficientUnits) throw;
        }
      }
      csv << '\n';
      ++rows;
    }
  }
  const fs::path path(c.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::kIo, "cannot write " + c.out);
  f << csv.str();
  write_json(c.out + ".run.json", to_json(c));
  out << "scored " << rows << " pairs -> " << c.out << '\n';
  return kExitOk;
}

int cmd_experiment(const RunConfig& c, std::ostream& out) {
  ExperimentOptions opt;
  opt.seed = c.seed;
  opt.k = c.k;
  opt.jobs = c.jobs;
  opt.epochs = c.epochs;

  std::vector<AccuracyReport> reports;
  switch (c.experiment_id) {
    case 1: {
      if (c.ipu_manifest.empty())
        throw UsageError("experiment 1 needs --ipu-manifest (IPU corpus) "
                         "alongside --manifest (turn corpus)");
      if (!c.preset.empty() && require_preset(c.preset) != Preset::kLldAuditory)
        throw UsageError("experiment 1 uses the lld preset");
      reports = run_experiment_1(load_manifest(c.ipu_manifest),
                                 load_manifest(c.manifest), opt);
      break;
    }
    case 2: {
      if (!c.preset.empty() && require_preset(c.preset) != Preset::kLldAuditory)
        throw UsageError("experiment 2 uses the lld preset");
      reports = run_experiment_2(load_manifest(c.manifest), opt);
      break;
    }
    case 3: {
      const auto presets = parse_preset_list(c.preset);
      reports = run_experiment_3(load_manifest(c.manifest), presets, opt);
      break;
    }
    default:
      throw UsageError("--id must be 1, 2 or 3");
  }
  emit_report(reports, c.out_dir);
  RunConfig resolved = c;
  if (resolved.jobs == 0)
    resolved.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (const auto& r : reports) {
    const std::string b(to_string(r.baseline));
    if (std::find(resolved.baselines.begin(), resolved.baselines.end(), b) ==
        resolved.baselines.end())
      resolved.baselines.push_back(b);
  }
  write_json(fs::path(c.out_dir) / "run.json", to_json(resolved));
  out << report_markdown(reports);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Neural entrainment distance toolkit", "ned-entrain"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  RunConfig c;
  app.add_flag("-v,--verbose", c.verbosity, "Increase verbosity");

  auto* validate = app.add_subcommand("validate", "Validate a corpus manifest");
  validate->add_option("--manifest", c.manifest, "Manifest JSON")->required();

  auto* functionals = app.add_subcommand(
      "functionals", "Frame-level LLD CSVs -> 228-dim session JSONL");
  functionals->add_option("--frames-dir", c.frames_dir,
                          "Directory with units.csv and frame CSVs")
      ->required();
  functionals->add_option("--out", c.out, "Output session JSONL")->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--spec", c.spec_path, "Generator spec JSON")->required();
  synth->add_option("--out-dir", c.out_dir, "Output directory")->required();
  auto* synth_seed = synth->add_option("--seed", c.seed, "Override the spec seed");

  auto* train = app.add_subcommand("train", "Train an entrainment model");
  train->add_option("--preset", c.preset, "lld|trill|sent|use")->required();
  train->add_option("--manifest", c.manifest, "Manifest JSON")->required();
  auto* train_seed = train->add_option("--seed", c.seed, "Random seed");
  train->add_option("--out", c.out, "Checkpoint path")->required();
  train->add_option("--direction", c.direction, "ANY|A_TO_B|B_TO_A");
  train->add_option("--epochs", c.epochs, "Override the preset epoch count");

  auto* score = app.add_subcommand("score", "Score consecutive pairs");
  score->add_option("--model", c.model, "Checkpoint path")->required();
  score->add_option("--manifest", c.manifest, "Manifest JSON")->required();
  score->add_option("--out", c.out, "Output CSV")->required();
  auto* score_seed = score->add_option("--seed", c.seed, "Sampling seed");

  auto* experiment = app.add_subcommand("experiment", "Run a k-fold experiment");
  experiment->add_option("--id", c.experiment_id, "1, 2 or 3")->required();
  experiment->add_option("--manifest", c.manifest, "Manifest JSON (turns)")
      ->required();
  experiment->add_option("--ipu-manifest", c.ipu_manifest,
                         "IPU corpus manifest (experiment 1)");
  experiment->add_option("--preset", c.preset,
                         "Preset, comma list or 'all' (experiment 3)");
  auto* exp_seed = experiment->add_option("--seed", c.seed, "Random seed");
  experiment->add_option("--out-dir", c.out_dir, "Output directory")->required();
  experiment->add_option("--k", c.k, "Folds")->check(CLI::Range(2, 1000));
  experiment->add_option("--jobs", c.jobs, "Parallel fold jobs (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  experiment->add_option("--epochs", c.epochs, "Override the preset epoch count");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    c.subcommand = sub->get_name();
    bool seed_given = false;
    for (auto* opt : {synth_seed, train_seed, score_seed, exp_seed})
      if (opt->count() > 0) seed_given = true;
    resolve_seed(c, seed_given);

    if (c.subcommand == "validate") return cmd_validate(c, out);
    if (c.subcommand == "functionals") return cmd_functionals(c, out);
    if (c.subcommand == "synth") return cmd_synth(c, seed_given, out);
    if (c.subcommand == "train") return cmd_train(c, out, err);
    if (c.subcommand == "score") return cmd_score(c, out);
    if (c.subcommand == "experiment") return cmd_experiment(c, out);
    err << "error: unknown subcommand\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << error_kind_name(e.kind()) << ": " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace ned::cli
