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

#include "ned/entrainment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "ned/error.hpp"
#include "ned/seed.hpp"

namespace ned {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::kLldAuditory: return "LLD_AUDITORY";
    case Preset::kTrillAuditory: return "TRILL_AUDITORY";
    case Preset::kSentSemantic: return "SENT_SEMANTIC";
    case Preset::kUseSemantic: return "USE_SEMANTIC";
  }
  return "LLD_AUDITORY";
}

std::string_view short_name(Preset p) {
  switch (p) {
    case Preset::kLldAuditory: return "lld";
    case Preset::kTrillAuditory: return "trill";
    case Preset::kSentSemantic: return "sent";
    case Preset::kUseSemantic: return "use";
  }
  return "lld";
}

std::optional<Preset> parse_preset(std::string_view s) {
  for (auto p : {Preset::kLldAuditory, Preset::kTrillAuditory,
                 Preset::kSentSemantic, Preset::kUseSemantic})
    if (s == to_string(p) || s == short_name(p)) return p;
  return std::nullopt;
}

std::string_view to_string(NedMetric m) {
  return m == NedMetric::kAbsDiff ? "ABS_DIFF" : "COSINE";
}

std::string_view to_string(Polarity p) {
  return p == Polarity::kLowerIsCloser ? "LOWER_IS_CLOSER" : "HIGHER_IS_CLOSER";
}

ModelConfig make_config(Preset preset, std::optional<std::size_t> input_dim) {
  ModelConfig c;
  c.preset = preset;
  c.spec.bottleneck_index = 2;
  switch (preset) {
    case Preset::kLldAuditory:
      c.spec.layer_widths = {228, 128, 30, 128, 228};
      c.spec.loss_kind = nn::LossKind::kSmoothL1;
      c.spec.dual_loss = false;
      c.ned_metric = NedMetric::kAbsDiff;
      c.closeness_polarity = Polarity::kLowerIsCloser;
      break;
    case Preset::kTrillAuditory:
      c.spec.layer_widths = {512, 128, 30, 128, 512};
      c.spec.loss_kind = nn::LossKind::kKlDivergence;
      c.spec.dual_loss = false;
      c.ned_metric = NedMetric::kCosine;
      c.closeness_polarity = Polarity::kHigherIsCloser;
      break;
    case Preset::kSentSemantic:
      c.spec.layer_widths = {768, 512, 384, 512, 768};
      c.spec.loss_kind = nn::LossKind::kSmoothL1;
      c.spec.dual_loss = true;
      c.ned_metric = NedMetric::kCosine;
      c.closeness_polarity = Polarity::kHigherIsCloser;
      break;
    case Preset::kUseSemantic:
      c.spec.layer_widths = {512, 128, 30, 128, 512};
      c.spec.loss_kind = nn::LossKind::kSmoothL1;
      c.spec.dual_loss = true;
      c.ned_metric = NedMetric::kCosine;
      c.closeness_polarity = Polarity::kHigherIsCloser;
      break;
  }
  if (input_dim) {
    if (*input_dim == 0) fail(ErrorKind::kDimensionMismatch, "input_dim must be >= 1");
    c.spec.layer_widths.front() = *input_dim;
    c.spec.layer_widths.back() = *input_dim;
  }
  return c;
}

PairMatrices pair_matrices(const Session& session, const PairSet& pairs,
                           const NormStats* norm) {
  const std::size_t d = session.dimension();
  PairMatrices pm{Matrix(pairs.pairs.size(), d), Matrix(pairs.pairs.size(), d)};
  for (std::size_t i = 0; i < pairs.pairs.size(); ++i) {
    const auto& a = session.units.at(pairs.pairs[i].first).features;
    const auto& b = session.units.at(pairs.pairs[i].second).features;
    std::copy(a.begin(), a.end(), pm.x1.row(i).begin());
    std::copy(b.begin(), b.end(), pm.x2.row(i).begin());
    if (norm) {
      zscore_apply_inplace(pm.x1.row(i), *norm);
      zscore_apply_inplace(pm.x2.row(i), *norm);
    }
  }
  return pm;
}

PairMatrices concat(std::span<const PairMatrices> parts) {
  std::size_t rows = 0, cols = 0;
  for (const auto& p : parts) {
    if (p.size() == 0) continue;
    if (cols != 0 && p.x1.cols() != cols)
      fail(ErrorKind::kDimensionMismatch, "pair matrices of differing widths");
    cols = p.x1.cols();
    rows += p.size();
  }
  PairMatrices out{Matrix(rows, cols), Matrix(rows, cols)};
  std::size_t r = 0;
  for (const auto& p : parts)
    for (std::size_t i = 0; i < p.size(); ++i, ++r) {
      std::copy(p.x1.row(i).begin(), p.x1.row(i).end(), out.x1.row(r).begin());
      std::copy(p.x2.row(i).begin(), p.x2.row(i).end(), out.x2.row(r).begin());
    }
  return out;
}

namespace {

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy(m.row(idx[i]).begin(), m.row(idx[i]).end(), out.row(i).begin());
  return out;
}

}  // namespace

TrainedModel train_model(const ModelConfig& config, const PairMatrices& pairs,
                         std::uint64_t seed) {
  const nn::MlpSpec& spec = config.spec;
  spec.validate();
  if (pairs.size() == 0) fail(ErrorKind::kEmptyPairSet, "no training pairs");
  if (pairs.x1.cols() != spec.input_width() ||
      pairs.x2.cols() != spec.output_width() || !pairs.x1.same_shape(pairs.x2))
    fail(ErrorKind::kDimensionMismatch,
         "pair features have " + std::to_string(pairs.x1.cols()) +
             " dims, model expects " + std::to_string(spec.input_width()));
  if (config.batch_size == 0 || config.epochs < 0)
    fail(ErrorKind::kInvalidSpec, "batch_size must be >= 1 and epochs >= 0");

  TrainedModel model;
  model.config = config;
  model.seed = seed;
  model.params = nn::init_params(spec, derive_seed(seed, {0}));
  auto tensors = model.params.trainable();
  nn::AdamState adam = nn::make_adam_state(tensors);
  adam.lr = config.learning_rate;

  const std::size_t n = pairs.size();
  std::vector<std::size_t> order(n);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, {1, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);

    double weighted = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matrix x1 = gather_rows(pairs.x1, idx);
      const Matrix x2 = gather_rows(pairs.x2, idx);

      auto fw = nn::forward(model.params, spec, x1, nn::Mode::kTrain);
      nn::LossResult total = nn::loss(spec.loss_kind, fw.output, x2);
      if (spec.dual_loss) {
        const nn::LossResult recon = nn::loss(spec.loss_kind, fw.output, x1);
        total.value += recon.value;
        auto g = total.grad.flat();
        auto rg = recon.grad.flat();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += rg[i];
      }
      const nn::Gradients grads =
          nn::backward(fw.cache, model.params, spec, total.grad);
      tensors = model.params.trainable();
      nn::adam_step(tensors, grads, adam);
      weighted += total.value * static_cast<double>(idx.size());
    }
    model.training_log.push_back(weighted / static_cast<double>(n));
  }
  return model;
}

TrainedModel train_model(const ModelConfig& config, const Session& session,
                         const PairSet& pairs, std::uint64_t seed) {
  return train_model(config, pair_matrices(session, pairs), seed);
}

Matrix encode_normalized(const TrainedModel& model, const Matrix& batch) {
  if (batch.cols() != model.config.spec.input_width())
    fail(ErrorKind::kDimensionMismatch,
         "features have " + std::to_string(batch.cols()) +
             " dims, model expects " +
             std::to_string(model.config.spec.input_width()));
  return nn::encode(model.params, model.config.spec, batch);
}

std::vector<double> encode(const TrainedModel& model,
                           std::span<const double> features) {
  Matrix one(1, features.size());
  std::copy(features.begin(), features.end(), one.row(0).begin());
  if (model.norm) {
    if (features.size() != model.norm->dimension())
      fail(ErrorKind::kDimensionMismatch, "features do not match normalizer");
    zscore_apply_inplace(one.row(0), *model.norm);
  }
  const Matrix z = encode_normalized(model, one);
  return {z.row(0).begin(), z.row(0).end()};
}

std::vector<double> encode(const TrainedModel& model, const UnitRecord& unit) {
  return encode(model, unit.features);
}

double ned_abs_diff(std::span<const double> z1, std::span<const double> z2) {
  if (z1.size() != z2.size() || z1.empty())
    fail(ErrorKind::kDimensionMismatch, "ned_abs_diff: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) s += std::abs(z1[i] - z2[i]);
  return s / static_cast<double>(z1.size());
}

double ned_cosine(std::span<const double> z1, std::span<const double> z2) {
  if (z1.size() != z2.size() || z1.empty())
    fail(ErrorKind::kDimensionMismatch, "ned_cosine: dimension mismatch");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) {
    dot += z1[i] * z2[i];
    n1 += z1[i] * z1[i];
    n2 += z2[i] * z2[i];
  }
  if (n1 == 0.0 || n2 == 0.0)
    fail(ErrorKind::kZeroVector, "ned_cosine: zero-norm embedding");
  return std::clamp(dot / (std::sqrt(n1) * std::sqrt(n2)), -1.0, 1.0);
}

double ned(NedMetric metric, std::span<const double> z1,
           std::span<const double> z2) {
  return metric == NedMetric::kAbsDiff ? ned_abs_diff(z1, z2)
                                       : ned_cosine(z1, z2);
}

bool is_closer(Polarity polarity, double consecutive, double baseline) {
  return polarity == Polarity::kLowerIsCloser ? consecutive < baseline
                                              : consecutive > baseline;
}

double score_pair(const TrainedModel& model, const UnitRecord& x1,
                  const UnitRecord& x2) {
  return ned(model.config.ned_metric, encode(model, x1), encode(model, x2));
}

void save_checkpoint(const TrainedModel& model, const fs::path& path) {
  json j{{"format", "ned-entrain-checkpoint"},
         {"version", 1},
         {"preset", to_string(model.config.preset)},
         {"ned_metric", to_string(model.config.ned_metric)},
         {"closeness_polarity", to_string(model.config.closeness_polarity)},
         {"epochs", model.config.epochs},
         {"batch_size", model.config.batch_size},
         {"learning_rate", model.config.learning_rate},
         {"seed", model.seed},
         {"spec", nn::spec_to_json(model.config.spec)},
         {"params", nn::params_to_json(model.params)},
         {"training_log", model.training_log}};
  if (model.norm) {
    std::vector<int> constant(model.norm->constant.begin(),
                              model.norm->constant.end());
    j["norm"] = json{{"mean", model.norm->mean},
                     {"std", model.norm->std},
                     {"constant", constant},
                     {"scope", model.norm->scope == NormScope::kCorpus
                                   ? "CORPUS"
                                   : "SESSION"}};
  } else {
    j["norm"] = nullptr;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump() << '\n';
}

TrainedModel load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kMissingFile, "cannot open " + path.string());
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != "ned-entrain-checkpoint")
      fail(ErrorKind::kSchemaViolation, path.string() + ": not a checkpoint");
    TrainedModel m;
    const auto preset = parse_preset(j.at("preset").get<std::string>());
    if (!preset) fail(ErrorKind::kSchemaViolation, "unknown preset in checkpoint");
    m.config.preset = *preset;
    m.config.ned_metric = j.at("ned_metric").get<std::string>() == "ABS_DIFF"
                              ? NedMetric::kAbsDiff
                              : NedMetric::kCosine;
    m.config.closeness_polarity =
        j.at("closeness_polarity").get<std::string>() == "LOWER_IS_CLOSER"
            ? Polarity::kLowerIsCloser
            : Polarity::kHigherIsCloser;
    m.config.epochs = j.at("epochs").get<int>();
    m.config.batch_size = j.at("batch_size").get<std::size_t>();
    m.config.learning_rate = j.at("learning_rate").get<double>();
    m.config.spec = nn::spec_from_json(j.at("spec"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.params = nn::params_from_json(j.at("params"), m.config.spec);
    m.training_log = j.at("training_log").get<std::vector<double>>();
    if (const auto& nj = j.at("norm"); !nj.is_null()) {
      NormStats st;
      st.mean = nj.at("mean").get<std::vector<double>>();
      st.std = nj.at("std").get<std::vector<double>>();
      for (int c : nj.at("constant").get<std::vector<int>>())
        st.constant.push_back(c != 0);
      st.scope = nj.value("scope", std::string("CORPUS")) == "SESSION"
                     ? NormScope::kSession
                     : NormScope::kCorpus;
      if (st.std.size() != st.mean.size() || st.constant.size() != st.mean.size())
        fail(ErrorKind::kSchemaViolation, "inconsistent normalizer in checkpoint");
      m.norm = std::move(st);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchemaViolation,
         path.string() + ": malformed checkpoint: " + e.what());
  }
}

}  // namespace ned
