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

// Entrainment model presets, training on cross-speaker pairs, and the
// neural entrainment distance (NED) between bottleneck embeddings.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ned/corpus.hpp"
#include "ned/features.hpp"
#include "ned/matrix.hpp"
#include "ned/nn.hpp"

namespace ned {

enum class Preset { kLldAuditory, kTrillAuditory, kSentSemantic, kUseSemantic };
enum class NedMetric { kAbsDiff, kCosine };
enum class Polarity { kLowerIsCloser, kHigherIsCloser };

std::string_view to_string(Preset p);
std::string_view short_name(Preset p);  // lld, trill, sent, use
std::optional<Preset> parse_preset(std::string_view s);  // either form
std::string_view to_string(NedMetric m);
std::string_view to_string(Polarity p);

struct ModelConfig {
  Preset preset = Preset::kLldAuditory;
  nn::MlpSpec spec;
  NedMetric ned_metric = NedMetric::kAbsDiff;
  Polarity closeness_polarity = Polarity::kLowerIsCloser;
  int epochs = 10;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
};

// Preset topology and metric. With `input_dim` set, the outer widths are
// replaced so the preset can run on features of another width (synthetic
// corpora); hidden widths and the bottleneck are kept.
ModelConfig make_config(Preset preset,
                        std::optional<std::size_t> input_dim = std::nullopt);

struct TrainedModel {
  ModelConfig config;
  nn::ModelParams params;
  std::vector<double> training_log;  // mean loss per epoch
  std::uint64_t seed = 0;
  // Applied to raw features before the encoder when present.
  std::optional<NormStats> norm;
};

// Row-aligned first/second units of a set of pairs.
struct PairMatrices {
  Matrix x1;
  Matrix x2;
  std::size_t size() const { return x1.rows(); }
};

PairMatrices pair_matrices(const Session& session, const PairSet& pairs,
                           const NormStats* norm = nullptr);
PairMatrices concat(std::span<const PairMatrices> parts);

// Mini-batch Adam training. Mapping loss L(x~1, x2) only, or
// L(x~1, x1) + L(x~1, x2) when the spec asks for the dual loss. Batches are
// reshuffled every epoch from a seed derived from (seed, epoch).
TrainedModel train_model(const ModelConfig& config, const PairMatrices& pairs,
                         std::uint64_t seed);
TrainedModel train_model(const ModelConfig& config, const Session& session,
                         const PairSet& pairs, std::uint64_t seed);

// Bottleneck embedding of one feature vector (raw; normalized internally).
std::vector<double> encode(const TrainedModel& model,
                           std::span<const double> features);
std::vector<double> encode(const TrainedModel& model, const UnitRecord& unit);
// Row-wise embeddings of already-normalized inputs.
Matrix encode_normalized(const TrainedModel& model, const Matrix& batch);

// Mean absolute difference.
double ned_abs_diff(std::span<const double> z1, std::span<const double> z2);
// Cosine similarity; larger means closer.
double ned_cosine(std::span<const double> z1, std::span<const double> z2);
double ned(NedMetric metric, std::span<const double> z1,
           std::span<const double> z2);

// Whether `consecutive` is strictly closer than `baseline`. Ties are not.
bool is_closer(Polarity polarity, double consecutive, double baseline);

double score_pair(const TrainedModel& model, const UnitRecord& x1,
                  const UnitRecord& x2);

void save_checkpoint(const TrainedModel& model,
                     const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace ned
