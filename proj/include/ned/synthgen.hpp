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

// Synthetic dyadic sessions with a tunable entrainment coupling. Each turn's
// feature vector is
//
//   x_t = style(speaker) + latent_t,  latent_t = rho * latent_{t-1} + noise * e_t
//
// where latent_{t-1} belongs to the previous (other-speaker) turn and e_t is
// standard normal. In ONE_WAY_HM mode the machine's latents ignore the
// human (rho applies only to human turns).

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "json.hpp"
#include "ned/corpus.hpp"

namespace ned {

enum class GenMode { kSymmetricHH, kOneWayHM };

struct GenSpec {
  std::size_t num_sessions = 1;
  std::size_t turns_per_session = 4;
  std::size_t dim = 64;
  double coupling = 0.0;
  double speaker_offset_scale = 1.0;
  double noise_scale = 1.0;
  GenMode mode = GenMode::kSymmetricHH;
  std::uint64_t seed = 0;
  // 0 emits TURN units; n > 0 splits every turn into n IPUs.
  std::size_t ipus_per_turn = 0;
  // Per-IPU jitter around the turn vector, relative to noise_scale.
  double ipu_noise_scale = 0.0;

  // Throws InvalidSpec.
  void validate() const;
};

GenSpec gen_spec_from_json(const nlohmann::json& j);
nlohmann::json gen_spec_to_json(const GenSpec& spec);

Corpus generate_corpus(const GenSpec& spec);

struct OracleBand {
  double accuracy = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t pairs = 0;
};

// Accuracy of a model-free classifier on raw generated features (mean
// absolute difference, lower is closer, one random non-consecutive turn),
// simulated over at least `min_pairs` consecutive pairs. The band is the
// estimate +/- 3 binomial standard errors.
OracleBand oracle_accuracy(const GenSpec& spec,
                           Direction direction = Direction::kAny,
                           std::size_t min_pairs = 10000);

}  // namespace ned
