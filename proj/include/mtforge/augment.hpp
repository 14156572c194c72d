// Copyright 2026 The mtforge Authors
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

#include <span>
#include <string>

#include "mtforge/core.hpp"
#include "mtforge/ngram_lm.hpp"

namespace mtforge {

struct NoiseConfig {
  double p_drop = 0.05;
  double p_blank = 0.05;
  double p_swap = 0.05;
  std::string filler = "<BLANK>";
  std::uint64_t seed = 0;

  void validate() const;
};

/// What add_noise did to one sentence.
struct NoiseStats {
  std::size_t dropped = 0;
  std::size_t blanked = 0;
  std::size_t swapped = 0;
  std::size_t swap_trials = 0;
};

/// Three passes in fixed order: drop each token with p_drop; replace each
/// survivor by the filler with p_blank; then walk left to right and swap the
/// token at each position with its right neighbor with p_swap.
Sentence add_noise(const Sentence& sentence, const NoiseConfig& config, Rng& rng,
                   NoiseStats* stats = nullptr);

/// Uses the stream derived from (config.seed, sentence_id).
Sentence add_noise(const Sentence& sentence, const NoiseConfig& config, std::uint64_t sentence_id,
                   NoiseStats* stats = nullptr);

/// Noises one side of every pair; the stream of pair p is (seed, p.id).
Corpus noise_corpus(Corpus corpus, const NoiseConfig& config, Which side, unsigned workers = 1);

/// Reverses source token order; targets untouched.
Corpus reverse_source(Corpus corpus);

inline constexpr double kDefaultKdThreshold = 28.0;

/// Keeps pairs whose hypothesis (the target side) has smoothed sentence BLEU
/// >= threshold against the matching reference. Pairs with an empty reference
/// drop as "empty-ref"; the rest as "low-bleu". Kept pairs carry scores["sent-bleu"].
std::pair<Corpus, RunReport> kd_filter(const Corpus& hypotheses, std::span<const Sentence> references,
                                       double threshold = kDefaultKdThreshold, unsigned workers = 1);

}  // namespace mtforge
