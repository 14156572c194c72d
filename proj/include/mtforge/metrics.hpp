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

#include <array>
#include <cstdint>
#include <span>

#include "json.hpp"
#include "mtforge/core.hpp"

namespace mtforge {

inline constexpr int kBleuOrder = 4;

/// Sufficient statistics for single-reference BLEU. Additive across sentences.
struct BleuStats {
  std::array<std::uint64_t, kBleuOrder> matches{};
  std::array<std::uint64_t, kBleuOrder> totals{};
  std::uint64_t hyp_len = 0;
  std::uint64_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& other);
  bool operator==(const BleuStats& other) const = default;
};

struct BleuResult {
  double bleu = 0.0;
  std::array<double, kBleuOrder> precisions{};  // percentages
  double bp = 0.0;
  std::uint64_t hyp_len = 0;
  std::uint64_t ref_len = 0;

  nlohmann::json to_json() const;
};

/// Clipped n-gram matches for n = 1..4. Case-sensitive, on the given tokens.
BleuStats bleu_stats(std::span<const std::string> hyp, std::span<const std::string> ref);
inline BleuStats bleu_stats(const Sentence& hyp, const Sentence& ref) {
  return bleu_stats(hyp.tokens, ref.tokens);
}

/// Corpus BLEU from already-summed statistics. An order with no matches (or no
/// candidate n-grams at all) makes the score 0.
BleuResult corpus_bleu(const BleuStats& total);
/// Sums the per-sentence statistics first; throws on an empty list.
BleuResult corpus_bleu(std::span<const BleuStats> stats);

/// Corpus BLEU over aligned hypothesis/reference lists.
double corpus_bleu(std::span<const Sentence> hyps, std::span<const Sentence> refs);

/// Sentence BLEU with add-one smoothing of orders 2..4. Empty hypothesis scores 0.
double sentence_bleu(const Sentence& hyp, const Sentence& ref);

}  // namespace mtforge
