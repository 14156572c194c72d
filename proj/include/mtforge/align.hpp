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

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mtforge/core.hpp"

namespace mtforge {

/// Source-side token that absorbs unaligned target words.
inline constexpr std::string_view kNullToken = "<eps>";

struct AlignConfig {
  int iterations = 5;
  double p0 = 0.08;
  double tension = 4.0;
  bool optimize_tension = true;
  /// First iteration (1-based) whose M-step also updates the tension.
  int optimize_from = 2;
};

/// Alignment link: source position i, target position j (both 0-based).
struct Link {
  std::size_t src;
  std::size_t tgt;
  bool operator==(const Link&) const = default;
  auto operator<=>(const Link&) const = default;
};

/// Diagonal-favoring reparameterization of IBM Model 2.
///
/// Target word j of n aligns to source word i of m with prior
///   p(a_j = i) = (1 - p0) * exp(-tension * |i/m - j/n|) / Z_j   (i, j 1-based)
///   p(a_j = NULL) = p0
/// and emits e_j with probability t(e_j | f_{a_j}).
class AlignmentModel {
 public:
  double tension() const { return tension_; }
  double p0() const { return p0_; }

  /// t(e | f); f may be kNullToken. Unknown entries get a 1e-9 floor.
  double t(const std::string& e, const std::string& f) const;

  /// Sum over e of t(e | f) for a known f (1 after training).
  double row_sum(const std::string& f) const;
  std::vector<std::string> source_vocab() const;

  /// Prior over source positions 0..m-1 for target position j of n (NULL excluded).
  std::vector<double> position_prior(std::size_t j, std::size_t m, std::size_t n) const;

  /// Mean per-target-token marginal log-likelihood, in nats. Throws on an empty target.
  double score(const Sentence& src, const Sentence& tgt) const;

  /// Per-target argmax of prior * t; NULL wins only if strictly better.
  /// Ties between source positions go to the smallest i.
  std::vector<Link> viterbi(const Sentence& src, const Sentence& tgt) const;

  /// Corpus log-likelihood at the start of each EM iteration.
  const std::vector<double>& log_likelihood_trace() const { return ll_trace_; }

  /// Header line with p0 and tension, then sorted `f<TAB>e<TAB>prob` lines.
  void save(const std::filesystem::path& path) const;
  static AlignmentModel load(const std::filesystem::path& path);

 private:
  friend AlignmentModel train_align(const Corpus&, const AlignConfig&, unsigned);

  struct Entry {
    std::uint32_t e;
    double prob;
  };

  std::uint32_t src_id(const std::string& f) const;
  std::uint32_t tgt_id(const std::string& e) const;
  double lookup(std::uint32_t f, std::uint32_t e) const;
  std::size_t entry_index(std::uint32_t f, std::uint32_t e) const;

  double tension_ = 4.0;
  double p0_ = 0.08;
  std::vector<std::string> src_tokens_;  // id 0 is NULL
  std::vector<std::string> tgt_tokens_;
  std::unordered_map<std::string, std::uint32_t> src_ids_;
  std::unordered_map<std::string, std::uint32_t> tgt_ids_;
  /// Row f occupies rows_[row_start_[f] .. row_start_[f+1]), sorted by e.
  std::vector<std::size_t> row_start_;
  std::vector<Entry> rows_;
  std::vector<double> ll_trace_;
};

/// EM training. Each iteration's log-likelihood must not fall below the
/// previous one (relative tolerance 1e-9); a violation throws.
AlignmentModel train_align(const Corpus& corpus, const AlignConfig& config, unsigned workers = 1);

/// Swaps source and target of every pair.
Corpus swap_sides(Corpus corpus);

double align_score(const AlignmentModel& model, const SentencePair& pair);
/// Mean of the forward score and the reverse model's score on the swapped pair.
double align_score_symmetric(const AlignmentModel& forward, const AlignmentModel& reverse,
                             const SentencePair& pair);

/// Pharaoh format: "i-j" separated by spaces.
std::string to_pharaoh(const std::vector<Link>& links);

}  // namespace mtforge
