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
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtforge/core.hpp"

namespace mtforge {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

struct LmConfig {
  int order = 3;
  Level level = Level::Word;
  std::uint64_t min_count = 2;
};

/// Interpolated Witten-Bell n-gram model in backoff form.
///
/// For a history h seen in training with C(h) tokens following it and N(h)
/// distinct continuations,
///
///   p(w | h) = (c(h, w) + N(h) * p(w | h')) / (C(h) + N(h))
///
/// where h' drops the oldest word. The recursion ends in a unigram distribution
/// interpolated with the uniform distribution over the predicted events
/// (vocabulary plus </s> and <unk>). Seen n-grams store the interpolated
/// probability; histories store bow(h) = N(h) / (C(h) + N(h)), so unseen events
/// are p(w | h) = bow(h) * p(w | h'). All logs are natural.
class NGramLM {
 public:
  NGramLM() = default;

  int order() const { return order_; }
  Level level() const { return level_; }

  /// Predicted events: every vocabulary word, </s> and <unk>. Excludes <s>.
  std::vector<std::string> events() const;
  bool in_vocab(const std::string& token) const { return ids_.contains(token); }

  /// p(word | history). Only the last order-1 history tokens are used; a
  /// history shorter than that is left-padded with <s>. OOV maps to <unk>.
  double prob(std::span<const std::string> history, const std::string& word) const;
  double log_prob(std::span<const std::string> history, const std::string& word) const;

  /// Total natural-log probability of the sentence including </s>.
  double log_likelihood(const Sentence& sentence) const;

  /// -(1/N) sum log p(w_i | history), N = |sentence| + 1. Word sentences are
  /// converted to characters first when the model is character-level.
  double cross_entropy(const Sentence& sentence) const;

  /// Converts a sentence to this model's level.
  Sentence prepare(const Sentence& sentence) const;

  void write(std::ostream& out) const;
  static NGramLM read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static NGramLM load(const std::filesystem::path& path);

 private:
  friend NGramLM train_ngram(std::span<const Sentence>, const LmConfig&, unsigned);

  using Key = std::string;  // packed 32-bit ids

  std::uint32_t id_or_unk(const std::string& token) const;
  std::uint32_t intern(const std::string& token);
  double log_prob_ids(const std::uint32_t* history, std::size_t history_len, std::uint32_t word) const;

  int order_ = 1;
  Level level_ = Level::Word;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::unordered_map<Key, double> log_probs_;
  std::unordered_map<Key, double> log_bows_;
};

/// Pads each sentence with order-1 <s> and one </s>. Tokens seen fewer than
/// min_count times become <unk>. Counting is sharded over `workers`; the
/// result does not depend on the worker count.
NGramLM train_ngram(std::span<const Sentence> sentences, const LmConfig& config, unsigned workers = 1);
NGramLM train_ngram(const Corpus& mono, const LmConfig& config, unsigned workers = 1);

enum class Which { Src, Tgt };

/// Attaches cross_entropy of the chosen side as scores[name].
Corpus score_corpus(const NGramLM& lm, Corpus corpus, Which side, const std::string& name,
                    unsigned workers = 1);

}  // namespace mtforge
