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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mtforge {

/// Raised on bad input data (malformed files, missing scores, mismatched
/// corpora). The CLI maps it to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Level { Word, Char, Subword };

std::string_view to_string(Level level);
Level level_from_string(std::string_view name);

/// A whitespace-free token sequence.
struct Sentence {
  std::vector<std::string> tokens;
  Level level = Level::Word;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const Sentence& other) const = default;
};

/// Splits on ASCII whitespace. Tokenization proper happens upstream.
Sentence split_words(std::string_view line, Level level = Level::Word);
std::string join(const Sentence& sentence, std::string_view sep = " ");

/// Re-expresses a sentence as its Unicode characters (spaces between words are dropped).
Sentence to_char_level(const Sentence& sentence);

struct SentencePair {
  std::uint64_t id = 0;
  Sentence src;
  Sentence tgt;
  std::map<std::string, std::string> tags;
  std::map<std::string, double> scores;

  bool operator==(const SentencePair& other) const = default;

  double score(const std::string& name) const;
};

enum class Side { Bilingual, SrcMono, TgtMono };

/// Ordered pairs with strictly increasing ids. Monolingual corpora keep their
/// sentences in `src`, whichever language side they represent.
struct Corpus {
  Side side = Side::Bilingual;
  std::vector<SentencePair> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  bool operator==(const Corpus& other) const = default;

  static Corpus from_lines(std::span<const std::string> lines, Side side = Side::SrcMono);
};

enum class CorpusFormat { TwoFile, Tsv, Jsonl, Text };

CorpusFormat format_from_string(std::string_view name);

/// Two-file reads {src, tgt}; Text reads one monolingual file; Tsv and Jsonl
/// read a single file. Ids are positional except for Jsonl records that carry one.
Corpus read_corpus(std::span<const std::filesystem::path> paths, CorpusFormat format);
void write_corpus(const Corpus& corpus, std::span<const std::filesystem::path> paths,
                  CorpusFormat format);

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

nlohmann::json to_json(const SentencePair& pair);
SentencePair pair_from_json(const nlohmann::json& j);

/// Deterministic generator. Per-item streams are derived from (seed, item id) so
/// data-parallel maps do not depend on how work is split across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

  static Rng for_item(std::uint64_t seed, std::uint64_t item) {
    return Rng(mix(seed) ^ mix(item + 0x9e3779b97f4a7c15ULL));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return p > 0.0 && uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

template <class T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.below(i)]);
  }
}

/// Per-stage accounting. Every stage must satisfy in = out + sum(drops).
struct RunReport {
  std::string stage;
  std::uint64_t count_in = 0;
  std::uint64_t count_out = 0;
  std::map<std::string, std::uint64_t> drops;
  double wall_time_s = 0.0;
  nlohmann::json extra = nlohmann::json::object();

  std::uint64_t total_drops() const;
  bool balanced() const { return count_in == count_out + total_drops(); }
  nlohmann::json to_json() const;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace mtforge
