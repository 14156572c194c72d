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

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mtforge/core.hpp"

namespace mtforge {

/// Marks the last unit of a word.
inline constexpr std::string_view kWordEnd = "</w>";

inline constexpr std::size_t kDefaultBpeMerges = 40000;

class BpeModel {
 public:
  BpeModel() = default;
  explicit BpeModel(std::vector<std::pair<std::string, std::string>> merges,
                    std::set<std::string> alphabet = {});

  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }
  /// Units the model can produce: the training alphabet plus every merge result.
  const std::set<std::string>& vocab() const { return vocab_; }

  /// Rank of a merge, or npos if the pair is not a learned merge.
  std::size_t rank(const std::string& left, const std::string& right) const;

  /// Segments one word: characters with </w> on the last, then merges applied
  /// in learned order until none applies.
  std::vector<std::string> segment(std::string_view word) const;

  /// "#version: mtforge-bpe 1" then one "left right" merge per line.
  void save(const std::filesystem::path& path) const;
  static BpeModel load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> merges_;
  std::unordered_map<std::string, std::size_t> ranks_;
  std::set<std::string> vocab_;
};

/// Learns up to `merges` merges, each time joining the most frequent adjacent
/// pair (ties: lexicographically smallest pair). Stops early once no pair
/// occurs at least twice.
BpeModel bpe_learn(std::span<const Sentence> sentences, std::size_t merges);

Sentence bpe_apply(const BpeModel& model, const Sentence& sentence);
/// Concatenates units and ends a word at each </w>.
Sentence bpe_decode(const Sentence& sentence);

}  // namespace mtforge
