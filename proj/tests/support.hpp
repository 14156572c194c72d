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

#include <unistd.h>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mtforge/core.hpp"

namespace mtforge::testing {

inline Sentence words(const std::string& text) { return split_words(text); }

inline SentencePair pair_of(std::uint64_t id, const std::string& src, const std::string& tgt) {
  SentencePair p;
  p.id = id;
  p.src = split_words(src);
  p.tgt = split_words(tgt);
  return p;
}

inline Corpus bilingual(const std::vector<std::pair<std::string, std::string>>& rows) {
  Corpus c;
  c.side = Side::Bilingual;
  for (std::size_t i = 0; i < rows.size(); ++i) c.pairs.push_back(pair_of(i, rows[i].first, rows[i].second));
  return c;
}

inline Corpus mono(const std::vector<std::string>& lines) {
  Corpus c;
  c.side = Side::SrcMono;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    SentencePair p;
    p.id = i;
    p.src = split_words(lines[i]);
    c.pairs.push_back(std::move(p));
  }
  return c;
}

inline std::vector<Sentence> sentences(const std::vector<std::string>& lines) {
  std::vector<Sentence> out;
  for (const auto& l : lines) out.push_back(split_words(l));
  return out;
}

/// A fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mtforge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Word drawn uniformly from w0 .. w{vocab-1}.
inline std::string random_word(Rng& rng, std::size_t vocab, const std::string& prefix = "w") {
  return prefix + std::to_string(rng.below(vocab));
}

inline Sentence random_sentence(Rng& rng, std::size_t min_len, std::size_t max_len, std::size_t vocab,
                                const std::string& prefix = "w") {
  Sentence s;
  const std::size_t n = min_len + rng.below(max_len - min_len + 1);
  for (std::size_t i = 0; i < n; ++i) s.tokens.push_back(random_word(rng, vocab, prefix));
  return s;
}

}  // namespace mtforge::testing
