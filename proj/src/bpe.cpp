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

#include "mtforge/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <unordered_set>

#include "mtforge/utf8.hpp"

namespace mtforge {

namespace {

std::string pair_key(const std::string& left, const std::string& right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key += left;
  key += '\x1f';
  key += right;
  return key;
}

std::vector<std::string> initial_units(std::string_view word) {
  auto units = utf8::chars(word);
  if (!units.empty()) units.back() += kWordEnd;
  return units;
}

using SymbolPair = std::uint64_t;

SymbolPair make_pair_id(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

struct Word {
  std::vector<std::uint32_t> symbols;
  std::uint64_t count = 0;
};

class Learner {
 public:
  explicit Learner(std::span<const Sentence> sentences) {
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const auto& s : sentences) {
      for (const auto& t : s.tokens) ++freq[t];
    }
    std::vector<std::pair<std::string, std::uint64_t>> sorted(freq.begin(), freq.end());
    std::sort(sorted.begin(), sorted.end());
    words_.reserve(sorted.size());
    for (const auto& [text, count] : sorted) {
      Word w;
      w.count = count;
      for (const auto& u : initial_units(text)) w.symbols.push_back(intern(u));
      words_.push_back(std::move(w));
    }
    for (const auto& s : symbols_) alphabet_.insert(s);
    for (std::uint32_t wi = 0; wi < words_.size(); ++wi) add_pairs(wi, +1);
    for (const auto& [p, c] : pair_counts_) push(p);
  }

  BpeModel run(std::size_t max_merges) {
    std::vector<std::pair<std::string, std::string>> merges;
    while (merges.size() < max_merges && !heap_.empty()) {
      const auto top = heap_.top();
      heap_.pop();
      auto it = pair_counts_.find(top.pair);
      if (it == pair_counts_.end() || it->second != top.count) continue;  // stale
      if (top.count < 2) break;
      const std::uint32_t a = static_cast<std::uint32_t>(top.pair >> 32);
      const std::uint32_t b = static_cast<std::uint32_t>(top.pair & 0xffffffffu);
      merges.emplace_back(symbols_[a], symbols_[b]);
      merge(a, b);
    }
    return BpeModel(std::move(merges), alphabet_);
  }

 private:
  struct HeapEntry {
    std::int64_t count;
    SymbolPair pair;
  };

  struct HeapOrder {
    const std::vector<std::string>* symbols;
    // priority_queue pops the largest: higher count, then smaller (left, right).
    bool operator()(const HeapEntry& x, const HeapEntry& y) const {
      if (x.count != y.count) return x.count < y.count;
      const auto& xl = (*symbols)[x.pair >> 32];
      const auto& yl = (*symbols)[y.pair >> 32];
      if (xl != yl) return xl > yl;
      return (*symbols)[x.pair & 0xffffffffu] > (*symbols)[y.pair & 0xffffffffu];
    }
  };

  std::uint32_t intern(const std::string& s) {
    auto [it, inserted] = ids_.try_emplace(s, static_cast<std::uint32_t>(symbols_.size()));
    if (inserted) symbols_.push_back(s);
    return it->second;
  }

  void push(SymbolPair p) {
    const auto c = pair_counts_[p];
    if (c > 0) heap_.push({c, p});
  }

  void add_pairs(std::uint32_t wi, int sign) {
    const Word& w = words_[wi];
    for (std::size_t k = 0; k + 1 < w.symbols.size(); ++k) {
      const SymbolPair p = make_pair_id(w.symbols[k], w.symbols[k + 1]);
      pair_counts_[p] += sign * static_cast<std::int64_t>(w.count);
      if (sign > 0) where_[p].push_back(wi);
      touched_.insert(p);
    }
  }

  void merge(std::uint32_t a, std::uint32_t b) {
    const std::uint32_t ab = intern(symbols_[a] + symbols_[b]);
    const SymbolPair target = make_pair_id(a, b);
    auto occurrences = std::move(where_[target]);
    where_.erase(target);
    std::sort(occurrences.begin(), occurrences.end());
    occurrences.erase(std::unique(occurrences.begin(), occurrences.end()), occurrences.end());
    touched_.clear();
    for (std::uint32_t wi : occurrences) {
      Word& w = words_[wi];
      bool present = false;
      for (std::size_t k = 0; k + 1 < w.symbols.size(); ++k) {
        if (w.symbols[k] == a && w.symbols[k + 1] == b) {
          present = true;
          break;
        }
      }
      if (!present) continue;  // stale index entry
      add_pairs(wi, -1);
      std::vector<std::uint32_t> merged;
      merged.reserve(w.symbols.size());
      for (std::size_t k = 0; k < w.symbols.size(); ++k) {
        if (k + 1 < w.symbols.size() && w.symbols[k] == a && w.symbols[k + 1] == b) {
          merged.push_back(ab);
          ++k;
        } else {
          merged.push_back(w.symbols[k]);
        }
      }
      w.symbols = std::move(merged);
      add_pairs(wi, +1);
    }
    for (SymbolPair p : touched_) {
      auto it = pair_counts_.find(p);
      if (it != pair_counts_.end() && it->second <= 0) {
        pair_counts_.erase(it);
      } else {
        push(p);
      }
    }
    pair_counts_.erase(target);
  }

  std::vector<Word> words_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::set<std::string> alphabet_;
  std::unordered_map<SymbolPair, std::int64_t> pair_counts_;
  std::unordered_map<SymbolPair, std::vector<std::uint32_t>> where_;
  std::unordered_set<SymbolPair> touched_;
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapOrder> heap_{HeapOrder{&symbols_}};
};

}  // namespace

BpeModel::BpeModel(std::vector<std::pair<std::string, std::string>> merges,
                   std::set<std::string> alphabet)
    : merges_(std::move(merges)), vocab_(std::move(alphabet)) {
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& [l, rr] = merges_[r];
    ranks_.try_emplace(pair_key(l, rr), r);
    vocab_.insert(l);
    vocab_.insert(rr);
    vocab_.insert(l + rr);
  }
}

std::size_t BpeModel::rank(const std::string& left, const std::string& right) const {
  auto it = ranks_.find(pair_key(left, right));
  return it == ranks_.end() ? std::string::npos : it->second;
}

std::vector<std::string> BpeModel::segment(std::string_view word) const {
  auto units = initial_units(word);
  while (units.size() > 1) {
    std::size_t best_rank = std::string::npos;
    std::size_t best_pos = 0;
    for (std::size_t k = 0; k + 1 < units.size(); ++k) {
      const std::size_t r = rank(units[k], units[k + 1]);
      if (r < best_rank) {
        best_rank = r;
        best_pos = k;
      }
    }
    if (best_rank == std::string::npos) break;
    const std::string left = units[best_pos];
    const std::string right = units[best_pos + 1];
    std::vector<std::string> merged;
    merged.reserve(units.size());
    for (std::size_t k = 0; k < units.size(); ++k) {
      if (k + 1 < units.size() && units[k] == left && units[k + 1] == right) {
        merged.push_back(left + right);
        ++k;
      } else {
        merged.push_back(std::move(units[k]));
      }
    }
    units = std::move(merged);
  }
  return units;
}

BpeModel bpe_learn(std::span<const Sentence> sentences, std::size_t merges) {
  return Learner(sentences).run(merges);
}

Sentence bpe_apply(const BpeModel& model, const Sentence& sentence) {
  Sentence out;
  out.level = Level::Subword;
  for (const auto& word : sentence.tokens) {
    for (auto& u : model.segment(word)) out.tokens.push_back(std::move(u));
  }
  return out;
}

Sentence bpe_decode(const Sentence& sentence) {
  Sentence out;
  out.level = Level::Word;
  std::string current;
  bool open = false;
  for (const auto& unit : sentence.tokens) {
    if (unit.size() >= kWordEnd.size() &&
        unit.compare(unit.size() - kWordEnd.size(), kWordEnd.size(), kWordEnd) == 0) {
      current.append(unit, 0, unit.size() - kWordEnd.size());
      out.tokens.push_back(std::move(current));
      current.clear();
      open = false;
    } else {
      current += unit;
      open = true;
    }
  }
  if (open) out.tokens.push_back(std::move(current));
  return out;
}

void BpeModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << "#version: mtforge-bpe 1\n";
  for (const auto& [l, r] : merges_) out << l << ' ' << r << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "#version: mtforge-bpe 1") {
    throw Error("not an mtforge BPE model: " + path.string());
  }
  std::vector<std::pair<std::string, std::string>> merges;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto parts = split_words(lines[i]);
    if (parts.size() != 2) {
      throw Error(path.string() + ":" + std::to_string(i + 1) + ": expected 'left right'");
    }
    merges.emplace_back(parts.tokens[0], parts.tokens[1]);
  }
  return BpeModel(std::move(merges));
}

}  // namespace mtforge
