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

#include "mtforge/ngram_lm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "mtforge/parallel.hpp"

namespace mtforge {

namespace {

constexpr std::uint32_t kUnkId = 0;
constexpr std::uint32_t kEosId = 1;
constexpr std::uint32_t kBosId = 2;
constexpr std::size_t kShardSize = 512;

void append_id(std::string& key, std::uint32_t id) {
  char buf[4];
  std::memcpy(buf, &id, 4);
  key.append(buf, 4);
}

std::uint32_t id_at(const std::string& key, std::size_t pos) {
  std::uint32_t id;
  std::memcpy(&id, key.data() + 4 * pos, 4);
  return id;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("bad number in LM file: '" + std::string(s) + "'");
  }
  return v;
}

// Per-order counts: n-gram key -> count, and history key -> (total, distinct).
struct Counts {
  std::vector<std::unordered_map<std::string, std::uint64_t>> ngrams;

  explicit Counts(int order) : ngrams(static_cast<std::size_t>(order)) {}

  void merge(const Counts& other) {
    for (std::size_t k = 0; k < ngrams.size(); ++k) {
      for (const auto& [key, c] : other.ngrams[k]) ngrams[k][key] += c;
    }
  }
};

}  // namespace

std::uint32_t NGramLM::intern(const std::string& token) {
  auto [it, inserted] = ids_.try_emplace(token, static_cast<std::uint32_t>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::uint32_t NGramLM::id_or_unk(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end() || it->second == kBosId) return kUnkId;
  return it->second;
}

std::vector<std::string> NGramLM::events() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i != kBosId) out.push_back(tokens_[i]);
  }
  return out;
}

double NGramLM::log_prob_ids(const std::uint32_t* history, std::size_t history_len,
                             std::uint32_t word) const {
  double log_bow = 0.0;
  Key key;
  for (std::size_t start = 0; start <= history_len; ++start) {
    key.clear();
    for (std::size_t i = start; i < history_len; ++i) append_id(key, history[i]);
    const std::size_t hist_bytes = key.size();
    append_id(key, word);
    auto it = log_probs_.find(key);
    if (it != log_probs_.end()) return log_bow + it->second;
    if (hist_bytes > 0) {
      key.resize(hist_bytes);
      auto b = log_bows_.find(key);
      if (b != log_bows_.end()) log_bow += b->second;
    }
  }
  // Every event has a unigram entry, so this is unreachable for valid ids.
  return -std::numeric_limits<double>::infinity();
}

double NGramLM::log_prob(std::span<const std::string> history, const std::string& word) const {
  const std::size_t want = static_cast<std::size_t>(order_ - 1);
  std::vector<std::uint32_t> ids(want, kBosId);
  const std::size_t take = std::min(want, history.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto& tok = history[history.size() - take + i];
    ids[want - take + i] = tok == kBos ? kBosId : id_or_unk(tok);
  }
  return log_prob_ids(ids.data(), ids.size(), id_or_unk(word));
}

double NGramLM::prob(std::span<const std::string> history, const std::string& word) const {
  return std::exp(log_prob(history, word));
}

Sentence NGramLM::prepare(const Sentence& sentence) const {
  if (level_ == Level::Char && sentence.level != Level::Char) return to_char_level(sentence);
  return sentence;
}

double NGramLM::log_likelihood(const Sentence& raw) const {
  const Sentence s = prepare(raw);
  const std::size_t ctx = static_cast<std::size_t>(order_ - 1);
  std::vector<std::uint32_t> ids(ctx, kBosId);
  ids.reserve(ctx + s.size() + 1);
  for (const auto& t : s.tokens) ids.push_back(id_or_unk(t));
  ids.push_back(kEosId);
  double total = 0.0;
  for (std::size_t i = ctx; i < ids.size(); ++i) {
    total += log_prob_ids(ids.data() + i - ctx, ctx, ids[i]);
  }
  return total;
}

double NGramLM::cross_entropy(const Sentence& sentence) const {
  const std::size_t n = prepare(sentence).size() + 1;
  return -log_likelihood(sentence) / static_cast<double>(n);
}

NGramLM train_ngram(std::span<const Sentence> raw, const LmConfig& config, unsigned workers) {
  if (config.order < 1) throw Error("LM order must be >= 1");
  if (raw.empty()) throw Error("cannot train an LM on an empty corpus");

  NGramLM lm;
  lm.order_ = config.order;
  lm.level_ = config.level;
  lm.intern(std::string(kUnk));
  lm.intern(std::string(kEos));
  lm.intern(std::string(kBos));

  std::vector<Sentence> sentences(raw.size());
  parallel_for(raw.size(), workers, [&](std::size_t i) { sentences[i] = lm.prepare(raw[i]); });

  // Vocabulary in first-seen order keeps ids independent of hashing.
  std::unordered_map<std::string, std::uint64_t> freq;
  std::vector<std::string> first_seen;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      if (freq[t]++ == 0) first_seen.push_back(t);
    }
  }
  for (const auto& t : first_seen) {
    if (t != kBos && t != kEos && freq[t] >= config.min_count) lm.intern(t);
  }

  const std::size_t order = static_cast<std::size_t>(config.order);
  const std::size_t shards = (sentences.size() + kShardSize - 1) / kShardSize;
  std::vector<Counts> shard_counts(shards, Counts(config.order));
  parallel_for(shards, workers, [&](std::size_t shard) {
    Counts& counts = shard_counts[shard];
    const std::size_t end = std::min(sentences.size(), (shard + 1) * kShardSize);
    std::vector<std::uint32_t> ids;
    std::string key;
    for (std::size_t s = shard * kShardSize; s < end; ++s) {
      ids.assign(order - 1, kBosId);
      for (const auto& t : sentences[s].tokens) ids.push_back(lm.id_or_unk(t));
      ids.push_back(kEosId);
      for (std::size_t i = order - 1; i < ids.size(); ++i) {
        for (std::size_t k = 1; k <= order; ++k) {
          key.clear();
          for (std::size_t p = i + 1 - k; p <= i; ++p) append_id(key, ids[p]);
          ++counts.ngrams[k - 1][key];
        }
      }
    }
  });
  Counts counts(config.order);
  for (const auto& sc : shard_counts) counts.merge(sc);

  // Histories: total continuations and distinct continuations, per order >= 2.
  std::vector<std::unordered_map<std::string, std::pair<std::uint64_t, std::uint64_t>>> hist(order);
  for (std::size_t k = 2; k <= order; ++k) {
    for (const auto& [key, c] : counts.ngrams[k - 1]) {
      auto& h = hist[k - 1][key.substr(0, key.size() - 4)];
      h.first += c;
      h.second += 1;
    }
  }

  // Unigrams: interpolate with uniform over the events.
  const std::size_t n_events = lm.tokens_.size() - 1;
  std::uint64_t total = 0;
  for (const auto& [key, c] : counts.ngrams[0]) total += c;
  const double distinct = static_cast<double>(counts.ngrams[0].size());
  const double denom = static_cast<double>(total) + distinct;
  for (std::uint32_t id = 0; id < lm.tokens_.size(); ++id) {
    if (id == kBosId) continue;
    std::string key;
    append_id(key, id);
    auto it = counts.ngrams[0].find(key);
    const double c = it == counts.ngrams[0].end() ? 0.0 : static_cast<double>(it->second);
    lm.log_probs_[key] = std::log((c + distinct / static_cast<double>(n_events)) / denom);
  }

  // Higher orders, lowest first so lower-order lookups are complete.
  for (std::size_t k = 2; k <= order; ++k) {
    for (const auto& [hkey, tn] : hist[k - 1]) {
      const double t = static_cast<double>(tn.first);
      const double n = static_cast<double>(tn.second);
      lm.log_bows_[hkey] = std::log(n / (t + n));
    }
    std::vector<std::pair<std::string, double>> entries;
    entries.reserve(counts.ngrams[k - 1].size());
    for (const auto& [key, c] : counts.ngrams[k - 1]) {
      const std::string hkey = key.substr(0, key.size() - 4);
      const auto& tn = hist[k - 1].at(hkey);
      const double t = static_cast<double>(tn.first);
      const double n = static_cast<double>(tn.second);
      std::vector<std::uint32_t> lower;
      for (std::size_t p = 1; p + 1 < k; ++p) lower.push_back(id_at(key, p));
      const double p_low =
          std::exp(lm.log_prob_ids(lower.data(), lower.size(), id_at(key, k - 1)));
      entries.emplace_back(key, std::log((static_cast<double>(c) + n * p_low) / (t + n)));
    }
    for (auto& [key, lp] : entries) lm.log_probs_[key] = lp;
  }
  return lm;
}

NGramLM train_ngram(const Corpus& mono, const LmConfig& config, unsigned workers) {
  std::vector<Sentence> sentences;
  sentences.reserve(mono.size());
  for (const auto& p : mono.pairs) sentences.push_back(p.src);
  return train_ngram(sentences, config, workers);
}

void NGramLM::write(std::ostream& out) const {
  out << "#mtforge-lm order=" << order_ << " level=" << to_string(level_) << '\n';
  struct Line {
    std::size_t n;
    std::string text;
    double log_prob;
    double log_bow;
  };
  std::unordered_map<Key, Line> lines;
  auto text_of = [&](const Key& key) {
    std::string text;
    for (std::size_t i = 0; i < key.size() / 4; ++i) {
      if (i) text += ' ';
      text += tokens_[id_at(key, i)];
    }
    return text;
  };
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (const auto& [key, lp] : log_probs_) {
    lines[key] = Line{key.size() / 4, text_of(key), lp, 0.0};
  }
  for (const auto& [key, lb] : log_bows_) {
    auto it = lines.find(key);
    if (it == lines.end()) {
      lines[key] = Line{key.size() / 4, text_of(key), neg_inf, lb};
    } else {
      it->second.log_bow = lb;
    }
  }
  std::vector<const Line*> sorted;
  sorted.reserve(lines.size());
  for (const auto& [key, line] : lines) sorted.push_back(&line);
  std::sort(sorted.begin(), sorted.end(), [](const Line* a, const Line* b) {
    return a->n != b->n ? a->n < b->n : a->text < b->text;
  });
  for (const Line* l : sorted) {
    out << format_double(l->log_prob) << '\t' << l->text << '\t' << format_double(l->log_bow) << '\n';
  }
  out << "#end\n";
}

NGramLM NGramLM::read(std::istream& in) {
  NGramLM lm;
  std::string line;
  if (!std::getline(in, line) || line.rfind("#mtforge-lm ", 0) != 0) {
    throw Error("not an mtforge LM file (missing header)");
  }
  {
    std::istringstream header(line.substr(12));
    std::string field;
    while (header >> field) {
      auto eq = field.find('=');
      if (eq == std::string::npos) throw Error("bad LM header field: " + field);
      const auto name = field.substr(0, eq);
      const auto value = field.substr(eq + 1);
      if (name == "order") {
        lm.order_ = std::stoi(value);
      } else if (name == "level") {
        lm.level_ = level_from_string(value);
      }
    }
  }
  lm.intern(std::string(kUnk));
  lm.intern(std::string(kEos));
  lm.intern(std::string(kBos));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line == "#end") return lm;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw Error("LM line " + std::to_string(line_no) + ": expected 3 fields");
    const double lp = parse_double(std::string_view(line).substr(0, t1));
    const double lb = parse_double(std::string_view(line).substr(t2 + 1));
    const Sentence gram = split_words(std::string_view(line).substr(t1 + 1, t2 - t1 - 1));
    if (gram.empty() || gram.size() > static_cast<std::size_t>(lm.order_)) {
      throw Error("LM line " + std::to_string(line_no) + ": bad n-gram length");
    }
    Key key;
    for (const auto& t : gram.tokens) append_id(key, lm.intern(t));
    if (std::isfinite(lp)) lm.log_probs_[key] = lp;
    if (lb != 0.0 || !std::isfinite(lp)) lm.log_bows_[key] = lb;
  }
  return lm;
}

void NGramLM::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  write(out);
  if (!out) throw Error("write failed: " + path.string());
}

NGramLM NGramLM::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  return read(in);
}

Corpus score_corpus(const NGramLM& lm, Corpus corpus, Which side, const std::string& name,
                    unsigned workers) {
  parallel_for(corpus.size(), workers, [&](std::size_t i) {
    auto& p = corpus.pairs[i];
    p.scores[name] = lm.cross_entropy(side == Which::Src ? p.src : p.tgt);
  });
  return corpus;
}

}  // namespace mtforge
