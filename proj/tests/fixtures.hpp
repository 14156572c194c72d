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
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mtforge/core.hpp"
#include "mtforge/decode.hpp"
#include "mtforge/metrics.hpp"
#include "mtforge/select.hpp"
#include "support.hpp"
#include "mtforge/filter.hpp"
#include "mtforge/langid.hpp"

namespace mtforge::testing {

inline const std::vector<std::string>& zh_chars() {
  static const std::vector<std::string> chars{"我", "你", "他", "们", "是", "的", "在", "有", "这", "个",
                                              "人", "中", "国", "大", "来", "上", "时", "和", "年", "说",
                                              "要", "就", "出", "会", "可", "也", "对", "生", "能", "而"};
  return chars;
}

inline const std::vector<std::string>& en_words() {
  static const std::vector<std::string> words{
      "the",   "of",    "and",  "to",     "in",    "is",    "that",  "for",  "it",    "was",
      "on",    "with",  "he",   "as",     "you",   "at",    "be",    "this", "have",  "from",
      "or",    "one",   "had",  "by",     "word",  "but",   "not",   "what", "all",   "were",
      "we",    "when",  "your", "can",    "said",  "there", "use",   "an",   "each",  "which",
      "she",   "do",    "how",  "their",  "if",    "will",  "up",    "other", "about", "out"};
  return words;
}

/// Chinese-looking sentence of n tokens, each one or two characters.
inline Sentence zh_sentence(Rng& rng, std::size_t n) {
  Sentence s;
  const auto& cs = zh_chars();
  for (std::size_t i = 0; i < n; ++i) {
    std::string tok = cs[rng.below(cs.size())];
    if (rng.bernoulli(0.5)) tok += cs[rng.below(cs.size())];
    s.tokens.push_back(std::move(tok));
  }
  return s;
}

inline Sentence en_sentence(Rng& rng, std::size_t n) {
  Sentence s;
  const auto& ws = en_words();
  for (std::size_t i = 0; i < n; ++i) s.tokens.push_back(ws[rng.below(ws.size())]);
  return s;
}

/// Two-language identifier trained on the generators above.
inline std::shared_ptr<const LangIdModel> toy_langid() {
  static const auto model = [] {
    Rng rng(2024);
    std::map<std::string, std::vector<Sentence>> data;
    for (int i = 0; i < 300; ++i) {
      data["zh"].push_back(zh_sentence(rng, 4 + rng.below(10)));
      data["en"].push_back(en_sentence(rng, 4 + rng.below(10)));
    }
    return std::make_shared<const LangIdModel>(train_langid(data));
  }();
  return model;
}

/// The four built-in rules in their usual order, langid backed by toy_langid().
inline std::vector<std::unique_ptr<FilterRule>> default_rules(const FilterConfig& cfg, bool with_langid) {
  std::vector<std::unique_ptr<FilterRule>> rules;
  rules.push_back(make_length_rule(cfg));
  rules.push_back(make_html_dup_rule());
  rules.push_back(make_ratio_rule(cfg));
  if (with_langid) rules.push_back(make_langid_rule(toy_langid(), cfg));
  return rules;
}

/// A zh-en pair that passes every default filter rule.
inline SentencePair clean_pair(Rng& rng, std::uint64_t id) {
  SentencePair p;
  p.id = id;
  const std::size_t n = 5 + rng.below(10);
  p.src = zh_sentence(rng, n);
  p.tgt = en_sentence(rng, n + rng.below(3));
  return p;
}

/// Sentence drawn from a domain: each word comes from the domain's own
/// vocabulary with probability `focus`, otherwise from a shared general one.
inline Sentence domain_sentence(Rng& rng, const std::string& domain, double focus, std::size_t len) {
  Sentence s;
  for (std::size_t i = 0; i < len; ++i) {
    if (rng.bernoulli(focus)) {
      s.tokens.push_back(domain + std::to_string(rng.below(40)));
    } else {
      s.tokens.push_back("gen" + std::to_string(rng.below(200)));
    }
  }
  return s;
}

inline SentencePair domain_pair(Rng& rng, const std::string& domain, double focus, std::uint64_t id) {
  SentencePair p;
  p.id = id;
  const std::size_t len = 4 + rng.below(12);
  p.src = domain_sentence(rng, domain, focus, len);
  p.tgt = domain_sentence(rng, domain + "_t", focus, len);
  return p;
}

/// Pool of 1000 pairs where ids 0..99 are in-domain ("med") and the rest
/// are general text with a sprinkling of other topics.
inline Corpus planted_domain_pool(Rng& rng) {
  Corpus pool;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    if (i < 100) {
      pool.pairs.push_back(domain_pair(rng, "med", 0.5, i));
    } else {
      pool.pairs.push_back(domain_pair(rng, i % 2 ? "law" : "news", 0.3, i));
    }
  }
  return pool;
}

inline std::map<std::string, double> random_dist(Rng& rng, const std::vector<std::string>& tokens, double zero_rate) {
  std::map<std::string, double> d;
  double total = 0.0;
  for (const auto& t : tokens) {
    const double x = rng.bernoulli(zero_rate) ? 0.0 : 0.05 + rng.uniform();
    d[t] = x;
    total += x;
  }
  if (total == 0.0) {
    d[tokens.front()] = 1.0;
    return d;
  }
  for (auto& [t, x] : d) x /= total;
  return d;
}

/// Table covering every prefix shorter than max_len for source id 0.
inline std::shared_ptr<TableModel> random_table(Rng& rng, const std::string& name, const std::vector<std::string>& words,
                                         std::size_t max_len, double zero_rate = 0.0) {
  auto model = std::make_shared<TableModel>(name);
  std::vector<std::string> outputs = words;
  outputs.push_back("</s>");
  std::function<void(std::vector<std::string>&)> fill = [&](std::vector<std::string>& prefix) {
    model->add(0, prefix, random_dist(rng, outputs, zero_rate));
    if (prefix.size() + 1 >= max_len) return;
    for (const auto& w : words) {
      prefix.push_back(w);
      fill(prefix);
      prefix.pop_back();
    }
  };
  std::vector<std::string> empty;
  fill(empty);
  return model;
}

/// Dev set of `n` references over {a,b,c,d}, four to six tokens long so that
/// every BLEU order has n-grams to count.
struct DevSet {
  std::vector<Source> sources;
  std::vector<Sentence> refs;
};

inline DevSet make_dev(Rng& rng, std::size_t n) {
  DevSet dev;
  const std::vector<std::string> words{"a", "b", "c", "d"};
  for (std::uint64_t i = 0; i < n; ++i) {
    Sentence ref;
    for (std::size_t k = 0, len = 4 + rng.below(3); k < len; ++k) ref.tokens.push_back(words[rng.below(4)]);
    dev.sources.push_back({i, Sentence{}});
    dev.refs.push_back(ref);
  }
  return dev;
}

/// Table that prefers the reference with probability `skill` per step and
/// otherwise commits to a fixed wrong token.
inline std::shared_ptr<TableModel> noisy_expert(Rng& rng, const std::string& name, const DevSet& dev, double skill) {
  auto m = std::make_shared<TableModel>(name);
  const std::vector<std::string> words{"a", "b", "c", "d"};
  for (const auto& src : dev.sources) {
    const auto& ref = dev.refs[src.id].tokens;
    std::vector<std::string> prefix;
    for (std::size_t k = 0; k <= ref.size(); ++k) {
      const std::string want = k < ref.size() ? ref[k] : "</s>";
      std::map<std::string, double> d;
      for (const auto& w : words) d[w] = 0.02;
      d["</s>"] = 0.02;
      const bool right = rng.bernoulli(skill);
      std::string pick = want;
      if (!right) {
        do pick = words[rng.below(4)];
        while (pick == want);
      }
      d[pick] += 0.9;
      m->add(src.id, prefix, d);
      if (k < ref.size()) prefix.push_back(ref[k]);
    }
  }
  return m;
}

/// In-domain LMs trained on `in_domain` text, out-of-domain on law and news.
inline LMSet domain_lms(Rng& rng, const std::string& in_domain) {
  std::vector<Sentence> in_src, in_tgt, out_src, out_tgt;
  for (int i = 0; i < 300; ++i) {
    auto in = domain_pair(rng, in_domain, 0.5, 0);
    in_src.push_back(in.src);
    in_tgt.push_back(in.tgt);
    auto out = domain_pair(rng, i % 2 ? "law" : "news", 0.3, 0);
    out_src.push_back(out.src);
    out_tgt.push_back(out.tgt);
  }
  const LmConfig cfg{2, Level::Word, 1};
  return {train_ngram(in_src, cfg), train_ngram(out_src, cfg), train_ngram(in_tgt, cfg),
          train_ngram(out_tgt, cfg)};
}

struct SyntheticNBest {
  std::vector<NBestList> lists;
  std::vector<Sentence> refs;
};

// Each reference gets five hypotheses with 0..4 corrupted tokens. The "quality"
// feature tracks sentence BLEU exactly; the NMT score is noise.
inline SyntheticNBest synthetic_nbest(std::uint64_t seed, std::size_t sentences = 20) {
  Rng rng(seed);
  SyntheticNBest s;
  for (std::size_t i = 0; i < sentences; ++i) {
    const Sentence ref = random_sentence(rng, 8, 8, 30);
    NBestList list;
    list.source_id = i;
    for (std::size_t bad = 0; bad < 5; ++bad) {
      Hypothesis h;
      h.tokens = ref;
      for (std::size_t k = 0; k < bad; ++k) h.tokens.tokens[2 * k] = "junk" + std::to_string(k);
      h.penalized = -rng.uniform() * 5.0;
      h.features["nmt_score"] = h.penalized;
      h.features["quality"] = sentence_bleu(h.tokens, ref) / 100.0;
      list.hyps.push_back(h);
    }
    rng.below(2) ? std::swap(list.hyps[0], list.hyps[4]) : std::swap(list.hyps[1], list.hyps[3]);
    s.lists.push_back(list);
    s.refs.push_back(ref);
  }
  return s;
}

}  // namespace mtforge::testing
