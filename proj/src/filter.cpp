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

#include "mtforge/filter.hpp"

#include <algorithm>
#include <cmath>

#include "mtforge/parallel.hpp"
#include "mtforge/textnorm.hpp"
#include "mtforge/utf8.hpp"

namespace mtforge {

void FilterConfig::validate() const {
  if (!(ratio_low > 0.0 && ratio_low <= 1.0 && ratio_high >= 1.0)) {
    throw Error("filter config: need 0 < ratio_low <= 1 <= ratio_high");
  }
  for (double q : {lm_percentile, align_percentile}) {
    if (!(q > 0.0 && q < 100.0)) throw Error("filter config: percentiles must be in (0, 100)");
  }
  if (!(langid_min_conf >= 0.0 && langid_min_conf <= 1.0)) {
    throw Error("filter config: langid_min_conf must be in [0, 1]");
  }
  if (max_words == 0 || max_word_chars == 0) throw Error("filter config: length limits must be positive");
}

Verdict filter_length(const SentencePair& pair, const FilterConfig& config) {
  for (const Sentence* side : {&pair.src, &pair.tgt}) {
    if (side->size() > config.max_words) return Verdict::drop("length");
  }
  for (const Sentence* side : {&pair.src, &pair.tgt}) {
    for (const auto& tok : side->tokens) {
      if (utf8::length(tok) > config.max_word_chars) return Verdict::drop("long-word");
    }
  }
  return Verdict::keep();
}

bool DuplicateTracker::seen_before(const SentencePair& pair) {
  return !seen_.insert(join(pair.src) + '\t' + join(pair.tgt)).second;
}

bool contains_html_tag(std::string_view text) {
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] != '<') continue;
    const char c = text[i + 1];
    const bool opener = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '/' || c == '!';
    if (opener && text.find('>', i + 2) != std::string_view::npos) return true;
  }
  return false;
}

Verdict filter_html_dup(const SentencePair& pair, DuplicateTracker& tracker) {
  if (contains_html_tag(join(pair.src)) || contains_html_tag(join(pair.tgt))) {
    return Verdict::drop("html");
  }
  if (pair.src.tokens == pair.tgt.tokens) return Verdict::drop("duplicate-translation");
  if (tracker.seen_before(pair)) return Verdict::drop("dedup");
  return Verdict::keep();
}

Verdict filter_ratio(const SentencePair& pair, const FilterConfig& config) {
  if (pair.src.empty() || pair.tgt.empty()) return Verdict::drop("empty");
  const double ratio = static_cast<double>(pair.src.size()) / static_cast<double>(pair.tgt.size());
  if (ratio < config.ratio_low || ratio > config.ratio_high) return Verdict::drop("ratio");
  return Verdict::keep();
}

Verdict filter_langid(const SentencePair& pair, const LangIdModel& model, const FilterConfig& config) {
  const auto src = predict_lang(model, pair.src);
  if (src.lang != config.expected_src_lang || src.confidence < config.langid_min_conf) {
    return Verdict::drop("langid");
  }
  const auto tgt = predict_lang(model, pair.tgt);
  if (tgt.lang != config.expected_tgt_lang || tgt.confidence < config.langid_min_conf) {
    return Verdict::drop("langid");
  }
  return Verdict::keep();
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("percentile of an empty list");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

std::vector<Verdict> score_verdicts(std::span<const SentencePair> pairs, const std::string& name,
                                    double q, ScoreDirection direction) {
  std::vector<Verdict> out(pairs.size());
  if (pairs.empty()) return out;
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& p : pairs) scores.push_back(p.score(name));
  const double threshold =
      percentile(scores, direction == ScoreDirection::DropLowest ? q : 100.0 - q);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool drop = direction == ScoreDirection::DropLowest ? scores[i] < threshold
                                                              : scores[i] > threshold;
    if (drop) out[i] = Verdict::drop("score:" + name);
  }
  return out;
}

template <class Check>
class PairRule : public FilterRule {
 public:
  PairRule(std::string name, Check check) : name_(std::move(name)), check_(std::move(check)) {}

  std::string name() const override { return name_; }

  std::vector<Verdict> evaluate(std::span<const SentencePair> pairs, unsigned workers) const override {
    std::vector<Verdict> out(pairs.size());
    parallel_for(pairs.size(), workers, [&](std::size_t i) { out[i] = check_(pairs[i]); });
    return out;
  }

 private:
  std::string name_;
  Check check_;
};

template <class Check>
std::unique_ptr<FilterRule> pair_rule(std::string name, Check check) {
  return std::make_unique<PairRule<Check>>(std::move(name), std::move(check));
}

class HtmlDupRule : public FilterRule {
 public:
  std::string name() const override { return "html-dup"; }

  std::vector<Verdict> evaluate(std::span<const SentencePair> pairs, unsigned) const override {
    DuplicateTracker tracker;
    std::vector<Verdict> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(filter_html_dup(p, tracker));
    return out;
  }
};

class ScoreRule : public FilterRule {
 public:
  ScoreRule(std::string score, double q, ScoreDirection direction)
      : score_(std::move(score)), q_(q), direction_(direction) {}

  std::string name() const override { return "score:" + score_; }

  std::vector<Verdict> evaluate(std::span<const SentencePair> pairs, unsigned) const override {
    return score_verdicts(pairs, score_, q_, direction_);
  }

 private:
  std::string score_;
  double q_;
  ScoreDirection direction_;
};

}  // namespace

std::pair<Corpus, RunReport> filter_by_score(const Corpus& corpus, const std::string& score_name,
                                             double q, ScoreDirection direction) {
  Stopwatch timer;
  RunReport report;
  report.stage = "filter-score:" + score_name;
  report.count_in = corpus.size();
  const auto verdicts = score_verdicts(corpus.pairs, score_name, q, direction);
  Corpus out;
  out.side = corpus.side;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (verdicts[i].kept()) {
      out.pairs.push_back(corpus.pairs[i]);
    } else {
      ++report.drops[*verdicts[i].reason];
    }
  }
  report.count_out = out.size();
  report.wall_time_s = timer.seconds();
  return {std::move(out), std::move(report)};
}

std::unique_ptr<FilterRule> make_length_rule(const FilterConfig& config) {
  return pair_rule("length", [config](const SentencePair& p) { return filter_length(p, config); });
}

std::unique_ptr<FilterRule> make_html_dup_rule() { return std::make_unique<HtmlDupRule>(); }

std::unique_ptr<FilterRule> make_ratio_rule(const FilterConfig& config) {
  return pair_rule("ratio", [config](const SentencePair& p) { return filter_ratio(p, config); });
}

std::unique_ptr<FilterRule> make_langid_rule(std::shared_ptr<const LangIdModel> model,
                                             const FilterConfig& config) {
  return pair_rule("langid", [model = std::move(model), config](const SentencePair& p) {
    return filter_langid(p, *model, config);
  });
}

std::unique_ptr<FilterRule> make_score_rule(std::string score_name, double q,
                                            ScoreDirection direction) {
  return std::make_unique<ScoreRule>(std::move(score_name), q, direction);
}

std::pair<Corpus, RunReport> run_pipeline(const Corpus& corpus,
                                          std::span<const std::unique_ptr<FilterRule>> rules,
                                          unsigned workers) {
  Stopwatch timer;
  RunReport report;
  report.stage = "filter";
  report.count_in = corpus.size();
  std::unordered_set<std::string> names;
  for (const auto& r : rules) {
    if (!names.insert(r->name()).second) throw Error("duplicate filter rule name: " + r->name());
  }

  std::map<std::string, std::uint64_t> per_rule;
  Corpus current = corpus;
  for (const auto& rule : rules) {
    const auto verdicts = rule->evaluate(current.pairs, workers);
    Corpus next;
    next.side = current.side;
    next.pairs.reserve(current.size());
    std::uint64_t dropped = 0;
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (verdicts[i].kept()) {
        next.pairs.push_back(std::move(current.pairs[i]));
      } else {
        ++report.drops[*verdicts[i].reason];
        ++dropped;
      }
    }
    per_rule[rule->name()] = dropped;
    current = std::move(next);
  }
  report.count_out = current.size();
  report.extra["rules"] = per_rule;
  report.wall_time_s = timer.seconds();
  return {std::move(current), std::move(report)};
}

Corpus normalize_corpus(Corpus corpus, unsigned workers) {
  parallel_for(corpus.size(), workers, [&](std::size_t i) {
    auto& p = corpus.pairs[i];
    p.src = normalize_punct(p.src);
    p.tgt = normalize_punct(p.tgt);
  });
  return corpus;
}

}  // namespace mtforge
