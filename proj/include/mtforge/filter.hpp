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

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "mtforge/core.hpp"
#include "mtforge/langid.hpp"

namespace mtforge {

struct FilterConfig {
  std::size_t max_words = 120;
  std::size_t max_word_chars = 40;
  double ratio_low = 1.0 / 3.0;
  double ratio_high = 3.0;
  double lm_percentile = 5.0;
  double align_percentile = 5.0;
  double langid_min_conf = 0.5;
  std::string expected_src_lang = "zh";
  std::string expected_tgt_lang = "en";

  /// Throws Error unless 0 < ratio_low <= 1 <= ratio_high and percentiles are in (0, 100).
  void validate() const;
};

/// Keep, or drop with a reason.
struct Verdict {
  std::optional<std::string> reason;

  static Verdict keep() { return {}; }
  static Verdict drop(std::string why) { return {std::move(why)}; }
  bool kept() const { return !reason.has_value(); }
};

/// Drops "length" if a side has more than max_words tokens, "long-word" if a
/// token is longer than max_word_chars characters.
Verdict filter_length(const SentencePair& pair, const FilterConfig& config);

/// Remembers pairs already seen, for first-wins exact deduplication.
class DuplicateTracker {
 public:
  /// True if (src, tgt) was seen before; records it otherwise.
  bool seen_before(const SentencePair& pair);

 private:
  std::unordered_set<std::string> seen_;
};

/// True if the text contains something matching <[a-zA-Z/!][^>]*>.
bool contains_html_tag(std::string_view text);

/// Drops "html", "duplicate-translation" (src == tgt) or "dedup" (repeat of an
/// earlier pair).
Verdict filter_html_dup(const SentencePair& pair, DuplicateTracker& tracker);

/// Drops "empty" if a side is empty, "ratio" if |src|/|tgt| is outside
/// [ratio_low, ratio_high]. Bounds are inclusive.
Verdict filter_ratio(const SentencePair& pair, const FilterConfig& config);

/// Drops "langid" unless both sides are predicted as the expected languages
/// with at least langid_min_conf confidence.
Verdict filter_langid(const SentencePair& pair, const LangIdModel& model, const FilterConfig& config);

enum class ScoreDirection { DropLowest, DropHighest };

/// Linear-interpolation percentile of the values (0 <= q <= 100).
double percentile(std::vector<double> values, double q);

/// Drops pairs strictly below the q-th percentile (DropLowest) or strictly
/// above the (100 - q)-th percentile (DropHighest). Ties at the threshold stay.
std::pair<Corpus, RunReport> filter_by_score(const Corpus& corpus, const std::string& score_name,
                                             double q, ScoreDirection direction);

/// One named stage of a filtering pipeline. evaluate() sees only the pairs that
/// survived the earlier stages and returns one verdict per pair.
class FilterRule {
 public:
  virtual ~FilterRule() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Verdict> evaluate(std::span<const SentencePair> pairs, unsigned workers) const = 0;
};

std::unique_ptr<FilterRule> make_length_rule(const FilterConfig& config);
std::unique_ptr<FilterRule> make_html_dup_rule();
std::unique_ptr<FilterRule> make_ratio_rule(const FilterConfig& config);
std::unique_ptr<FilterRule> make_langid_rule(std::shared_ptr<const LangIdModel> model,
                                             const FilterConfig& config);
/// Percentile rule over an attached score. Drop reason is "score:<name>".
std::unique_ptr<FilterRule> make_score_rule(std::string score_name, double q,
                                            ScoreDirection direction);

/// Applies rules in order. Each dropped pair is charged to the first rule that
/// drops it: report.drops is keyed by drop reason, report.extra["rules"] by rule
/// name. Output order is a subsequence of input order.
std::pair<Corpus, RunReport> run_pipeline(const Corpus& corpus,
                                          std::span<const std::unique_ptr<FilterRule>> rules,
                                          unsigned workers = 1);

/// Normalizes punctuation on both sides of every pair.
Corpus normalize_corpus(Corpus corpus, unsigned workers = 1);

}  // namespace mtforge
