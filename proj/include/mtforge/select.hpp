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
#include <map>
#include <string>
#include <vector>

#include "mtforge/ngram_lm.hpp"

namespace mtforge {

/// In-domain and general-domain models for each side.
struct LMSet {
  NGramLM in_src;
  NGramLM out_src;
  NGramLM in_tgt;
  NGramLM out_tgt;

  /// Throws if the in/out models of a side differ in level or order.
  void validate() const;
};

/// Bilingual cross-entropy difference
///   [CE_in_src(s) - CE_out_src(s)] + [CE_in_tgt(t) - CE_out_tgt(t)]
/// in nats per token. Lower means closer to the in-domain data.
double moore_lewis_score(const SentencePair& pair, const LMSet& lms);

Corpus score_moore_lewis(Corpus corpus, const LMSet& lms, const std::string& name,
                         unsigned workers = 1);

enum class Criterion { Lowest, Highest };

inline constexpr std::size_t kDefaultSelectK = 600000;

struct SelectionResult {
  Corpus selected;
  std::vector<double> scores;  // of the selected pairs, in corpus order
  std::size_t k = 0;
  Criterion criterion = Criterion::Lowest;
};

/// Keeps the min(k, n) best pairs under the criterion. Ties at the cut go to the
/// smaller id; the output keeps corpus order.
SelectionResult select_top_k(const Corpus& corpus, const std::string& score_name, std::size_t k,
                             Criterion criterion);

/// Reads `{"id": int, "score": real}` lines and attaches them as scores[name].
/// Every corpus id must be covered.
Corpus ingest_external_scores(Corpus corpus, const std::filesystem::path& path,
                              const std::string& score_name);

/// Per genre: score each sentence of that genre's corpus by the genre's LM
/// cross-entropy and keep the k lowest.
std::map<std::string, Corpus> bucket_by_genre(const std::map<std::string, Corpus>& corpora,
                                              const std::map<std::string, NGramLM>& lms,
                                              std::size_t k, unsigned workers = 1);

/// Pool form: every genre draws its k lowest-cross-entropy sentences from the
/// same mixed pool, so a sentence can land in several buckets.
std::map<std::string, Corpus> bucket_by_genre(const Corpus& pool,
                                              const std::map<std::string, NGramLM>& lms,
                                              std::size_t k, unsigned workers = 1);

}  // namespace mtforge
