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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mtforge/decode.hpp"
#include "mtforge/ngram_lm.hpp"

namespace mtforge {

/// Fills hyp.features for every hypothesis: len_ratio = |hyp| / |src|,
/// len_diff = |hyp| - |src|, nmt_score = the penalized decoder score, and
/// lm_score_<i> = -cross_entropy under lms[i]. Throws on an empty source.
void extract_features(const Sentence& source, NBestList& nbest,
                      std::span<const std::shared_ptr<const NGramLM>> lms);

/// Sentence BLEU of every hypothesis against its reference, scaled to [0, 1].
std::vector<std::vector<double>> hypothesis_bleu(std::span<const NBestList> lists,
                                                 std::span<const Sentence> refs);

struct MiraConfig {
  double c = 0.01;
  std::size_t epochs = 5;
  std::uint64_t seed = 0;
};

struct RerankWeights {
  std::map<std::string, double> weights;
  MiraConfig config;
  std::size_t updates = 0;

  double score(const std::map<std::string, double>& features) const;

  nlohmann::json to_json() const;
  static RerankWeights from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static RerankWeights load(const std::filesystem::path& path);
};

/// nmt_score = 1, every other feature 0: reproduces decoder order.
RerankWeights identity_weights(const std::vector<std::string>& feature_names);

/// Batch k-best MIRA. Each epoch visits the lists in a shuffled order (lists are
/// first sorted by source id, so input order does not matter). For each list:
/// hope = argmax w.f + BLEU, fear = argmax w.f - BLEU; when
/// loss = (BLEU_hope - BLEU_fear) - w.(f_hope - f_fear) > 0 the weights move by
/// min(C, loss / |f_hope - f_fear|^2) * (f_hope - f_fear). Returns the mean of
/// the weight vectors produced by the updates; without updates, `initial`.
RerankWeights mira_train(std::span<const NBestList> lists, std::span<const std::vector<double>> bleu,
                         const MiraConfig& config, const RerankWeights& initial);
/// Starts from identity_weights.
RerankWeights mira_train(std::span<const NBestList> lists, std::span<const std::vector<double>> bleu,
                         const MiraConfig& config = {});

/// Stable sort by w.f descending, so ties keep n-best rank.
NBestList rerank_apply(const RerankWeights& weights, NBestList nbest);

/// The common feature names of all hypotheses; throws if they differ.
std::vector<std::string> feature_names(std::span<const NBestList> lists);

}  // namespace mtforge
