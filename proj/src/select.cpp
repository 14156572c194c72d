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

#include "mtforge/select.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "mtforge/parallel.hpp"

namespace mtforge {

void LMSet::validate() const {
  if (in_src.level() != out_src.level() || in_src.order() != out_src.order()) {
    throw Error("source-side in/out LMs differ in level or order");
  }
  if (in_tgt.level() != out_tgt.level() || in_tgt.order() != out_tgt.order()) {
    throw Error("target-side in/out LMs differ in level or order");
  }
}

double moore_lewis_score(const SentencePair& pair, const LMSet& lms) {
  const double src = lms.in_src.cross_entropy(pair.src) - lms.out_src.cross_entropy(pair.src);
  const double tgt = lms.in_tgt.cross_entropy(pair.tgt) - lms.out_tgt.cross_entropy(pair.tgt);
  return src + tgt;
}

Corpus score_moore_lewis(Corpus corpus, const LMSet& lms, const std::string& name, unsigned workers) {
  lms.validate();
  parallel_for(corpus.size(), workers, [&](std::size_t i) {
    corpus.pairs[i].scores[name] = moore_lewis_score(corpus.pairs[i], lms);
  });
  return corpus;
}

SelectionResult select_top_k(const Corpus& corpus, const std::string& score_name, std::size_t k,
                             Criterion criterion) {
  SelectionResult result;
  result.k = k;
  result.criterion = criterion;
  result.selected.side = corpus.side;

  std::vector<double> scores(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) scores[i] = corpus.pairs[i].score(score_name);

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take = std::min(k, corpus.size());
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) {
      return criterion == Criterion::Lowest ? scores[a] < scores[b] : scores[a] > scores[b];
    }
    return corpus.pairs[a].id < corpus.pairs[b].id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);
  order.resize(take);
  std::sort(order.begin(), order.end());
  for (std::size_t i : order) {
    result.selected.pairs.push_back(corpus.pairs[i]);
    result.scores.push_back(scores[i]);
  }
  return result;
}

Corpus ingest_external_scores(Corpus corpus, const std::filesystem::path& path,
                              const std::string& score_name) {
  std::unordered_map<std::uint64_t, double> by_id;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      by_id[j.at("id").get<std::uint64_t>()] = j.at("score").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(i + 1) + ": bad score line: " + e.what());
    }
  }
  std::vector<std::uint64_t> missing;
  for (auto& p : corpus.pairs) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) {
      missing.push_back(p.id);
    } else {
      p.scores[score_name] = it->second;
    }
  }
  if (!missing.empty()) {
    std::string msg = "external scores missing for " + std::to_string(missing.size()) + " id(s):";
    for (std::size_t i = 0; i < std::min<std::size_t>(10, missing.size()); ++i) {
      msg += " " + std::to_string(missing[i]);
    }
    if (missing.size() > 10) msg += " ...";
    throw Error(msg);
  }
  return corpus;
}

std::map<std::string, Corpus> bucket_by_genre(const std::map<std::string, Corpus>& corpora,
                                              const std::map<std::string, NGramLM>& lms,
                                              std::size_t k, unsigned workers) {
  std::map<std::string, Corpus> out;
  for (const auto& [genre, corpus] : corpora) {
    auto lm = lms.find(genre);
    if (lm == lms.end()) throw Error("no language model for genre '" + genre + "'");
    const Corpus scored = score_corpus(lm->second, corpus, Which::Src, "genre-ce", workers);
    out.emplace(genre, select_top_k(scored, "genre-ce", k, Criterion::Lowest).selected);
  }
  return out;
}

std::map<std::string, Corpus> bucket_by_genre(const Corpus& pool,
                                              const std::map<std::string, NGramLM>& lms,
                                              std::size_t k, unsigned workers) {
  if (lms.empty()) throw Error("bucket_by_genre: no genre language models");
  std::map<std::string, Corpus> out;
  for (const auto& [genre, lm] : lms) {
    const Corpus scored = score_corpus(lm, pool, Which::Src, "genre-ce", workers);
    out.emplace(genre, select_top_k(scored, "genre-ce", k, Criterion::Lowest).selected);
  }
  return out;
}

}  // namespace mtforge
