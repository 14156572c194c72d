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

#include "mtforge/ngram_lm.hpp"

namespace mtforge {

/// Naive-Bayes language identifier over per-language character trigram models.
struct LangIdModel {
  std::map<std::string, NGramLM> models;
  std::map<std::string, double> priors;

  void save(const std::filesystem::path& path) const;
  static LangIdModel load(const std::filesystem::path& path);
};

struct LangPrediction {
  std::string lang;
  double confidence = 0.0;
  std::map<std::string, double> posterior;
};

inline constexpr int kLangIdOrder = 3;

/// Needs at least two languages, each with a non-empty corpus. Priors are the
/// empirical sentence shares.
LangIdModel train_langid(const std::map<std::string, std::vector<Sentence>>& corpora,
                         unsigned workers = 1);

/// Posterior is prior times the character-model likelihood, normalized. Ties go
/// to the lexicographically smallest code. An empty sentence returns the prior.
LangPrediction predict_lang(const LangIdModel& model, const Sentence& sentence);

}  // namespace mtforge
