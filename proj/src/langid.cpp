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

#include "mtforge/langid.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace mtforge {

LangIdModel train_langid(const std::map<std::string, std::vector<Sentence>>& corpora,
                         unsigned workers) {
  if (corpora.size() < 2) throw Error("language identification needs at least two languages");
  LangIdModel model;
  double total = 0.0;
  for (const auto& [lang, sentences] : corpora) {
    if (sentences.empty()) throw Error("no training sentences for language '" + lang + "'");
    total += static_cast<double>(sentences.size());
  }
  const LmConfig cfg{kLangIdOrder, Level::Char, 1};
  for (const auto& [lang, sentences] : corpora) {
    model.models.emplace(lang, train_ngram(sentences, cfg, workers));
    model.priors[lang] = static_cast<double>(sentences.size()) / total;
  }
  return model;
}

LangPrediction predict_lang(const LangIdModel& model, const Sentence& sentence) {
  LangPrediction out;
  std::map<std::string, double> log_post;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [lang, prior] : model.priors) {
    double lp = std::log(prior);
    if (!sentence.empty()) lp += model.models.at(lang).log_likelihood(sentence);
    log_post[lang] = lp;
    best = std::max(best, lp);
  }
  double z = 0.0;
  for (const auto& [lang, lp] : log_post) z += std::exp(lp - best);
  for (const auto& [lang, lp] : log_post) {
    const double p = std::exp(lp - best) / z;
    out.posterior[lang] = p;
    if (out.lang.empty() || p > out.confidence) {
      out.lang = lang;
      out.confidence = p;
    }
  }
  return out;
}

void LangIdModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  nlohmann::json header;
  header["format"] = "mtforge-langid 1";
  header["priors"] = priors;
  out << header.dump() << '\n';
  for (const auto& [lang, lm] : models) {
    out << "#lang " << lang << '\n';
    lm.write(out);
  }
  if (!out) throw Error("write failed: " + path.string());
}

LangIdModel LangIdModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("empty langid model: " + path.string());
  LangIdModel model;
  try {
    auto header = nlohmann::json::parse(line);
    if (header.value("format", "") != "mtforge-langid 1") throw Error("unknown langid format");
    model.priors = header.at("priors").get<std::map<std::string, double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad langid header in " + path.string() + ": " + e.what());
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("#lang ", 0) != 0) throw Error("expected '#lang <code>' in " + path.string());
    model.models.emplace(line.substr(6), NGramLM::read(in));
  }
  for (const auto& [lang, p] : model.priors) {
    if (!model.models.contains(lang)) throw Error("langid model lacks a table for '" + lang + "'");
  }
  return model;
}

}  // namespace mtforge
