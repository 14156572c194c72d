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

#include "mtforge/rerank.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "mtforge/metrics.hpp"

namespace mtforge {

namespace {

using Dense = std::vector<double>;

Dense densify(const std::vector<std::string>& names, const std::map<std::string, double>& features) {
  Dense out(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) out[i] = features.at(names[i]);
  return out;
}

double dot(const Dense& a, const Dense& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void extract_features(const Sentence& source, NBestList& nbest,
                      std::span<const std::shared_ptr<const NGramLM>> lms) {
  if (source.empty()) {
    throw Error("cannot extract features for sentence " + std::to_string(nbest.source_id) +
                ": empty source");
  }
  const double src_len = static_cast<double>(source.size());
  for (auto& h : nbest.hyps) {
    const double hyp_len = static_cast<double>(h.tokens.size());
    h.features["len_ratio"] = hyp_len / src_len;
    h.features["len_diff"] = hyp_len - src_len;
    h.features["nmt_score"] = h.penalized;
    for (std::size_t i = 0; i < lms.size(); ++i) {
      h.features["lm_score_" + std::to_string(i)] = -lms[i]->cross_entropy(h.tokens);
    }
  }
}

std::vector<std::vector<double>> hypothesis_bleu(std::span<const NBestList> lists,
                                                 std::span<const Sentence> refs) {
  if (lists.size() != refs.size()) {
    throw Error("n-best lists (" + std::to_string(lists.size()) + ") and references (" +
                std::to_string(refs.size()) + ") differ in number");
  }
  std::vector<std::vector<double>> out(lists.size());
  for (std::size_t i = 0; i < lists.size(); ++i) {
    for (const auto& h : lists[i].hyps) out[i].push_back(sentence_bleu(h.tokens, refs[i]) / 100.0);
  }
  return out;
}

std::vector<std::string> feature_names(std::span<const NBestList> lists) {
  std::vector<std::string> names;
  bool first = true;
  for (const auto& l : lists) {
    for (const auto& h : l.hyps) {
      std::vector<std::string> these;
      for (const auto& [k, v] : h.features) these.push_back(k);
      if (first) {
        names = std::move(these);
        first = false;
      } else if (these != names) {
        throw Error("hypotheses of sentence " + std::to_string(l.source_id) + " have a different feature set");
      }
    }
  }
  return names;
}

double RerankWeights::score(const std::map<std::string, double>& features) const {
  double s = 0.0;
  for (const auto& [name, value] : features) {
    auto it = weights.find(name);
    if (it == weights.end()) throw Error("no weight for feature '" + name + "'");
    s += it->second * value;
  }
  return s;
}

nlohmann::json RerankWeights::to_json() const {
  return {{"weights", weights},
          {"meta", {{"C", config.c}, {"epochs", config.epochs}, {"seed", config.seed}, {"updates", updates}}}};
}

RerankWeights RerankWeights::from_json(const nlohmann::json& j) {
  RerankWeights w;
  try {
    w.weights = j.at("weights").get<std::map<std::string, double>>();
    if (j.contains("meta")) {
      const auto& m = j.at("meta");
      w.config.c = m.value("C", w.config.c);
      w.config.epochs = m.value("epochs", w.config.epochs);
      w.config.seed = m.value("seed", w.config.seed);
      w.updates = m.value("updates", std::size_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad rerank weights: ") + e.what());
  }
  return w;
}

void RerankWeights::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << to_json().dump(2) << '\n';
}

RerankWeights RerankWeights::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

RerankWeights identity_weights(const std::vector<std::string>& names) {
  RerankWeights w;
  for (const auto& n : names) w.weights[n] = n == "nmt_score" ? 1.0 : 0.0;
  return w;
}

RerankWeights mira_train(std::span<const NBestList> lists, std::span<const std::vector<double>> bleu,
                         const MiraConfig& config) {
  return mira_train(lists, bleu, config, identity_weights(feature_names(lists)));
}

RerankWeights mira_train(std::span<const NBestList> lists, std::span<const std::vector<double>> bleu,
                         const MiraConfig& config, const RerankWeights& initial) {
  if (lists.size() != bleu.size()) throw Error("mira: BLEU scores do not match the n-best lists");
  if (!(config.c > 0.0)) throw Error("mira: C must be positive");
  const auto names = feature_names(lists);
  for (const auto& n : names) {
    if (!initial.weights.contains(n)) throw Error("mira: no initial weight for feature '" + n + "'");
  }
  if (initial.weights.size() != names.size()) throw Error("mira: initial weights cover unknown features");

  struct Item {
    std::uint64_t id;
    std::vector<Dense> features;
    const std::vector<double>* bleu;
  };
  std::vector<Item> items;
  items.reserve(lists.size());
  for (std::size_t i = 0; i < lists.size(); ++i) {
    if (lists[i].hyps.empty()) throw Error("mira: empty n-best list for sentence " + std::to_string(lists[i].source_id));
    if (bleu[i].size() != lists[i].hyps.size()) {
      throw Error("mira: BLEU count mismatch for sentence " + std::to_string(lists[i].source_id));
    }
    Item item{lists[i].source_id, {}, &bleu[i]};
    for (const auto& h : lists[i].hyps) item.features.push_back(densify(names, h.features));
    items.push_back(std::move(item));
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.id < b.id; });

  Dense w = densify(names, initial.weights);
  Dense sum(names.size(), 0.0);
  std::size_t updates = 0;
  Rng rng(config.seed);
  std::vector<std::size_t> order(items.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    for (std::size_t idx : order) {
      const auto& item = items[idx];
      const auto& b = *item.bleu;
      std::size_t hope = 0, fear = 0;
      double hope_v = -std::numeric_limits<double>::infinity(), fear_v = hope_v;
      for (std::size_t h = 0; h < item.features.size(); ++h) {
        const double s = dot(w, item.features[h]);
        if (s + b[h] > hope_v) {
          hope_v = s + b[h];
          hope = h;
        }
        if (s - b[h] > fear_v) {
          fear_v = s - b[h];
          fear = h;
        }
      }
      Dense delta(names.size());
      double norm2 = 0.0;
      for (std::size_t f = 0; f < names.size(); ++f) {
        delta[f] = item.features[hope][f] - item.features[fear][f];
        norm2 += delta[f] * delta[f];
      }
      const double loss = (b[hope] - b[fear]) - dot(w, delta);
      if (loss <= 0.0 || norm2 == 0.0) continue;
      const double eta = std::min(config.c, loss / norm2);
      for (std::size_t f = 0; f < names.size(); ++f) {
        w[f] += eta * delta[f];
        sum[f] += w[f];
      }
      ++updates;
    }
  }

  RerankWeights out;
  out.config = config;
  out.updates = updates;
  for (std::size_t f = 0; f < names.size(); ++f) {
    out.weights[names[f]] = updates ? sum[f] / static_cast<double>(updates) : initial.weights.at(names[f]);
  }
  return out;
}

NBestList rerank_apply(const RerankWeights& weights, NBestList nbest) {
  std::vector<double> scores;
  scores.reserve(nbest.hyps.size());
  for (const auto& h : nbest.hyps) scores.push_back(weights.score(h.features));
  std::vector<std::size_t> order(nbest.hyps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Hypothesis> sorted;
  sorted.reserve(order.size());
  for (auto i : order) sorted.push_back(std::move(nbest.hyps[i]));
  nbest.hyps = std::move(sorted);
  return nbest;
}

}  // namespace mtforge
