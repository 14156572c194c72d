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

#include "mtforge/decode.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "mtforge/kernels.hpp"
#include "mtforge/metrics.hpp"
#include "mtforge/parallel.hpp"

namespace mtforge {

namespace {

std::string prefix_key(std::span<const std::string> prefix) {
  std::string key;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (i) key += '\x1f';
    key += prefix[i];
  }
  return key;
}

void normalize(std::span<double> v) {
  const double z = kernels::sum(v);
  if (!(z > 0.0)) throw Error("cannot normalize a distribution with zero mass");
  kernels::scale(1.0 / z, v);
}

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

struct Partial {
  std::vector<std::uint32_t> ids;
  double log_prob = 0.0;
};

Hypothesis finish(const Partial& p, const TargetVocab& vocab, double alpha, bool forced) {
  Hypothesis h;
  h.tokens.level = Level::Word;
  for (auto id : p.ids) h.tokens.tokens.push_back(vocab.token(id));
  h.log_prob = p.log_prob;
  h.penalized = p.log_prob / length_penalty(p.ids.size(), alpha);
  h.forced = forced;
  return h;
}

void rank(std::vector<Hypothesis>& hyps) {
  std::stable_sort(hyps.begin(), hyps.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.penalized != b.penalized) return a.penalized > b.penalized;
    return a.log_prob > b.log_prob;
  });
}

std::vector<std::string> prefix_tokens(const Partial& p, const TargetVocab& vocab) {
  std::vector<std::string> out;
  out.reserve(p.ids.size());
  for (auto id : p.ids) out.push_back(vocab.token(id));
  return out;
}

NBestList beam_search(const StepModel& model, const Source& source, const DecodeConfig& config,
                      std::size_t beam_size) {
  const TargetVocab& vocab = model.vocab();
  const std::size_t max_len = config.max_len_for(source);
  std::vector<Partial> live{Partial{}};
  std::vector<Hypothesis> finished;
  std::vector<double> dist(vocab.size());

  struct Candidate {
    double log_prob;
    std::size_t parent;
    std::uint32_t token;
  };
  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Candidate> cands;
    cands.reserve(live.size() * vocab.size());
    for (std::size_t h = 0; h < live.size(); ++h) {
      model.next(source, prefix_tokens(live[h], vocab), dist);
      for (std::uint32_t v = 0; v < vocab.size(); ++v) {
        if (dist[v] > 0.0) cands.push_back({live[h].log_prob + std::log(dist[v]), h, v});
      }
    }
    const std::size_t keep = std::min(beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Partial> next;
    for (std::size_t c = 0; c < keep; ++c) {
      const auto& cand = cands[c];
      Partial p{live[cand.parent].ids, cand.log_prob};
      if (cand.token == TargetVocab::kEosId) {
        finished.push_back(finish(p, vocab, config.length_penalty, false));
      } else {
        p.ids.push_back(cand.token);
        next.push_back(std::move(p));
      }
    }
    live = std::move(next);
  }
  for (const auto& p : live) finished.push_back(finish(p, vocab, config.length_penalty, true));
  rank(finished);
  if (finished.size() > config.n_best) finished.resize(config.n_best);
  return {source.id, std::move(finished)};
}

NBestList greedy_search(const StepModel& model, const Source& source, const DecodeConfig& config) {
  const TargetVocab& vocab = model.vocab();
  const std::size_t max_len = config.max_len_for(source);
  Partial p;
  std::vector<double> dist(vocab.size());
  while (p.ids.size() < max_len) {
    model.next(source, prefix_tokens(p, vocab), dist);
    const auto best = static_cast<std::uint32_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    p.log_prob += std::log(dist[best]);
    if (best == TargetVocab::kEosId) {
      return {source.id, {finish(p, vocab, config.length_penalty, false)}};
    }
    p.ids.push_back(best);
  }
  return {source.id, {finish(p, vocab, config.length_penalty, true)}};
}

NBestList sample_topk(const StepModel& model, const Source& source, const DecodeConfig& config) {
  const TargetVocab& vocab = model.vocab();
  const std::size_t max_len = config.max_len_for(source);
  Rng rng = Rng::for_item(config.seed, source.id);
  std::vector<double> dist(vocab.size());
  std::vector<Hypothesis> samples;
  for (std::size_t s = 0; s < config.n_best; ++s) {
    Partial p;
    bool ended = false;
    while (p.ids.size() < max_len) {
      model.next(source, prefix_tokens(p, vocab), dist);
      std::vector<std::uint32_t> order(vocab.size());
      std::iota(order.begin(), order.end(), 0);
      const std::size_t k = std::min(config.topk, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::uint32_t a, std::uint32_t b) {
                          return dist[a] != dist[b] ? dist[a] > dist[b] : a < b;
                        });
      double mass = 0.0;
      for (std::size_t i = 0; i < k; ++i) mass += dist[order[i]];
      double u = rng.uniform() * mass;
      std::uint32_t pick = order[0];
      for (std::size_t i = 0; i < k; ++i) {
        if (dist[order[i]] <= 0.0) continue;
        pick = order[i];
        u -= dist[order[i]];
        if (u < 0.0) break;
      }
      p.log_prob += std::log(dist[pick]);
      if (pick == TargetVocab::kEosId) {
        ended = true;
        break;
      }
      p.ids.push_back(pick);
    }
    samples.push_back(finish(p, vocab, config.length_penalty, !ended));
  }
  rank(samples);
  return {source.id, std::move(samples)};
}

}  // namespace

TargetVocab::TargetVocab(std::vector<std::string> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  tokens_.push_back(std::string(kEos));
  for (auto& w : words) {
    if (w != kEos) tokens_.push_back(std::move(w));
  }
  for (std::uint32_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], i);
}

std::optional<std::uint32_t> TargetVocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool is_distribution(std::span<const double> dist, double tol) {
  double s = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) return false;
    s += p;
  }
  return std::fabs(s - 1.0) <= tol;
}

void TableModel::add(std::uint64_t src_id, const std::vector<std::string>& prefix,
                     std::map<std::string, double> dist) {
  double total = 0.0;
  for (const auto& [tok, p] : dist) {
    if (!(p >= 0.0)) throw Error("table model '" + name_ + "': negative probability for '" + tok + "'");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw Error("table model '" + name_ + "': distribution for source " + std::to_string(src_id) +
                " sums to " + format_double(total));
  }
  table_[{src_id, prefix_key(prefix)}] = std::move(dist);
}

TableModel TableModel::load(const std::filesystem::path& path, std::string name) {
  TableModel model(std::move(name));
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      model.add(j.at("src_id").get<std::uint64_t>(), j.at("prefix").get<std::vector<std::string>>(),
                j.at("dist").get<std::map<std::string, double>>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return model;
}

void TableModel::save(const std::filesystem::path& path) const {
  std::vector<std::string> lines;
  for (const auto& [key, dist] : table_) {
    nlohmann::json j;
    j["src_id"] = key.first;
    std::vector<std::string> prefix;
    if (!key.second.empty()) {
      std::size_t start = 0;
      while (true) {
        const auto sep = key.second.find('\x1f', start);
        prefix.push_back(key.second.substr(start, sep - start));
        if (sep == std::string::npos) break;
        start = sep + 1;
      }
    }
    j["prefix"] = prefix;
    j["dist"] = dist;
    lines.push_back(j.dump());
  }
  write_lines(path, lines);
}

std::vector<std::string> TableModel::known_tokens() const {
  std::set<std::string> tokens;
  for (const auto& [key, dist] : table_) {
    for (const auto& [tok, p] : dist) {
      if (tok != kEos) tokens.insert(tok);
    }
  }
  return {tokens.begin(), tokens.end()};
}

void TableModel::next(const Source& source, std::span<const std::string> prefix,
                      const TargetVocab& vocab, std::span<double> out) const {
  auto it = table_.find({source.id, prefix_key(prefix)});
  if (it == table_.end()) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(vocab.size()));
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& [tok, p] : it->second) {
    const auto id = vocab.id(tok);
    if (!id) throw Error("table model '" + name_ + "': token '" + tok + "' is not in the vocabulary");
    out[*id] = p;
  }
}

LexiconLM::LexiconLM(std::string name, std::shared_ptr<const AlignmentModel> lexicon,
                     std::shared_ptr<const NGramLM> lm)
    : name_(std::move(name)), lexicon_(std::move(lexicon)), lm_(std::move(lm)) {
  if (!lexicon_ || !lm_) throw Error("lexicon model '" + name_ + "' needs a lexicon and a language model");
  if (lm_->level() != Level::Word) throw Error("lexicon model '" + name_ + "' needs a word-level language model");
}

std::vector<std::string> LexiconLM::known_tokens() const {
  std::vector<std::string> out;
  for (auto& t : lm_->events()) {
    if (t != kEos && t != kUnk) out.push_back(std::move(t));
  }
  return out;
}

void LexiconLM::next(const Source& source, std::span<const std::string> prefix,
                     const TargetVocab& vocab, std::span<double> out) const {
  const std::string null_token(kNullToken);
  for (std::uint32_t v = 0; v < vocab.size(); ++v) {
    const std::string& w = vocab.token(v);
    double factor;
    if (v == TargetVocab::kEosId) {
      factor = 1.0;
      if (prefix.size() < source.tokens.size()) {
        for (const auto& f : source.tokens.tokens) {
          double covered = 0.0;
          for (const auto& e : prefix) covered = std::max(covered, lexicon_->t(e, f));
          factor *= covered;
        }
      }
    } else {
      factor = lexicon_->t(w, null_token);
      for (const auto& f : source.tokens.tokens) factor = std::max(factor, lexicon_->t(w, f));
    }
    out[v] = lm_->prob(prefix, w) * factor;
  }
  const double z = kernels::sum(out);
  if (z > 0.0) {
    kernels::scale(1.0 / z, out);
  } else {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
  }
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "max") return Strategy::Max;
  if (name == "avg") return Strategy::Avg;
  if (name == "log_avg" || name == "log-avg") return Strategy::LogAvg;
  throw Error("unknown ensemble strategy: " + std::string(name));
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Max: return "max";
    case Strategy::Avg: return "avg";
    case Strategy::LogAvg: return "log_avg";
  }
  return "log_avg";
}

TokenDistribution combine(std::span<const TokenDistribution> dists, Strategy strategy,
                          std::span<const double> weights) {
  if (dists.empty()) throw Error("combine: no distributions");
  const std::size_t n = dists.front().size();
  for (const auto& d : dists) {
    if (d.size() != n) {
      throw Error("combine: vocabulary size mismatch (" + std::to_string(d.size()) + " vs " +
                  std::to_string(n) + ")");
    }
  }
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) {
    w.assign(dists.size(), 1.0 / static_cast<double>(dists.size()));
  } else {
    if (w.size() != dists.size()) throw Error("combine: weight count does not match member count");
    if (std::fabs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) > 1e-9) {
      throw Error("combine: weights must sum to 1");
    }
  }

  TokenDistribution out(n, 0.0);
  switch (strategy) {
    case Strategy::Avg:
      for (std::size_t i = 0; i < dists.size(); ++i) kernels::axpy(w[i], dists[i], out);
      normalize(out);
      break;
    case Strategy::Max:
      out = dists.front();
      for (std::size_t i = 1; i < dists.size(); ++i) kernels::max_inplace(out, dists[i]);
      normalize(out);
      break;
    case Strategy::LogAvg: {
      std::vector<double> logs(n);
      for (std::size_t i = 0; i < dists.size(); ++i) {
        for (std::size_t v = 0; v < n; ++v) logs[v] = std::log(std::max(dists[i][v], kLogFloor));
        kernels::axpy(w[i], logs, out);
      }
      const double top = *std::max_element(out.begin(), out.end());
      for (auto& x : out) x = std::exp(x - top);
      normalize(out);
      break;
    }
  }
  return out;
}

std::shared_ptr<const TargetVocab> union_vocab(std::span<const std::shared_ptr<const ModelOracle>> models) {
  std::vector<std::string> words;
  for (const auto& m : models) {
    auto t = m->known_tokens();
    words.insert(words.end(), t.begin(), t.end());
  }
  return std::make_shared<const TargetVocab>(std::move(words));
}

Ensemble::Ensemble(std::vector<std::shared_ptr<const ModelOracle>> members, Strategy strategy,
                   std::vector<double> weights, std::shared_ptr<const TargetVocab> vocab)
    : members_(std::move(members)), strategy_(strategy), weights_(std::move(weights)),
      vocab_(std::move(vocab)) {
  if (members_.empty()) throw Error("an ensemble needs at least one member");
  if (!weights_.empty()) {
    if (weights_.size() != members_.size()) throw Error("ensemble weights do not match members");
    if (std::fabs(std::accumulate(weights_.begin(), weights_.end(), 0.0) - 1.0) > 1e-9) {
      throw Error("ensemble weights must sum to 1");
    }
  }
  if (!vocab_) vocab_ = union_vocab(members_);
}

void Ensemble::next(const Source& source, std::span<const std::string> prefix,
                    std::span<double> out) const {
  if (members_.size() == 1) {
    members_.front()->next(source, prefix, *vocab_, out);
    return;
  }
  std::vector<TokenDistribution> dists(members_.size(), TokenDistribution(vocab_->size()));
  for (std::size_t i = 0; i < members_.size(); ++i) members_[i]->next(source, prefix, *vocab_, dists[i]);
  const auto mixed = combine(dists, strategy_, weights_);
  std::copy(mixed.begin(), mixed.end(), out.begin());
}

DomainMixture::DomainMixture(std::vector<std::shared_ptr<const Ensemble>> domains, std::vector<double> probs)
    : domains_(std::move(domains)), probs_(std::move(probs)) {
  if (domains_.empty()) throw Error("domain mixture needs at least one domain");
  if (domains_.size() != probs_.size()) {
    throw Error("domain mixture: " + std::to_string(domains_.size()) + " ensembles vs " +
                std::to_string(probs_.size()) + " domain probabilities");
  }
  if (std::fabs(std::accumulate(probs_.begin(), probs_.end(), 0.0) - 1.0) > 1e-9) {
    throw Error("domain probabilities must sum to 1");
  }
  for (const auto& d : domains_) {
    if (!(d->vocab() == domains_.front()->vocab())) {
      throw Error("domain ensembles must share one target vocabulary");
    }
  }
}

void DomainMixture::next(const Source& source, std::span<const std::string> prefix,
                         std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> dist(out.size());
  for (std::size_t d = 0; d < domains_.size(); ++d) {
    if (probs_[d] == 0.0) continue;
    domains_[d]->next(source, prefix, dist);
    kernels::axpy(probs_[d], dist, out);
  }
  normalize(out);
}

DecodeMode decode_mode_from_string(std::string_view name) {
  if (name == "greedy") return DecodeMode::Greedy;
  if (name == "beam") return DecodeMode::Beam;
  if (name == "sample_topk" || name == "sample-topk") return DecodeMode::SampleTopK;
  throw Error("unknown decode mode: " + std::string(name));
}

void DecodeConfig::validate() const {
  if (beam_size < 1) throw Error("beam_size must be >= 1");
  if (mode == DecodeMode::Beam && n_best > beam_size) throw Error("n_best must be <= beam_size");
  if (n_best < 1) throw Error("n_best must be >= 1");
  if (length_penalty < 0.0) throw Error("length penalty must be >= 0");
  if (mode == DecodeMode::SampleTopK && topk < 1) throw Error("topk must be >= 1");
}

std::size_t DecodeConfig::max_len_for(const Source& source) const {
  return max_len > 0 ? max_len : 2 * source.tokens.size() + 10;
}

double length_penalty(std::size_t length, double alpha) {
  return std::pow((5.0 + static_cast<double>(length)) / 6.0, alpha);
}

NBestList decode(const StepModel& model, const Source& source, const DecodeConfig& config) {
  config.validate();
  switch (config.mode) {
    case DecodeMode::Greedy: return greedy_search(model, source, config);
    case DecodeMode::Beam: return beam_search(model, source, config, config.beam_size);
    case DecodeMode::SampleTopK: return sample_topk(model, source, config);
  }
  return {};
}

std::vector<NBestList> decode_all(const StepModel& model, std::span<const Source> sources,
                                  const DecodeConfig& config, unsigned workers) {
  std::vector<NBestList> out(sources.size());
  parallel_for(sources.size(), workers, [&](std::size_t i) { out[i] = decode(model, sources[i], config); });
  return out;
}

NBestList domain_weighted_decode(const std::vector<std::shared_ptr<const Ensemble>>& ensembles,
                                 std::span<const double> probs, const Source& source,
                                 const DecodeConfig& config) {
  const DomainMixture mixture(ensembles, std::vector<double>(probs.begin(), probs.end()));
  return decode(mixture, source, config);
}

double ensemble_dev_bleu(const StepModel& model, std::span<const Source> dev_sources,
                         std::span<const Sentence> dev_refs, const DecodeConfig& config,
                         unsigned workers) {
  const auto lists = decode_all(model, dev_sources, config, workers);
  std::vector<Sentence> hyps;
  hyps.reserve(lists.size());
  for (const auto& l : lists) hyps.push_back(l.hyps.empty() ? Sentence{} : l.hyps.front().tokens);
  return corpus_bleu(hyps, dev_refs);
}

EnsembleSelection greedy_ensemble_select(const std::vector<std::shared_ptr<const ModelOracle>>& candidates,
                                         std::span<const Source> dev_sources,
                                         std::span<const Sentence> dev_refs, const DecodeConfig& config,
                                         Strategy strategy, double epsilon, unsigned workers) {
  if (candidates.size() < 2) throw Error("ensemble selection needs at least two candidates");
  if (dev_sources.empty()) throw Error("ensemble selection needs a non-empty dev set");
  const auto vocab = union_vocab(candidates);
  auto score = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::shared_ptr<const ModelOracle>> members;
    for (auto i : idx) members.push_back(candidates[i]);
    const Ensemble ensemble(members, strategy, {}, vocab);
    return ensemble_dev_bleu(ensemble, dev_sources, dev_refs, config, workers);
  };

  EnsembleSelection sel;
  const std::size_t pool = std::min(kSelectionPool, candidates.size());
  double best = -1.0;
  for (std::size_t i = 0; i < pool; ++i) {
    for (std::size_t j = i + 1; j < pool; ++j) {
      const double b = score({i, j});
      if (b > best) {
        best = b;
        sel.members = {i, j};
      }
    }
  }
  sel.best_pair_bleu = best;
  sel.trace.push_back(best);

  while (sel.members.size() < candidates.size()) {
    double round_best = -1.0;
    std::size_t pick = candidates.size();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (std::find(sel.members.begin(), sel.members.end(), c) != sel.members.end()) continue;
      auto trial = sel.members;
      trial.push_back(c);
      const double b = score(trial);
      if (b > round_best) {
        round_best = b;
        pick = c;
      }
    }
    if (pick == candidates.size() || round_best - sel.trace.back() < epsilon) break;
    sel.members.push_back(pick);
    sel.trace.push_back(round_best);
  }
  return sel;
}

std::string format_nbest_line(std::uint64_t id, const Hypothesis& hyp, double alpha) {
  std::string line = std::to_string(id) + " ||| " + join(hyp.tokens) + " ||| model=" +
                     format_double(hyp.log_prob) +
                     " lp=" + format_double(length_penalty(hyp.tokens.size(), alpha)) + " ||| " +
                     format_double(hyp.penalized);
  if (!hyp.features.empty()) {
    line += " |||";
    for (const auto& [name, value] : hyp.features) line += " " + name + ":" + format_double(value);
  }
  return line;
}

void write_nbest(const std::filesystem::path& path, std::span<const NBestList> lists, double alpha) {
  std::vector<std::string> lines;
  for (const auto& l : lists) {
    for (const auto& h : l.hyps) lines.push_back(format_nbest_line(l.source_id, h, alpha));
  }
  write_lines(path, lines);
}

std::vector<NBestList> read_nbest(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<NBestList> out;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    std::vector<std::string> fields;
    std::string_view rest = lines[ln];
    while (true) {
      const auto pos = rest.find("|||");
      fields.emplace_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest = rest.substr(pos + 3);
    }
    const auto where = path.string() + ":" + std::to_string(ln + 1);
    if (fields.size() < 4) throw Error(where + ": expected at least 4 '|||' fields");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(' ');
      const auto e = s.find_last_not_of(' ');
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    Hypothesis h;
    const auto id = std::stoull(trim(fields[0]));
    h.tokens = split_words(fields[1]);
    for (const auto& kv : split_words(fields[2]).tokens) {
      if (kv.rfind("model=", 0) == 0) h.log_prob = std::stod(kv.substr(6));
    }
    h.penalized = std::stod(trim(fields[3]));
    if (fields.size() > 4) {
      for (const auto& kv : split_words(fields[4]).tokens) {
        const auto colon = kv.rfind(':');
        if (colon == std::string::npos) throw Error(where + ": bad feature '" + kv + "'");
        h.features[kv.substr(0, colon)] = std::stod(kv.substr(colon + 1));
      }
    }
    if (out.empty() || out.back().source_id != id) out.push_back({id, {}});
    out.back().hyps.push_back(std::move(h));
  }
  return out;
}

}  // namespace mtforge
