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
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtforge/align.hpp"
#include "mtforge/core.hpp"
#include "mtforge/ngram_lm.hpp"

namespace mtforge {

/// Target vocabulary shared by every model in an ensemble. Id 0 is end-of-sentence.
class TargetVocab {
 public:
  static constexpr std::uint32_t kEosId = 0;

  /// Words are deduplicated and sorted; "</s>" is always id 0.
  explicit TargetVocab(std::vector<std::string> words = {});

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::uint32_t id) const { return tokens_[id]; }
  std::optional<std::uint32_t> id(const std::string& token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool operator==(const TargetVocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

/// Probability vector over a TargetVocab.
using TokenDistribution = std::vector<double>;

/// True if entries are >= 0 and sum to 1 within tol.
bool is_distribution(std::span<const double> dist, double tol = 1e-9);

struct Source {
  std::uint64_t id = 0;
  Sentence tokens;
};

/// A next-token distribution source: the unit of decoding and ensembling.
class ModelOracle {
 public:
  virtual ~ModelOracle() = default;
  virtual const std::string& name() const = 0;
  /// Output words this model can produce (end-of-sentence excluded).
  virtual std::vector<std::string> known_tokens() const = 0;
  /// Writes p(. | source, prefix) over `vocab` into `out` (size vocab.size()).
  virtual void next(const Source& source, std::span<const std::string> prefix,
                    const TargetVocab& vocab, std::span<double> out) const = 0;
};

/// Explicit (source id, prefix) -> distribution table. Unlisted contexts get the
/// uniform distribution over the vocabulary.
class TableModel : public ModelOracle {
 public:
  explicit TableModel(std::string name) : name_(std::move(name)) {}

  /// `dist` maps tokens ("</s>" for end-of-sentence) to probabilities.
  void add(std::uint64_t src_id, const std::vector<std::string>& prefix,
           std::map<std::string, double> dist);

  /// JSONL lines {"src_id": int, "prefix": [tokens], "dist": {token: prob}}.
  static TableModel load(const std::filesystem::path& path, std::string name);
  void save(const std::filesystem::path& path) const;

  const std::string& name() const override { return name_; }
  std::vector<std::string> known_tokens() const override;
  void next(const Source& source, std::span<const std::string> prefix, const TargetVocab& vocab,
            std::span<double> out) const override;

 private:
  std::string name_;
  std::map<std::pair<std::uint64_t, std::string>, std::map<std::string, double>> table_;
};

/// p(w | source, prefix) proportional to lm(w | prefix) * max over f in source
/// plus NULL of t(w | f). The factor for end-of-sentence is the coverage of the
/// source, the product over source words f of max over prefix words w of t(w | f),
/// until the prefix is as long as the source; from then on it is 1.
class LexiconLM : public ModelOracle {
 public:
  LexiconLM(std::string name, std::shared_ptr<const AlignmentModel> lexicon,
            std::shared_ptr<const NGramLM> lm);

  const std::string& name() const override { return name_; }
  std::vector<std::string> known_tokens() const override;
  void next(const Source& source, std::span<const std::string> prefix, const TargetVocab& vocab,
            std::span<double> out) const override;

 private:
  std::string name_;
  std::shared_ptr<const AlignmentModel> lexicon_;
  std::shared_ptr<const NGramLM> lm_;
};

enum class Strategy { Max, Avg, LogAvg };

Strategy strategy_from_string(std::string_view name);
std::string_view to_string(Strategy s);

inline constexpr double kLogFloor = 1e-9;

/// avg: weighted arithmetic mean. log_avg: exp(sum w_i ln max(p_i, 1e-9)),
/// renormalized. max: elementwise max, renormalized (weights unused). Empty
/// weights mean uniform.
TokenDistribution combine(std::span<const TokenDistribution> dists, Strategy strategy,
                          std::span<const double> weights = {});

/// Anything the beam search can query.
class StepModel {
 public:
  virtual ~StepModel() = default;
  virtual const TargetVocab& vocab() const = 0;
  virtual void next(const Source& source, std::span<const std::string> prefix,
                    std::span<double> out) const = 0;
};

/// Members combined per step with one strategy.
class Ensemble : public StepModel {
 public:
  Ensemble(std::vector<std::shared_ptr<const ModelOracle>> members, Strategy strategy,
           std::vector<double> weights = {}, std::shared_ptr<const TargetVocab> vocab = nullptr);

  const TargetVocab& vocab() const override { return *vocab_; }
  std::shared_ptr<const TargetVocab> shared_vocab() const { return vocab_; }
  void next(const Source& source, std::span<const std::string> prefix,
            std::span<double> out) const override;

  const std::vector<std::shared_ptr<const ModelOracle>>& members() const { return members_; }
  Strategy strategy() const { return strategy_; }

 private:
  std::vector<std::shared_ptr<const ModelOracle>> members_;
  Strategy strategy_;
  std::vector<double> weights_;
  std::shared_ptr<const TargetVocab> vocab_;
};

/// Vocabulary covering every member's output words.
std::shared_ptr<const TargetVocab> union_vocab(std::span<const std::shared_ptr<const ModelOracle>> models);

/// Per step: sum over domains d of P(d | x) * ensemble_d(. | x, prefix).
class DomainMixture : public StepModel {
 public:
  DomainMixture(std::vector<std::shared_ptr<const Ensemble>> domains, std::vector<double> probs);

  const TargetVocab& vocab() const override { return domains_.front()->vocab(); }
  void next(const Source& source, std::span<const std::string> prefix,
            std::span<double> out) const override;

 private:
  std::vector<std::shared_ptr<const Ensemble>> domains_;
  std::vector<double> probs_;
};

enum class DecodeMode { Greedy, Beam, SampleTopK };

DecodeMode decode_mode_from_string(std::string_view name);

struct DecodeConfig {
  DecodeMode mode = DecodeMode::Beam;
  std::size_t beam_size = 10;
  double length_penalty = 1.4;
  std::size_t topk = 10;
  /// 0 means 2 * |source| + 10.
  std::size_t max_len = 0;
  std::size_t n_best = 1;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t max_len_for(const Source& source) const;
};

/// ((5 + length) / 6) ^ alpha
double length_penalty(std::size_t length, double alpha);

struct Hypothesis {
  Sentence tokens;  // end-of-sentence excluded
  double log_prob = 0.0;
  double penalized = 0.0;  // log_prob / length_penalty(|tokens|)
  bool forced = false;     // cut at max_len without end-of-sentence
  std::map<std::string, double> features;
};

struct NBestList {
  std::uint64_t source_id = 0;
  std::vector<Hypothesis> hyps;  // descending penalized score
};

/// Beam: per step every live hypothesis is extended by every token with
/// nonzero probability; the beam_size best extensions by log-probability survive
/// (ties: parent rank, then token id). Extensions ending in end-of-sentence are
/// finished; live hypotheses reaching max_len are finished and flagged forced.
/// Finished hypotheses are ranked by penalized score. Greedy takes the argmax
/// token each step (ties: lowest id). SampleTopK draws n_best samples from the
/// renormalized top-k tokens with the stream (seed, source id).
NBestList decode(const StepModel& model, const Source& source, const DecodeConfig& config);

std::vector<NBestList> decode_all(const StepModel& model, std::span<const Source> sources,
                                  const DecodeConfig& config, unsigned workers = 1);

/// Same as decode with a DomainMixture; `ensembles` and `probs` are indexed by domain.
NBestList domain_weighted_decode(const std::vector<std::shared_ptr<const Ensemble>>& ensembles,
                                 std::span<const double> probs, const Source& source,
                                 const DecodeConfig& config);

struct EnsembleSelection {
  std::vector<std::size_t> members;  // indices into the candidate list
  std::vector<double> trace;         // dev BLEU after the initial pair and each accepted addition
  double best_pair_bleu = 0.0;
};

inline constexpr std::size_t kSelectionPool = 8;
inline constexpr double kSelectionEpsilon = 0.1;

/// Greedy ensemble growth. Candidates are assumed sorted best-first by dev
/// score. Every pair from the first eight is scored by ensemble-decoding the
/// dev set; the best pair seeds the ensemble. Then the remaining candidate that
/// helps most is added while it improves dev BLEU by at least `epsilon`. Ties
/// go to the earlier candidate.
EnsembleSelection greedy_ensemble_select(const std::vector<std::shared_ptr<const ModelOracle>>& candidates,
                                         std::span<const Source> dev_sources,
                                         std::span<const Sentence> dev_refs, const DecodeConfig& config,
                                         Strategy strategy = Strategy::LogAvg,
                                         double epsilon = kSelectionEpsilon, unsigned workers = 1);

/// Corpus BLEU of the top hypotheses of ensemble-decoding the dev set.
double ensemble_dev_bleu(const StepModel& model, std::span<const Source> dev_sources,
                         std::span<const Sentence> dev_refs, const DecodeConfig& config,
                         unsigned workers = 1);

/// `id ||| tokens ||| model=<logprob> lp=<penalty> ||| <penalized>`, plus
/// ` ||| name:value ...` when features are present.
std::string format_nbest_line(std::uint64_t id, const Hypothesis& hyp, double alpha);
void write_nbest(const std::filesystem::path& path, std::span<const NBestList> lists, double alpha);
/// Groups consecutive lines with the same id, keeping file order.
std::vector<NBestList> read_nbest(const std::filesystem::path& path);

}  // namespace mtforge
