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

#include "mtforge/bt.hpp"

#include "mtforge/parallel.hpp"

namespace mtforge {

namespace {

double dev_bleu(const BtDirection& dir, const DecodeConfig& decode, unsigned workers) {
  if (dir.dev_sources.empty()) return 0.0;
  const Ensemble single({dir.oracle}, Strategy::Avg);
  return ensemble_dev_bleu(single, dir.dev_sources, dir.dev_refs, decode, workers);
}

/// Translates the source side of `mono` with `oracle`, noises the output and
/// pairs it with the original text: (noised translation, original).
Corpus back_translate(std::shared_ptr<const ModelOracle> oracle, const Corpus& mono,
                      const BtConfig& config, std::size_t round) {
  const Ensemble single({std::move(oracle)}, Strategy::Avg);
  std::vector<Source> sources;
  sources.reserve(mono.pairs.size());
  for (const auto& p : mono.pairs) sources.push_back({p.id, p.src});
  DecodeConfig decode = config.decode;
  decode.n_best = 1;
  const auto lists = decode_all(single, sources, decode, config.workers);

  Corpus out;
  out.side = Side::Bilingual;
  out.pairs.resize(mono.pairs.size());
  const std::string origin = "bt-round-" + std::to_string(round);
  parallel_for(mono.pairs.size(), config.workers, [&](std::size_t i) {
    const auto& p = mono.pairs[i];
    SentencePair sp;
    sp.id = p.id;
    sp.src = add_noise(lists[i].hyps.front().tokens, config.noise, p.id);
    sp.tgt = p.src;
    sp.tags["origin"] = origin;
    out.pairs[i] = std::move(sp);
  });
  return out;
}

void append(Corpus& into, const Corpus& more) {
  into.pairs.insert(into.pairs.end(), more.pairs.begin(), more.pairs.end());
}

}  // namespace

void BtConfig::validate() const {
  if (rounds < 1) throw Error("bt rounds must be >= 1");
  decode.validate();
  noise.validate();
}

nlohmann::json BtResult::trace() const {
  nlohmann::json rows = nlohmann::json::array();
  rows.push_back({{"round", 0}, {"dev_bleu_s2t", baseline_s2t}, {"dev_bleu_t2s", baseline_t2s}});
  for (const auto& r : rounds) {
    rows.push_back({{"round", r.round},
                    {"dev_bleu_s2t", r.dev_bleu_s2t},
                    {"dev_bleu_t2s", r.dev_bleu_t2s},
                    {"synthetic_s2t", r.synthetic_s2t.pairs.size()},
                    {"synthetic_t2s", r.synthetic_t2s.pairs.size()}});
  }
  return {{"rounds", rows}, {"stopped_early", stopped_early}};
}

BtResult iterate_joint_bt(BtDirection s2t, BtDirection t2s, const Corpus& src_mono,
                          const Corpus& tgt_mono, const BtConfig& config) {
  config.validate();
  if (!s2t.oracle || !t2s.oracle) throw Error("joint back-translation needs both oracles");

  BtResult result;
  result.baseline_s2t = dev_bleu(s2t, config.decode, config.workers);
  result.baseline_t2s = dev_bleu(t2s, config.decode, config.workers);
  double previous = result.baseline_s2t;

  Corpus accumulated_s2t{Side::Bilingual, {}};
  Corpus accumulated_t2s{Side::Bilingual, {}};
  for (std::size_t k = 1; k <= config.rounds; ++k) {
    BtRound round;
    round.round = k;
    round.synthetic_s2t = back_translate(t2s.oracle, tgt_mono, config, k);
    round.synthetic_t2s = back_translate(s2t.oracle, src_mono, config, k);
    append(accumulated_s2t, round.synthetic_s2t);
    append(accumulated_t2s, round.synthetic_t2s);

    if (s2t.retrain) s2t.oracle = s2t.retrain(accumulated_s2t);
    if (t2s.retrain) t2s.oracle = t2s.retrain(accumulated_t2s);

    round.dev_bleu_s2t = dev_bleu(s2t, config.decode, config.workers);
    round.dev_bleu_t2s = dev_bleu(t2s, config.decode, config.workers);
    const double gain = round.dev_bleu_s2t - previous;
    previous = round.dev_bleu_s2t;
    result.rounds.push_back(std::move(round));
    if (k < config.rounds && gain < config.min_gain) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

Retrainer lexicon_retrainer(std::string name, Corpus seed, std::shared_ptr<const NGramLM> target_lm,
                            AlignConfig align, unsigned workers) {
  return [name = std::move(name), seed = std::move(seed), lm = std::move(target_lm), align,
          workers](const Corpus& synthetic) -> std::shared_ptr<const ModelOracle> {
    Corpus all = seed;
    all.pairs.insert(all.pairs.end(), synthetic.pairs.begin(), synthetic.pairs.end());
    auto lexicon = std::make_shared<const AlignmentModel>(train_align(all, align, workers));
    return std::make_shared<const LexiconLM>(name, std::move(lexicon), lm);
  };
}

}  // namespace mtforge
