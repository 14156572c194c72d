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

#include <functional>
#include <memory>
#include <vector>

#include "mtforge/align.hpp"
#include "mtforge/augment.hpp"
#include "mtforge/decode.hpp"

namespace mtforge {

/// Rebuilds a direction's model from all synthetic pairs generated for it so far.
using Retrainer = std::function<std::shared_ptr<const ModelOracle>(const Corpus& synthetic)>;

struct BtDirection {
  std::shared_ptr<const ModelOracle> oracle;
  /// Empty: the oracle stays fixed across rounds.
  Retrainer retrain;
  std::vector<Source> dev_sources;
  std::vector<Sentence> dev_refs;
};

struct BtConfig {
  std::size_t rounds = 3;
  DecodeConfig decode;
  NoiseConfig noise;
  double min_gain = 0.1;
  unsigned workers = 1;

  void validate() const;
};

struct BtRound {
  std::size_t round = 0;  // 1-based
  Corpus synthetic_s2t;   // (noised back-translation of tgt-mono, tgt-mono)
  Corpus synthetic_t2s;   // (noised translation of src-mono, src-mono)
  double dev_bleu_s2t = 0.0;
  double dev_bleu_t2s = 0.0;
};

struct BtResult {
  double baseline_s2t = 0.0;
  double baseline_t2s = 0.0;
  std::vector<BtRound> rounds;
  bool stopped_early = false;

  nlohmann::json trace() const;
};

/// Joint back-translation. Each round the target-to-source model translates
/// tgt-mono and the noised outputs become sources of new source-to-target
/// pairs; symmetrically for src-mono. Both directions are then retrained on
/// their accumulated synthetic data and evaluated on their dev sets. The loop
/// ends after `rounds`, or earlier once the source-to-target dev BLEU gains less
/// than `min_gain` over the previous round. Synthetic pairs are tagged
/// origin = "bt-round-<k>". Dev BLEU is 0 for a direction without dev data.
BtResult iterate_joint_bt(BtDirection s2t, BtDirection t2s, const Corpus& src_mono,
                          const Corpus& tgt_mono, const BtConfig& config);

/// Retrainer for a LexiconLM: aligns `seed` plus the synthetic pairs and pairs
/// the new lexicon with the fixed target LM.
Retrainer lexicon_retrainer(std::string name, Corpus seed, std::shared_ptr<const NGramLM> target_lm,
                            AlignConfig align = {}, unsigned workers = 1);

}  // namespace mtforge
