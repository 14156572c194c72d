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

#include "mtforge/augment.hpp"

#include <algorithm>

#include "mtforge/metrics.hpp"
#include "mtforge/parallel.hpp"

namespace mtforge {

void NoiseConfig::validate() const {
  for (double p : {p_drop, p_blank, p_swap}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("noise probabilities must be in [0, 1]");
  }
}

Sentence add_noise(const Sentence& sentence, const NoiseConfig& config, Rng& rng, NoiseStats* stats) {
  NoiseStats local;
  Sentence out;
  out.level = sentence.level;
  out.tokens.reserve(sentence.size());
  for (const auto& tok : sentence.tokens) {
    if (rng.bernoulli(config.p_drop)) {
      ++local.dropped;
    } else {
      out.tokens.push_back(tok);
    }
  }
  for (auto& tok : out.tokens) {
    if (rng.bernoulli(config.p_blank)) {
      tok = config.filler;
      ++local.blanked;
    }
  }
  for (std::size_t i = 0; i + 1 < out.tokens.size(); ++i) {
    ++local.swap_trials;
    if (rng.bernoulli(config.p_swap)) {
      std::swap(out.tokens[i], out.tokens[i + 1]);
      ++local.swapped;
    }
  }
  if (stats) *stats = local;
  return out;
}

Sentence add_noise(const Sentence& sentence, const NoiseConfig& config, std::uint64_t sentence_id,
                   NoiseStats* stats) {
  Rng rng = Rng::for_item(config.seed, sentence_id);
  return add_noise(sentence, config, rng, stats);
}

Corpus noise_corpus(Corpus corpus, const NoiseConfig& config, Which side, unsigned workers) {
  config.validate();
  parallel_for(corpus.size(), workers, [&](std::size_t i) {
    auto& p = corpus.pairs[i];
    Sentence& s = side == Which::Src ? p.src : p.tgt;
    s = add_noise(s, config, p.id);
  });
  return corpus;
}

Corpus reverse_source(Corpus corpus) {
  for (auto& p : corpus.pairs) std::reverse(p.src.tokens.begin(), p.src.tokens.end());
  return corpus;
}

std::pair<Corpus, RunReport> kd_filter(const Corpus& hypotheses, std::span<const Sentence> references,
                                       double threshold, unsigned workers) {
  if (references.size() != hypotheses.size()) {
    throw Error("kd_filter: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                std::to_string(references.size()) + " references");
  }
  Stopwatch timer;
  RunReport report;
  report.stage = "kd-filter";
  report.count_in = hypotheses.size();
  std::vector<double> bleu(hypotheses.size(), 0.0);
  parallel_for(hypotheses.size(), workers, [&](std::size_t i) {
    if (!references[i].empty()) bleu[i] = sentence_bleu(hypotheses.pairs[i].tgt, references[i]);
  });
  Corpus kept;
  kept.side = hypotheses.side;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (references[i].empty()) {
      ++report.drops["empty-ref"];
    } else if (bleu[i] < threshold) {
      ++report.drops["low-bleu"];
    } else {
      kept.pairs.push_back(hypotheses.pairs[i]);
      kept.pairs.back().scores["sent-bleu"] = bleu[i];
    }
  }
  report.count_out = kept.size();
  report.extra["threshold"] = threshold;
  report.wall_time_s = timer.seconds();
  return {std::move(kept), std::move(report)};
}

}  // namespace mtforge
