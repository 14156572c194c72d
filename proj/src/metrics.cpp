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

#include "mtforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace mtforge {

namespace {

using NgramCounts = std::unordered_map<std::string, std::uint64_t>;

NgramCounts count_ngrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  std::string key;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    key.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (k) key += '\x1f';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

double brevity_penalty(std::uint64_t hyp_len, std::uint64_t ref_len) {
  if (hyp_len == 0) return 0.0;
  if (hyp_len >= ref_len) return 1.0;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (int n = 0; n < kBleuOrder; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  hyp_len += other.hyp_len;
  ref_len += other.ref_len;
  return *this;
}

nlohmann::json BleuResult::to_json() const {
  return {{"bleu", bleu}, {"precisions", precisions}, {"bp", bp},
          {"hyp_len", hyp_len}, {"ref_len", ref_len}};
}

BleuStats bleu_stats(std::span<const std::string> hyp, std::span<const std::string> ref) {
  BleuStats s;
  s.hyp_len = hyp.size();
  s.ref_len = ref.size();
  for (std::size_t n = 1; n <= kBleuOrder; ++n) {
    const auto h = count_ngrams(hyp, n);
    const auto r = count_ngrams(ref, n);
    std::uint64_t matched = 0;
    for (const auto& [gram, c] : h) {
      auto it = r.find(gram);
      if (it != r.end()) matched += std::min(c, it->second);
    }
    s.matches[n - 1] = matched;
    s.totals[n - 1] = hyp.size() >= n ? hyp.size() - n + 1 : 0;
  }
  return s;
}

BleuResult corpus_bleu(const BleuStats& total) {
  BleuResult r;
  r.hyp_len = total.hyp_len;
  r.ref_len = total.ref_len;
  r.bp = brevity_penalty(total.hyp_len, total.ref_len);
  double log_sum = 0.0;
  bool zero = total.hyp_len == 0;
  for (int n = 0; n < kBleuOrder; ++n) {
    if (total.totals[n] == 0 || total.matches[n] == 0) {
      r.precisions[n] = 0.0;
      zero = true;
      continue;
    }
    const double p = static_cast<double>(total.matches[n]) / static_cast<double>(total.totals[n]);
    r.precisions[n] = 100.0 * p;
    log_sum += std::log(p);
  }
  r.bleu = zero ? 0.0 : 100.0 * r.bp * std::exp(log_sum / kBleuOrder);
  return r;
}

BleuResult corpus_bleu(std::span<const BleuStats> stats) {
  if (stats.empty()) throw Error("corpus_bleu: no sentences");
  BleuStats total;
  for (const auto& s : stats) total += s;
  return corpus_bleu(total);
}

double corpus_bleu(std::span<const Sentence> hyps, std::span<const Sentence> refs) {
  if (hyps.size() != refs.size()) {
    throw Error("corpus_bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                std::to_string(refs.size()) + " references");
  }
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += bleu_stats(hyps[i], refs[i]);
  if (hyps.empty()) throw Error("corpus_bleu: no sentences");
  return corpus_bleu(total).bleu;
}

double sentence_bleu(const Sentence& hyp, const Sentence& ref) {
  if (hyp.empty()) return 0.0;
  const BleuStats s = bleu_stats(hyp, ref);
  if (s.matches[0] == 0) return 0.0;
  double log_sum = std::log(static_cast<double>(s.matches[0]) / static_cast<double>(s.totals[0]));
  for (int n = 1; n < kBleuOrder; ++n) {
    log_sum += std::log(static_cast<double>(s.matches[n] + 1) / static_cast<double>(s.totals[n] + 1));
  }
  return 100.0 * brevity_penalty(s.hyp_len, s.ref_len) * std::exp(log_sum / kBleuOrder);
}

}  // namespace mtforge
