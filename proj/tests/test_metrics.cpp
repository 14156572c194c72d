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

#include <cmath>
#include <map>

#include "doctest.h"
#include "mtforge/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mtforge;
using namespace mtforge::testing;

TEST_CASE("hand-counted statistics") {
  const auto s = bleu_stats(words("the cat sat"), words("the cat sat down"));
  CHECK(s.matches == std::array<std::uint64_t, 4>{3, 2, 1, 0});
  CHECK(s.totals == std::array<std::uint64_t, 4>{3, 2, 1, 0});
  CHECK(corpus_bleu(s).bleu == 0.0);

  const auto same = bleu_stats(words("a b c d e"), words("a b c d e"));
  CHECK(same.matches == std::array<std::uint64_t, 4>{5, 4, 3, 2});
  CHECK(same.totals == same.matches);

  const auto disjoint = bleu_stats(words("a b c"), words("x y z"));
  CHECK(disjoint.matches == std::array<std::uint64_t, 4>{0, 0, 0, 0});
}

TEST_CASE("corpus BLEU closed forms") {
  // Precisions 5/6, 3/5, 2/4, 1/3 and a reference one token longer.
  const auto r = corpus_bleu(bleu_stats(words("a b c d e f"), words("a b c d x f g")));
  const double expected = 100.0 * std::exp(1.0 - 7.0 / 6.0) * std::pow(1.0 / 12.0, 0.25);
  CHECK(std::abs(r.bleu - expected) <= 1e-9);
  CHECK(std::abs(r.bp - std::exp(-1.0 / 6.0)) <= 1e-12);
  CHECK(r.precisions[0] == doctest::Approx(100.0 * 5.0 / 6.0));

  // Half-length hypothesis with perfect precisions: BP = e^-1.
  const auto half = corpus_bleu(bleu_stats(words("a b c d"), words("a b c d a b c d")));
  CHECK(std::abs(half.bp - std::exp(-1.0)) <= 1e-12);
  CHECK(std::abs(half.bleu - 100.0 * std::exp(-1.0)) <= 1e-9);

  const auto perfect = corpus_bleu(bleu_stats(words("x y z w"), words("x y z w")));
  CHECK(perfect.bleu == 100.0);
  CHECK(perfect.to_json().at("hyp_len") == 4);
}

TEST_CASE("sentence BLEU smooths higher orders") {
  const double expected = 100.0 * std::pow(2.0 / 3.0 * 2.0 / 3.0 * 1.0 / 2.0 * 1.0, 0.25);
  CHECK(std::abs(sentence_bleu(words("a b c"), words("a b d")) - expected) <= 1e-9);
  CHECK(sentence_bleu(words("p q r s t"), words("p q r s t")) == 100.0);
  CHECK(sentence_bleu(words("a b c d e"), words("v w x y z")) == 0.0);
  CHECK(sentence_bleu(Sentence{}, words("a")) == 0.0);
  CHECK(sentence_bleu(words("a"), words("a")) == 100.0);
}

TEST_CASE("identical corpora score exactly 100") {
  Rng rng(3);
  std::vector<Sentence> hyps;
  for (int i = 0; i < 50; ++i) hyps.push_back(random_sentence(rng, 1, 12, 20));
  CHECK(corpus_bleu(hyps, hyps) == 100.0);
}

TEST_CASE("statistics agree with the counting oracle (property)") {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const Sentence h = random_sentence(rng, 0, 10, 5);
    const Sentence r = random_sentence(rng, 0, 10, 5);
    const auto s = bleu_stats(h, r);
    CHECK(s == counted_stats(h, r));
    for (int n = 0; n < 4; ++n) CHECK(s.matches[n] <= s.totals[n]);
  }
}

TEST_CASE("split and merge gives the same corpus score (property)") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Sentence> hyps, refs;
    const std::size_t n = 2 + rng.below(20);
    for (std::size_t i = 0; i < n; ++i) {
      refs.push_back(random_sentence(rng, 1, 10, 6));
      hyps.push_back(rng.bernoulli(0.2) ? refs.back() : random_sentence(rng, 1, 10, 6));
    }
    const std::size_t cut = 1 + rng.below(n - 1);
    BleuStats a, b, all;
    std::vector<BleuStats> per;
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = bleu_stats(hyps[i], refs[i]);
      (i < cut ? a : b) += s;
      all += s;
      per.push_back(s);
    }
    BleuStats merged = a;
    merged += b;
    CHECK(merged == all);
    CHECK(corpus_bleu(merged).bleu == corpus_bleu(per).bleu);
    CHECK(corpus_bleu(hyps, refs) == corpus_bleu(all).bleu);

    // Sentence order does not matter.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    shuffle(order, rng);
    std::vector<Sentence> h2, r2;
    for (std::size_t i : order) {
      h2.push_back(hyps[i]);
      r2.push_back(refs[i]);
    }
    CHECK(corpus_bleu(h2, r2) == doctest::Approx(corpus_bleu(hyps, refs)).epsilon(1e-12));
    const double score = corpus_bleu(hyps, refs);
    CHECK(score >= 0.0);
    CHECK(score <= 100.0);
  }
}

TEST_CASE("degenerate corpora") {
  CHECK_THROWS_AS(corpus_bleu(std::vector<Sentence>{}, std::vector<Sentence>{}), Error);
  CHECK_THROWS_AS(corpus_bleu(sentences({"a"}), sentences({"a", "b"})), Error);
  CHECK(corpus_bleu(BleuStats{}).bleu == 0.0);
  CHECK(corpus_bleu(sentences({""}), sentences({"a"})) == 0.0);
}

TEST_CASE("sentence BLEU follows its smoothing formula (property)") {
  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const Sentence h = random_sentence(rng, 0, 12, 6);
    const Sentence r = random_sentence(rng, 0, 12, 6);
    CHECK(std::abs(sentence_bleu(h, r) - sentence_bleu_formula(h, r)) <= 1e-9);
  }
}
