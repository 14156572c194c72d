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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "mtforge/align.hpp"
#include "mtforge/augment.hpp"
#include "mtforge/bpe.hpp"
#include "mtforge/domain.hpp"
#include "mtforge/rerank.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mtforge;
using namespace mtforge::testing;

namespace {

class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& text) { notes_.push_back(text); }
  bool passed() const { return failures_.empty(); }
  std::string summary() const {
    const auto& parts = passed() ? notes_ : failures_;
    std::string out;
    for (std::size_t i = 0; i < parts.size() && i < 6; ++i) out += (i ? "; " : "") + parts[i];
    if (parts.size() > 6) out += "; +" + std::to_string(parts.size() - 6) + " more";
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(double x, int digits = 3) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << std::fixed << x;
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI inside `cwd`, capturing output under `logs`.
CliRun run_cli(const std::filesystem::path& cwd, const std::filesystem::path& logs, const std::string& args) {
  const auto out = logs / "stdout.txt";
  const auto err = logs / "stderr.txt";
  const std::string cmd = "cd " + quoted(cwd) + " && " + quoted(MTFORGE_CLI_PATH) + " " + args + " >" + quoted(out) +
                          " 2>" + quoted(err);
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void write_jsonl(const Corpus& c, const std::filesystem::path& path) {
  const std::filesystem::path paths[] = {path};
  write_corpus(c, paths, CorpusFormat::Jsonl);
}

Corpus read_jsonl(const std::filesystem::path& path) {
  const std::filesystem::path paths[] = {path};
  return read_corpus(paths, CorpusFormat::Jsonl);
}

double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------------------
// 1. Filtering

// 100 violations per rule, interleaved. Each duplicate repeats a ratio or
// language violator seen earlier, so its first copy is charged elsewhere.
Corpus planted_violations(Rng& rng) {
  Corpus c;
  const std::vector<std::string> tags{"<b>", "<br/>", "</p>", "<a", "<!--"};
  for (std::uint64_t i = 0; i < 100; ++i) {
    const std::uint64_t base = i * 6;

    auto ratio = clean_pair(rng, base);
    ratio.src.tokens.resize(1 + rng.below(2));
    ratio.tgt = en_sentence(rng, 3 * ratio.src.size() + 1 + rng.below(6));
    c.pairs.push_back(ratio);

    auto lang = clean_pair(rng, base + 1);
    lang.src = en_sentence(rng, lang.tgt.size());
    c.pairs.push_back(lang);

    // Alternate which side runs over the limit.
    auto length = clean_pair(rng, base + 2);
    const std::size_t n = 121 + rng.below(30);
    length.src = zh_sentence(rng, i % 2 ? 100 : n);
    length.tgt = en_sentence(rng, i % 2 ? n : n + rng.below(5));
    c.pairs.push_back(length);

    auto longword = clean_pair(rng, base + 3);
    std::string w;
    for (std::size_t k = 0, len = 41 + rng.below(20); k < len; ++k) w.push_back(static_cast<char>('a' + rng.below(26)));
    longword.tgt.tokens[rng.below(longword.tgt.size())] = w;
    c.pairs.push_back(longword);

    auto html = clean_pair(rng, base + 4);
    const std::string& tag = tags[i % tags.size()];
    if (tag == "<a" || tag == "<!--") {
      html.tgt.tokens.insert(html.tgt.tokens.begin() + static_cast<std::ptrdiff_t>(rng.below(html.tgt.size())), tag);
      html.tgt.tokens.push_back(tag == "<a" ? "href=x>" : "-->");
    } else {
      html.tgt.tokens[rng.below(html.tgt.size())] = tag;
    }
    c.pairs.push_back(html);

    auto dup = i % 2 ? lang : ratio;
    dup.id = base + 5;
    c.pairs.push_back(dup);
  }
  return c;
}

void criterion_filter(Checks& chk) {
  Rng rng(101);
  TempDir dir;
  toy_langid()->save(dir / "langid.json");
  const std::map<std::string, std::size_t> expected{{"ratio", 100}, {"langid", 100}, {"length", 100},
                                                    {"long-word", 100}, {"html", 100}, {"dedup", 100}};
  const std::string reasons[] = {"ratio", "langid", "length", "long-word", "html", "dedup"};

  const Corpus planted = planted_violations(rng);
  chk.expect(planted.size() == 600, "planted corpus has " + std::to_string(planted.size()) + " pairs");

  // Every non-duplicate violator is caught by its own rule when filtered alone.
  const FilterConfig cfg;
  const auto rules = default_rules(cfg, true);
  std::size_t misattributed = 0;
  for (std::size_t i = 0; i < planted.size(); ++i) {
    if (i % 6 == 5) continue;
    Corpus one;
    one.pairs.push_back(planted.pairs[i]);
    const auto [kept, report] = run_pipeline(one, rules);
    misattributed += !(kept.empty() && report.drops.size() == 1 && report.drops.contains(reasons[i % 6]));
  }
  chk.expect(misattributed == 0, std::to_string(misattributed) + " pairs charged to the wrong rule in isolation");

  Corpus clean;
  for (std::uint64_t i = 0; i < 400; ++i) clean.pairs.push_back(clean_pair(rng, 1000 + i));
  Corpus mixed = planted;
  for (const auto& p : clean.pairs) mixed.pairs.push_back(p);

  double slowest = 0.0;
  for (const Corpus* variant : std::array<const Corpus*, 2>{&planted, &mixed}) {
    const std::string tag = variant == &planted ? "600 planted" : "600 planted + 400 clean";
    write_jsonl(*variant, dir / "in.jsonl");
    const auto start = std::chrono::steady_clock::now();
    const auto r = run_cli(dir.path(), dir.path(),
                           "filter --input in.jsonl --output out.jsonl --langid langid.json");
    const double elapsed = seconds_since(start);
    slowest = std::max(slowest, elapsed);
    if (r.code != 0) {
      chk.expect(false, tag + ": filter exited " + std::to_string(r.code) + ": " + r.err);
      continue;
    }
    const auto report = nlohmann::json::parse(r.out);
    const auto drops = report.at("drops").get<std::map<std::string, std::size_t>>();
    chk.expect(drops == expected, tag + ": drops " + report.at("drops").dump());
    const Corpus kept = read_jsonl(dir / "out.jsonl");
    const Corpus& want = variant == &planted ? Corpus{} : clean;
    std::vector<std::uint64_t> kept_ids, want_ids;
    for (const auto& p : kept.pairs) kept_ids.push_back(p.id);
    for (const auto& p : want.pairs) want_ids.push_back(p.id);
    chk.expect(kept_ids == want_ids, tag + ": kept " + std::to_string(kept.size()) + " pairs, expected " +
                                         std::to_string(want.size()));
    chk.expect(elapsed < 5.0, tag + ": runtime " + fmt(elapsed) + " s");
  }
  chk.note("100 drops per rule, exact kept set, slowest run " + fmt(slowest) + " s");
}

// ---------------------------------------------------------------------------
// 2. Moore-Lewis selection

void criterion_selection(Checks& chk) {
  Rng rng(3);
  const auto lms = domain_lms(rng, "med");
  const Corpus pool = score_moore_lewis(planted_domain_pool(rng), lms, "ml");
  const auto r = select_top_k(pool, "ml", 100, Criterion::Lowest);
  std::size_t hits = 0;
  for (const auto& p : r.selected.pairs) hits += p.id < 100;
  chk.expect(hits >= 95, "recovered " + std::to_string(hits) + "/100");

  std::vector<Sentence> src, tgt;
  for (int i = 0; i < 50; ++i) {
    const auto p = domain_pair(rng, "news", 0.3, 0);
    src.push_back(p.src);
    tgt.push_back(p.tgt);
  }
  const LmConfig cfg{3, Level::Word, 1};
  const LMSet same{train_ngram(src, cfg), train_ngram(src, cfg), train_ngram(tgt, cfg), train_ngram(tgt, cfg)};
  std::size_t nonzero = 0;
  for (const auto& p : score_moore_lewis(planted_domain_pool(rng), same, "ml", 3).pairs) nonzero += p.score("ml") != 0.0;
  chk.expect(nonzero == 0, std::to_string(nonzero) + " nonzero scores with identical LMs");
  chk.note("recovered " + std::to_string(hits) + "/100 at k=100; identical LMs score exactly 0");
}

// ---------------------------------------------------------------------------
// 3. Alignment

void criterion_alignment(Checks& chk) {
  Rng rng(31);
  Corpus noise;
  for (std::uint64_t i = 0; i < 120; ++i) {
    noise.pairs.push_back({i, random_sentence(rng, 1, 9, 25, "f"), random_sentence(rng, 1, 9, 25, "e"), {}, {}});
  }
  AlignConfig cfg;
  cfg.iterations = 10;
  const auto noise_model = train_align(noise, cfg);
  const auto& ll = noise_model.log_likelihood_trace();
  chk.expect(ll.size() == 10, "trace has " + std::to_string(ll.size()) + " entries");
  double worst = 0.0;
  for (std::size_t k = 1; k < ll.size(); ++k) worst = std::min(worst, ll[k] - ll[k - 1]);
  chk.expect(worst >= -1e-9, "log-likelihood fell by " + std::to_string(-worst));

  const std::size_t vocab = 30;
  std::vector<std::size_t> perm(vocab);
  for (std::size_t i = 0; i < vocab; ++i) perm[i] = i;
  shuffle(perm, rng);
  Corpus diag;
  for (std::uint64_t i = 0; i < 400; ++i) {
    SentencePair p;
    p.id = i;
    for (std::size_t k = 0, len = 3 + rng.below(8); k < len; ++k) {
      const std::size_t w = rng.below(vocab);
      p.src.tokens.push_back("f" + std::to_string(w));
      p.tgt.tokens.push_back("e" + std::to_string(perm[w]));
    }
    diag.pairs.push_back(p);
  }
  const auto lex = train_align(diag, cfg);
  std::size_t wrong = 0;
  for (std::size_t w = 0; w < vocab; ++w) {
    const std::string f = "f" + std::to_string(w);
    std::string best;
    double best_p = -1.0;
    for (std::size_t o = 0; o < vocab; ++o) {
      const std::string e = "e" + std::to_string(o);
      if (lex.t(e, f) > best_p) best_p = lex.t(e, f), best = e;
    }
    wrong += best != "e" + std::to_string(perm[w]);
  }
  chk.expect(wrong == 0, std::to_string(wrong) + "/30 source words with the wrong argmax");

  const Corpus two = bilingual({{"a", "x"}, {"a b", "x y"}});
  AlignConfig fixed;
  fixed.iterations = 5;
  fixed.optimize_tension = false;
  const auto model = train_align(two, fixed);
  EnumeratedEm oracle{fixed.p0, fixed.tension, {}, {}};
  oracle.run(two, 5);
  double gap = 0.0;
  for (const auto& [f, row] : oracle.t) {
    for (const auto& [e, p] : row) gap = std::max(gap, std::abs(model.t(e, f) - p));
  }
  for (std::size_t k = 0; k < oracle.ll.size(); ++k) {
    gap = std::max(gap, std::abs(model.log_likelihood_trace()[k] - oracle.ll[k]));
  }
  chk.expect(gap <= 1e-10, "hand EM differs by " + std::to_string(gap));

  std::ostringstream gap_text;
  gap_text.precision(1);
  gap_text << std::scientific << gap;
  chk.note("ll monotone over 10 iterations; 30/30 lexicon entries; hand-EM gap " + gap_text.str());
}

// ---------------------------------------------------------------------------
// 4. BLEU

void criterion_bleu(Checks& chk) {
  // Precisions 5/6, 3/5, 2/4, 1/3 against a reference one token longer.
  const auto hand = corpus_bleu(bleu_stats(words("a b c d e f"), words("a b c d x f g")));
  const double hand_expected = 100.0 * std::exp(1.0 - 7.0 / 6.0) * std::pow(1.0 / 12.0, 0.25);
  chk.expect(std::abs(hand.bleu - hand_expected) <= 1e-9, "hand-counted BLEU " + std::to_string(hand.bleu));

  const auto half = corpus_bleu(bleu_stats(words("a b c d"), words("a b c d a b c d")));
  chk.expect(std::abs(half.bp - std::exp(-1.0)) <= 1e-9, "BP " + std::to_string(half.bp));
  chk.expect(std::abs(half.bleu - 100.0 * std::exp(-1.0)) <= 1e-9, "BP case BLEU " + std::to_string(half.bleu));

  Rng rng(8);
  std::vector<Sentence> same;
  for (int i = 0; i < 200; ++i) same.push_back(random_sentence(rng, 1, 25, 40));
  chk.expect(corpus_bleu(same, same) == 100.0, "identical corpora score " + std::to_string(corpus_bleu(same, same)));

  std::size_t bad = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Sentence> hyps, refs;
    const std::size_t n = 2 + rng.below(30);
    for (std::size_t i = 0; i < n; ++i) {
      refs.push_back(random_sentence(rng, 1, 12, 6));
      hyps.push_back(rng.bernoulli(0.2) ? refs.back() : random_sentence(rng, 1, 12, 6));
    }
    const std::size_t cut = 1 + rng.below(n - 1);
    BleuStats a, b, whole;
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = bleu_stats(hyps[i], refs[i]);
      bad += !(s == counted_stats(hyps[i], refs[i]));
      (i < cut ? a : b) += s;
      whole += s;
    }
    a += b;
    bad += !(a == whole) || corpus_bleu(a).bleu != corpus_bleu(hyps, refs);
  }
  chk.expect(bad == 0, std::to_string(bad) + " split-merge mismatches");
  chk.note("closed forms within 1e-9; identical = 100; 300 split-merge trials");
}

// ---------------------------------------------------------------------------
// 5. Noise

Sentence twenty_tokens(std::size_t i) {
  Sentence s;
  for (std::size_t k = 0; k < 20; ++k) s.tokens.push_back("t" + std::to_string((i + k) % 97));
  return s;
}

void criterion_noise(Checks& chk) {
  NoiseConfig cfg;
  cfg.seed = 17;
  NoiseStats total;
  std::size_t tokens = 0, survivors = 0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    NoiseStats st;
    const Sentence s = twenty_tokens(i);
    add_noise(s, cfg, i, &st);
    tokens += s.size();
    survivors += s.size() - st.dropped;
    total.dropped += st.dropped;
    total.blanked += st.blanked;
    total.swapped += st.swapped;
    total.swap_trials += st.swap_trials;
  }
  const double drop = static_cast<double>(total.dropped) / static_cast<double>(tokens);
  const double blank = static_cast<double>(total.blanked) / static_cast<double>(survivors);
  const double swap = static_cast<double>(total.swapped) / static_cast<double>(total.swap_trials);
  for (const auto& [name, rate] : {std::pair{"drop", drop}, {"blank", blank}, {"swap", swap}}) {
    chk.expect(std::abs(rate - 0.05) <= 0.005, std::string(name) + " rate " + fmt(rate, 4));
  }

  Rng rng(2);
  const NoiseConfig zero{0.0, 0.0, 0.0, "<BLANK>", 3};
  std::size_t changed = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const Sentence s = random_sentence(rng, 0, 30, 50);
    changed += add_noise(s, zero, i) != s;
  }
  chk.expect(changed == 0, std::to_string(changed) + " sentences changed at p=0");

  Corpus c;
  for (std::uint64_t i = 0; i < 2000; ++i) c.pairs.push_back({i, twenty_tokens(i), twenty_tokens(i + 3), {}, {}});
  const NoiseConfig heavy{0.2, 0.2, 0.2, "<BLANK>", 7};
  const Corpus once = noise_corpus(c, heavy, Which::Src, 1);
  chk.expect(once == noise_corpus(c, heavy, Which::Src, 1), "two single-worker runs differ");
  chk.expect(once == noise_corpus(c, heavy, Which::Src, 8), "1 and 8 workers differ");
  chk.note("drop " + fmt(drop, 4) + ", blank " + fmt(blank, 4) + ", swap " + fmt(swap, 4) +
           "; p=0 identity; reproducible across workers");
}

// ---------------------------------------------------------------------------
// 6. BPE

// About 1M tokens with Zipfian word frequencies over a 150K-word vocabulary.
std::vector<Sentence> zipf_corpus(std::size_t tokens_wanted) {
  Rng rng(6);
  const std::size_t vocab_size = 150000;
  std::vector<std::string> vocab(vocab_size);
  for (auto& w : vocab) {
    for (std::size_t k = 0, len = 3 + rng.below(10); k < len; ++k) w.push_back(static_cast<char>('a' + rng.below(26)));
  }
  std::vector<double> cdf(vocab_size);
  double z = 0.0;
  for (std::size_t i = 0; i < vocab_size; ++i) cdf[i] = z += 1.0 / static_cast<double>(i + 1);
  std::vector<Sentence> data;
  std::size_t tokens = 0;
  while (tokens < tokens_wanted) {
    Sentence s;
    for (std::size_t k = 0, len = 5 + rng.below(20); k < len; ++k) {
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), rng.uniform() * z);
      s.tokens.push_back(vocab[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), vocab_size - 1)]);
    }
    tokens += s.size();
    data.push_back(std::move(s));
  }
  return data;
}

void criterion_bpe(Checks& chk) {
  Rng rng(12);
  const std::vector<std::string> letters{"a", "b", "c", "d", "e", "é", "中", "国", "x"};
  std::vector<Sentence> small;
  for (int i = 0; i < 1000; ++i) {
    Sentence s;
    for (std::size_t k = 0, len = 1 + rng.below(12); k < len; ++k) {
      std::string w;
      for (std::size_t c = 0, chars = 1 + rng.below(8); c < chars; ++c) w += letters[rng.below(letters.size())];
      s.tokens.push_back(w);
    }
    small.push_back(s);
  }
  const auto model = bpe_learn(small, 800);
  std::size_t broken = 0;
  for (const auto& s : small) broken += bpe_decode(bpe_apply(model, s)) != s;
  chk.expect(broken == 0, std::to_string(broken) + "/1000 sentences fail the round trip");

  const auto first = bpe_learn(sentences({"low low lower"}), 1);
  const bool lo = first.merges().size() == 1 && first.merges()[0] == std::pair<std::string, std::string>{"l", "o"};
  chk.expect(lo, "first merge on \"low low lower\" is not (l, o)");

  const auto big = zipf_corpus(1000000);
  std::size_t tokens = 0;
  for (const auto& s : big) tokens += s.size();
  const auto start = std::chrono::steady_clock::now();
  const auto learned = bpe_learn(big, 40000);
  const double elapsed = seconds_since(start);
  chk.expect(learned.merges().size() == 40000, "learned " + std::to_string(learned.merges().size()) + " merges");
  chk.expect(elapsed < 60.0, "40K merges took " + fmt(elapsed) + " s");
  chk.note("1000/1000 round trips; first merge (l, o); 40K merges on " + std::to_string(tokens) + " tokens in " +
           fmt(elapsed, 2) + " s");
}

// ---------------------------------------------------------------------------
// 7. Ensembles

Ensemble single(std::shared_ptr<const ModelOracle> m) { return Ensemble({std::move(m)}, Strategy::LogAvg); }

// Per-step distributions along each reference. `pick(i, k, want)` returns the
// favoured token and its probability; the rest is spread evenly.
std::shared_ptr<TableModel> scripted(const std::string& name, const DevSet& dev,
                                     const std::function<std::pair<std::string, double>(std::size_t, std::size_t,
                                                                                        const std::string&)>& pick) {
  auto m = std::make_shared<TableModel>(name);
  const std::vector<std::string> outputs{"a", "b", "c", "d", "</s>"};
  for (const auto& src : dev.sources) {
    const auto& ref = dev.refs[src.id].tokens;
    std::vector<std::string> prefix;
    for (std::size_t k = 0; k <= ref.size(); ++k) {
      const std::string want = k < ref.size() ? ref[k] : "</s>";
      const auto [fav, p] = pick(src.id, k, want);
      std::map<std::string, double> d;
      for (const auto& o : outputs) d[o] = (1.0 - p) / 4.0;
      d[fav] = p;
      m->add(src.id, prefix, d);
      if (k < ref.size()) prefix.push_back(ref[k]);
    }
  }
  return m;
}

std::string other_than(const std::string& want, std::size_t salt) {
  static const std::vector<std::string> words{"a", "b", "c", "d"};
  std::string w = words[salt % 4];
  return w == want ? words[(salt + 1) % 4] : w;
}

void criterion_ensemble(Checks& chk) {
  Rng rng(1);
  std::size_t unnormalized = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<TokenDistribution> dists(1 + rng.below(5), TokenDistribution(n));
    for (auto& d : dists) {
      double total = 0.0;
      for (auto& x : d) total += x = rng.bernoulli(0.2) ? 0.0 : rng.uniform();
      if (total == 0.0) d[0] = total = 1.0;
      for (auto& x : d) x /= total;
    }
    for (Strategy s : {Strategy::Max, Strategy::Avg, Strategy::LogAvg}) {
      const auto out = combine(dists, s);
      double sum = 0.0;
      bool negative = false;
      for (double x : out) sum += x, negative |= x < 0.0;
      unnormalized += negative || std::abs(sum - 1.0) > 1e-9;
    }
  }
  chk.expect(unnormalized == 0, std::to_string(unnormalized) + " combined outputs not normalized");

  std::size_t greedy_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t max_len = 1 + rng.below(4);
    const Ensemble e = single(random_table(rng, "m", {"a", "b", "c", "d"}, max_len, 0.2));
    DecodeConfig beam;
    beam.max_len = max_len;
    beam.beam_size = 1;
    DecodeConfig greedy = beam;
    greedy.mode = DecodeMode::Greedy;
    const auto b = decode(e, Source{0, {}}, beam).hyps.front();
    const auto g = decode(e, Source{0, {}}, greedy).hyps.front();
    greedy_mismatch += b.tokens != g.tokens || b.log_prob != g.log_prob;
  }
  chk.expect(greedy_mismatch == 0, std::to_string(greedy_mismatch) + "/100 beam-1 decodes differ from greedy");

  std::size_t exhaustive_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t max_len = 1 + rng.below(3);
    const Ensemble e = single(random_table(rng, "m", {"a", "b", "c"}, max_len, trial % 2 ? 0.3 : 0.0));
    DecodeConfig cfg;
    cfg.max_len = max_len;
    cfg.beam_size = 1000;
    cfg.length_penalty = rng.uniform() * 2.0;
    auto all = enumerate_outputs(e, Source{0, {}}, max_len, cfg.length_penalty);
    const auto best = std::max_element(all.begin(), all.end(),
                                       [](const Scored& a, const Scored& b) { return a.penalized < b.penalized; });
    const auto top = decode(e, Source{0, {}}, cfg).hyps.front();
    exhaustive_mismatch += std::abs(top.penalized - best->penalized) > 1e-12;
  }
  chk.expect(exhaustive_mismatch == 0, std::to_string(exhaustive_mismatch) + "/100 beam decodes miss the argmax");

  DecodeConfig cfg;
  cfg.max_len = 8;
  cfg.beam_size = 3;
  auto bleu_of = [&](const std::vector<std::shared_ptr<const ModelOracle>>& cands, const DevSet& dev,
                     const std::vector<std::size_t>& idx) {
    std::vector<std::shared_ptr<const ModelOracle>> members;
    for (auto i : idx) members.push_back(cands[i]);
    return ensemble_dev_bleu(Ensemble(members, Strategy::LogAvg, {}, union_vocab(cands)), dev.sources, dev.refs, cfg);
  };

  // Four noisy experts of different skill.
  const DevSet dev = make_dev(rng, 16);
  std::vector<std::shared_ptr<const ModelOracle>> four;
  for (std::size_t i = 0; i < 4; ++i) four.push_back(noisy_expert(rng, "m" + std::to_string(i), dev, 0.45 + 0.1 * i));
  const auto sel = greedy_ensemble_select(four, dev.sources, dev.refs, cfg);
  double best_pair = -1.0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) best_pair = std::max(best_pair, bleu_of(four, dev, {i, j}));
  }
  const double chosen = bleu_of(four, dev, sel.members);
  chk.expect(sel.best_pair_bleu == best_pair, "starting pair BLEU " + fmt(sel.best_pair_bleu) + " vs best pair " +
                                                  fmt(best_pair));
  chk.expect(chosen >= best_pair, "selected BLEU " + fmt(chosen) + " below best pair " + fmt(best_pair));

  // Two experts, each sure of half the dev set and flat elsewhere, plus two
  // weak models that lean towards a wrong token everywhere.
  const std::size_t half = dev.sources.size() / 2;
  std::vector<std::shared_ptr<const ModelOracle>> dominated{
      scripted("left", dev, [&](std::size_t i, std::size_t, const std::string& want) {
        return i < half ? std::pair{want, 0.9} : std::pair{want, 0.2};
      }),
      scripted("right", dev, [&](std::size_t i, std::size_t, const std::string& want) {
        return i >= half ? std::pair{want, 0.9} : std::pair{want, 0.2};
      }),
      scripted("weak0", dev, [&](std::size_t i, std::size_t k, const std::string& want) {
        return std::pair{other_than(want, i + k), 0.3};
      }),
      scripted("weak1", dev, [&](std::size_t i, std::size_t k, const std::string& want) {
        return std::pair{other_than(want, i + 2 * k + 1), 0.3};
      })};
  double exhaustive_best = -1.0;
  std::vector<std::size_t> exhaustive_set;
  for (unsigned mask = 1; mask < 16; ++mask) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < 4; ++i) {
      if (mask & (1u << i)) idx.push_back(i);
    }
    if (idx.size() < 2) continue;
    const double b = bleu_of(dominated, dev, idx);
    // Strictly better, or as good with fewer members.
    if (b > exhaustive_best || (b == exhaustive_best && idx.size() < exhaustive_set.size())) {
      exhaustive_best = b;
      exhaustive_set = idx;
    }
  }
  const auto dom = greedy_ensemble_select(dominated, dev.sources, dev.refs, cfg);
  const double dom_bleu = bleu_of(dominated, dev, dom.members);
  chk.expect(dom_bleu == exhaustive_best, "dominated scenario: selected " + fmt(dom_bleu) + ", exhaustive " +
                                              fmt(exhaustive_best));
  chk.expect(dom.members == exhaustive_set, "dominated scenario picked a different subset");

  chk.note("normalized on 1000 inputs; beam1=greedy 100/100; beam=argmax 100/100; selection " + fmt(chosen, 2) +
           " >= best pair " + fmt(best_pair, 2) + "; dominated case picks {left, right} at " + fmt(dom_bleu, 1));
}

// ---------------------------------------------------------------------------
// 8. Domain weighting

void criterion_domain(Checks& chk) {
  Rng rng(7);
  const std::vector<std::string> words{"a", "b", "c"};
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::shared_ptr<const ModelOracle>> pool{random_table(rng, "m0", words, 3),
                                                         random_table(rng, "m1", words, 3),
                                                         random_table(rng, "m2", words, 3)};
    const auto vocab = union_vocab(pool);
    auto d0 = std::make_shared<const Ensemble>(std::vector<std::shared_ptr<const ModelOracle>>{pool[0], pool[1]},
                                               Strategy::LogAvg, std::vector<double>{}, vocab);
    auto d1 = std::make_shared<const Ensemble>(std::vector<std::shared_ptr<const ModelOracle>>{pool[2]},
                                               Strategy::LogAvg, std::vector<double>{}, vocab);
    DecodeConfig cfg;
    cfg.max_len = 3;
    cfg.beam_size = 4;
    cfg.n_best = 4;
    const Source src{0, {}};
    auto same_tokens = [](const NBestList& x, const NBestList& y) {
      if (x.hyps.size() != y.hyps.size()) return false;
      for (std::size_t k = 0; k < x.hyps.size(); ++k) {
        if (x.hyps[k].tokens != y.hyps[k].tokens) return false;
      }
      return true;
    };
    const std::size_t hot = trial % 2;
    std::vector<double> onehot{0.0, 0.0};
    onehot[hot] = 1.0;
    mismatches += !same_tokens(domain_weighted_decode({d0, d1}, onehot, src, cfg), decode(hot ? *d1 : *d0, src, cfg));
    const double p = rng.uniform();
    mismatches += !same_tokens(domain_weighted_decode({d0, d0}, std::vector<double>{p, 1.0 - p}, src, cfg), decode(*d0, src, cfg));
  }
  chk.expect(mismatches == 0, std::to_string(mismatches) + "/100 degenerate mixtures differ from the single ensemble");

  // Three well-separated blobs; agreement is taken under the best relabelling.
  std::vector<Vector> points;
  std::vector<std::size_t> truth;
  for (int i = 0; i < 900; ++i) {
    const std::size_t blob = i % 3;
    Vector v(8);
    for (auto& x : v) x = gaussian(rng) * 0.6;
    v[blob] += 5.0;
    points.push_back(v);
    truth.push_back(blob);
  }
  const auto fit = kmeans_fit(points, 3, 5);
  std::array<std::size_t, 3> perm{0, 1, 2};
  std::size_t best = 0;
  do {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < points.size(); ++i) agree += perm[fit.labels[i]] == truth[i];
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double rate = static_cast<double>(best) / static_cast<double>(points.size());
  chk.expect(rate >= 0.99, "k-means agreement " + fmt(100.0 * rate, 2) + "%");
  chk.note("100/100 degenerate mixtures match; k-means agreement " + fmt(100.0 * rate, 2) + "%");
}

// ---------------------------------------------------------------------------
// 9. MIRA

void criterion_mira(Checks& chk) {
  const auto set = synthetic_nbest(11);
  const auto bleu = hypothesis_bleu(set.lists, set.refs);
  const auto w = mira_train(set.lists, bleu);
  std::vector<Sentence> before, after;
  for (const auto& l : set.lists) {
    before.push_back(l.hyps.front().tokens);
    after.push_back(rerank_apply(w, l).hyps.front().tokens);
  }
  const double nmt = corpus_bleu(before, set.refs);
  const double reranked = corpus_bleu(after, set.refs);
  chk.expect(reranked >= nmt, "reranked BLEU " + fmt(reranked, 2) + " < NMT order " + fmt(nmt, 2));
  chk.expect(w.weights.at("quality") > 0.0, "quality weight " + std::to_string(w.weights.at("quality")));

  auto easy = synthetic_nbest(3);
  const auto easy_bleu = hypothesis_bleu(easy.lists, easy.refs);
  for (std::size_t i = 0; i < easy.lists.size(); ++i) {
    for (std::size_t h = 0; h < easy.lists[i].hyps.size(); ++h) {
      easy.lists[i].hyps[h].features["nmt_score"] = 10.0 * easy_bleu[i][h];
    }
  }
  RerankWeights init;
  init.weights = {{"nmt_score", 1.0}, {"quality", 0.0}};
  const auto unchanged = mira_train(easy.lists, easy_bleu, {}, init);
  chk.expect(unchanged.updates == 0 && unchanged.weights == init.weights, "weights moved without margin violations");
  chk.note("BLEU " + fmt(nmt, 2) + " -> " + fmt(reranked, 2) + ", quality weight " +
           fmt(w.weights.at("quality"), 4) + "; zero-violation weights unchanged");
}

// ---------------------------------------------------------------------------
// 10. KD gate

void criterion_kd(Checks& chk) {
  // Hypotheses drift from their references one edit at a time, which walks
  // smoothed sentence BLEU down through the threshold.
  const std::vector<std::pair<std::string, std::string>> rows{
      {"the committee approved the new budget on friday", "the committee approved the new budget on friday"},
      {"the committee approved a new budget on friday", "the committee approved the new budget on friday"},
      {"the committee approved a new plan on friday", "the committee approved the new budget on friday"},
      {"a committee approved a new plan on monday", "the committee approved the new budget on friday"},
      {"a panel passed a new plan on monday", "the committee approved the new budget on friday"},
      {"prices rose sharply in the first quarter", "prices rose sharply in the first quarter of the year"},
      {"prices rose in the first quarter", "prices rose sharply in the first quarter of the year"},
      {"prices rose sharply", "prices rose sharply in the first quarter of the year"},
      {"costs went up in the last quarter", "prices rose sharply in the first quarter of the year"},
      {"the river flooded the old town", "the river flooded the old town last night"},
      {"the river flooded the town", "the river flooded the old town last night"},
      {"a river flooded an old town", "the river flooded the old town last night"},
      {"water covered the old streets", "the river flooded the old town last night"},
      {"she said the talks would resume next week", "she said talks would resume next week"},
      {"she said the talks will resume soon", "she said talks would resume next week"},
      {"he said talks may start again", "she said talks would resume next week"},
      {"the team won the final match", "the team won the final"},
      {"the team lost the final match", "the team won the final"},
      {"our team lost a final game", "the team won the final"},
      {"nobody knows", "the team won the final"}};
  Corpus hyps;
  std::vector<Sentence> refs;
  std::vector<double> oracle;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    hyps.pairs.push_back({i, words("src"), words(rows[i].first), {}, {}});
    refs.push_back(words(rows[i].second));
    oracle.push_back(sentence_bleu_formula(hyps.pairs[i].tgt, refs[i]));
  }
  double gap = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    gap = std::max(gap, std::abs(sentence_bleu(hyps.pairs[i].tgt, refs[i]) - oracle[i]));
  }
  chk.expect(gap <= 1e-9, "library sentence BLEU differs from the formula by " + std::to_string(gap));

  std::vector<std::uint64_t> want;
  std::size_t near = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (oracle[i] >= 28.0) want.push_back(i);
    near += std::abs(oracle[i] - 28.0) < 1e-6;
  }
  chk.expect(near == 0, "an oracle score sits on the threshold");
  const auto [kept, report] = kd_filter(hyps, refs, 28.0);
  std::vector<std::uint64_t> got;
  for (const auto& p : kept.pairs) got.push_back(p.id);
  chk.expect(got == want, "kept " + std::to_string(got.size()) + " pairs, oracle keeps " + std::to_string(want.size()));
  chk.expect(want.size() > 3 && want.size() < rows.size() - 3, "the set does not straddle the threshold");
  chk.note("keeps " + std::to_string(want.size()) + "/20, matching the formula oracle");
}

// ---------------------------------------------------------------------------
// 11. Determinism of the CLI pipeline

void write_inputs(const std::filesystem::path& dir) {
  Rng rng(2026);
  Corpus pool;
  for (std::uint64_t i = 0; i < 600; ++i) {
    const std::string domain = i % 3 == 0 ? "med" : (i % 3 == 1 ? "law" : "news");
    pool.pairs.push_back(domain_pair(rng, domain, domain == "med" ? 0.5 : 0.3, i));
  }
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto p = pool.pairs[i * 7];
    p.id = 600 + i;
    if (i % 2) p.tgt.tokens.front() = "<i>";
    pool.pairs.push_back(p);
  }
  write_jsonl(pool, dir / "pool.jsonl");

  std::vector<std::string> in_src, in_tgt, out_src, out_tgt, dev_src, dev_ref;
  for (int i = 0; i < 200; ++i) {
    const auto in = domain_pair(rng, "med", 0.5, 0);
    in_src.push_back(join(in.src));
    in_tgt.push_back(join(in.tgt));
    const auto out = domain_pair(rng, i % 2 ? "law" : "news", 0.3, 0);
    out_src.push_back(join(out.src));
    out_tgt.push_back(join(out.tgt));
  }
  for (int i = 0; i < 30; ++i) {
    const auto d = domain_pair(rng, "med", 0.5, 0);
    dev_src.push_back(join(d.src));
    dev_ref.push_back(join(d.tgt));
  }
  write_lines(dir / "in_src.txt", in_src);
  write_lines(dir / "in_tgt.txt", in_tgt);
  write_lines(dir / "out_src.txt", out_src);
  write_lines(dir / "out_tgt.txt", out_tgt);
  write_lines(dir / "dev_src.txt", dev_src);
  write_lines(dir / "dev_ref.txt", dev_ref);
}

const std::vector<std::string>& pipeline_steps() {
  static const std::vector<std::string> steps{
      "filter --input pool.jsonl --output filtered.jsonl",
      "train-lm --input in_src.txt --order 2 --output in_src.lm",
      "train-lm --input in_tgt.txt --order 2 --output in_tgt.lm",
      "train-lm --input out_src.txt --order 2 --output out_src.lm",
      "train-lm --input out_tgt.txt --order 2 --output out_tgt.lm",
      "select-ml --input filtered.jsonl --in-src in_src.lm --out-src out_src.lm --in-tgt in_tgt.lm"
      " --out-tgt out_tgt.lm --output scored.jsonl",
      "select-topk --input scored.jsonl --score ml --k 250 --criterion lowest --output selected.jsonl",
      "noise --input selected.jsonl --side src --p-drop 0.1 --p-blank 0.1 --p-swap 0.1 --output noised.jsonl",
      "bpe-learn --input noised.jsonl --side both --merges 300 --output bpe.txt",
      "bpe-apply --input noised.jsonl --model bpe.txt --side both --output train.bpe.jsonl",
      "bpe-apply --input dev_src.txt --model bpe.txt --side src --output dev_src.bpe.txt",
      "bpe-apply --input dev_ref.txt --model bpe.txt --side src --output dev_ref.bpe.txt",
      "train-align --input train.bpe.jsonl --iterations 5 --output align.json",
      "train-lm --input train.bpe.jsonl --side tgt --order 3 --output tgt.lm",
      "decode --source dev_src.bpe.txt --model lexicon:lex=align.json,tgt.lm --beam-size 4 --n-best 4"
      " --output dev.nbest --top dev.top.txt",
      "rerank-train --nbest dev.nbest --source dev_src.bpe.txt --ref dev_ref.bpe.txt --lm tgt.lm"
      " --output rerank.json",
      "rerank-apply --nbest dev.nbest --source dev_src.bpe.txt --weights rerank.json --lm tgt.lm"
      " --output dev.reranked.nbest --top dev.reranked.txt",
  };
  return steps;
}

std::map<std::string, std::string> run_pipeline_in(const std::filesystem::path& dir, const std::filesystem::path& logs,
                                                   unsigned workers, Checks& chk) {
  std::filesystem::create_directories(dir);
  write_inputs(dir);
  for (const auto& step : pipeline_steps()) {
    const auto r = run_cli(dir, logs, "--seed 7 --workers " + std::to_string(workers) + " " + step);
    if (r.code != 0) {
      chk.expect(false, "'" + step.substr(0, step.find(' ')) + "' exited " + std::to_string(r.code) + ": " + r.err);
      return {};
    }
  }
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files[std::filesystem::relative(entry.path(), dir).string()] = slurp(entry.path());
  }
  return files;
}

void criterion_determinism(Checks& chk) {
  TempDir root;
  const auto a = run_pipeline_in(root / "w1a", root.path(), 1, chk);
  const auto b = run_pipeline_in(root / "w1b", root.path(), 1, chk);
  const auto c = run_pipeline_in(root / "w8", root.path(), 8, chk);
  if (!chk.passed()) return;

  for (const auto& [other, label] : {std::pair{&b, "second --workers 1 run"}, std::pair{&c, "--workers 8 run"}}) {
    std::set<std::string> names;
    for (const auto& [k, v] : a) names.insert(k);
    for (const auto& [k, v] : *other) names.insert(k);
    for (const auto& name : names) {
      const bool same = a.contains(name) && other->contains(name) && a.at(name) == other->at(name);
      chk.expect(same, name + " differs in the " + std::string(label));
    }
  }
  const auto& top = a.at("dev.reranked.txt");
  chk.expect(!top.empty() && top.find_first_not_of('\n') != std::string::npos, "reranked output is empty");
  std::size_t bytes = 0;
  for (const auto& [k, v] : a) bytes += v.size();
  chk.note(std::to_string(pipeline_steps().size()) + " steps, " + std::to_string(a.size()) + " files (" +
           std::to_string(bytes / 1024) + " KiB) byte-identical across 3 runs");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Checks&)>>> criteria{
      {"filtering", criterion_filter},
      {"moore-lewis selection", criterion_selection},
      {"alignment", criterion_alignment},
      {"bleu", criterion_bleu},
      {"noising", criterion_noise},
      {"bpe", criterion_bpe},
      {"ensembles", criterion_ensemble},
      {"domain weighting", criterion_domain},
      {"mira", criterion_mira},
      {"kd gate", criterion_kd},
      {"determinism", criterion_determinism},
  };
  std::size_t failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Checks chk;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(chk);
    } catch (const std::exception& e) {
      chk.expect(false, std::string("exception: ") + e.what());
    }
    failed += !chk.passed();
    std::cout << (chk.passed() ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << " ("
              << fmt(seconds_since(start), 2) << " s): " << chk.summary() << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
