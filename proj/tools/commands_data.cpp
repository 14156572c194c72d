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

#include <fstream>

#include "cli_common.hpp"
#include "mtforge/align.hpp"
#include "mtforge/augment.hpp"
#include "mtforge/bpe.hpp"
#include "mtforge/filter.hpp"
#include "mtforge/langid.hpp"
#include "mtforge/metrics.hpp"
#include "mtforge/parallel.hpp"
#include "mtforge/select.hpp"
#include "mtforge/textnorm.hpp"

namespace mtforge::cli {

namespace {

RunReport passthrough_report(std::string stage, std::size_t in, std::size_t out) {
  RunReport r;
  r.stage = std::move(stage);
  r.count_in = in;
  r.count_out = out;
  return r;
}

std::pair<std::string, double> parse_score_filter(const std::string& spec, const std::string& flag) {
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw CLI::ValidationError(flag, "expected name:percentile, got '" + spec + "'");
  }
  return {spec.substr(0, colon), std::stod(spec.substr(colon + 1))};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

void add_filter(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    CorpusOutput out;
    FilterConfig cfg;
    std::vector<std::string> rules;
    std::string langid;
    std::vector<std::string> drop_lowest, drop_highest;
    bool normalize = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("filter", "Rule-based parallel corpus filtering");
  o->in.add(sub);
  o->out.add(sub);
  sub->add_option("--max-words", o->cfg.max_words, "drop pairs with more words on a side")->capture_default_str();
  sub->add_option("--max-word-chars", o->cfg.max_word_chars, "drop pairs with a longer word")->capture_default_str();
  sub->add_option("--ratio-low", o->cfg.ratio_low, "lowest allowed src/tgt length ratio")->capture_default_str();
  sub->add_option("--ratio-high", o->cfg.ratio_high, "highest allowed src/tgt length ratio")->capture_default_str();
  sub->add_option("--langid-min-conf", o->cfg.langid_min_conf, "langid confidence needed to keep")->capture_default_str();
  sub->add_option("--src-lang", o->cfg.expected_src_lang, "expected source language")->capture_default_str();
  sub->add_option("--tgt-lang", o->cfg.expected_tgt_lang, "expected target language")->capture_default_str();
  sub->add_option("--langid", o->langid, "language identification model")->check(CLI::ExistingFile);
  sub->add_option("--rules", o->rules, "rules in order: length, html-dup, ratio, langid")
      ->check(CLI::IsMember({"length", "html-dup", "ratio", "langid"}));
  sub->add_option("--drop-lowest", o->drop_lowest, "name:percentile, drop pairs scoring below it");
  sub->add_option("--drop-highest", o->drop_highest, "name:percentile, drop pairs scoring above it");
  sub->add_flag("--normalize", o->normalize, "normalize punctuation before filtering");
  reg["filter"] = [o, &g]() {
    o->cfg.validate();
    Corpus corpus = o->in.read();
    const std::size_t n_in = corpus.size();
    if (o->normalize) corpus = normalize_corpus(std::move(corpus), g.workers);
    auto names = o->rules;
    if (names.empty()) {
      names = {"length", "html-dup", "ratio"};
      if (!o->langid.empty()) names.push_back("langid");
    }
    std::vector<std::unique_ptr<FilterRule>> rules;
    for (const auto& name : names) {
      if (name == "length") rules.push_back(make_length_rule(o->cfg));
      if (name == "html-dup") rules.push_back(make_html_dup_rule());
      if (name == "ratio") rules.push_back(make_ratio_rule(o->cfg));
      if (name == "langid") {
        if (o->langid.empty()) throw CLI::ValidationError("--rules", "the langid rule needs --langid");
        auto model = std::make_shared<const LangIdModel>(LangIdModel::load(o->langid));
        rules.push_back(make_langid_rule(model, o->cfg));
      }
    }
    for (const auto& spec : o->drop_lowest) {
      auto [name, q] = parse_score_filter(spec, "--drop-lowest");
      rules.push_back(make_score_rule(name, q, ScoreDirection::DropLowest));
    }
    for (const auto& spec : o->drop_highest) {
      auto [name, q] = parse_score_filter(spec, "--drop-highest");
      rules.push_back(make_score_rule(name, q, ScoreDirection::DropHighest));
    }
    auto [kept, report] = run_pipeline(corpus, rules, g.workers);
    report.stage = "filter";
    report.count_in = n_in;
    o->out.write(kept);
    return Outcome{report, o->out.primary()};
  };
}

void add_train_lm(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    std::string side = "src", level = "word", output;
    LmConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("train-lm", "Train a Witten-Bell n-gram language model");
  o->in.add(sub);
  sub->add_option("--side", o->side, "corpus side to train on")->capture_default_str()->check(CLI::IsMember({"src", "tgt"}));
  sub->add_option("--order", o->cfg.order, "n-gram order")->capture_default_str()->check(CLI::Range(1, 9));
  sub->add_option("--level", o->level, "word or char")->capture_default_str()->check(CLI::IsMember({"word", "char"}));
  sub->add_option("--min-count", o->cfg.min_count, "minimum count for a vocabulary word")->capture_default_str();
  sub->add_option("--output", o->output, "model file")->required();
  reg["train-lm"] = [o, &g]() {
    o->cfg.level = o->level == "char" ? Level::Char : Level::Word;
    const Corpus corpus = o->in.read();
    const auto sentences = side_sentences(corpus, parse_side(o->side));
    const NGramLM lm = train_ngram(sentences, o->cfg, g.workers);
    lm.save(o->output);
    auto report = passthrough_report("train-lm", sentences.size(), sentences.size());
    report.extra["events"] = lm.events().size();
    report.extra["order"] = lm.order();
    return Outcome{report, o->output};
  };
}

void add_score_lm(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    CorpusOutput out;
    std::string lm, side = "src", name = "lm";
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("score-lm", "Attach per-sentence LM cross-entropy (nats per token)");
  o->in.add(sub);
  o->out.add(sub);
  sub->add_option("--lm", o->lm, "language model")->required()->check(CLI::ExistingFile);
  sub->add_option("--side", o->side, "side to score")->capture_default_str()->check(CLI::IsMember({"src", "tgt"}));
  sub->add_option("--name", o->name, "score name")->capture_default_str();
  reg["score-lm"] = [o, &g]() {
    const auto lm = NGramLM::load(o->lm);
    Corpus corpus = score_corpus(lm, o->in.read(), parse_side(o->side), o->name, g.workers);
    o->out.write(corpus);
    return Outcome{passthrough_report("score-lm", corpus.size(), corpus.size()), o->out.primary()};
  };
}

void add_train_langid(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    std::vector<std::string> data;
    std::string output;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("train-langid", "Train character n-gram language identification");
  sub->add_option("--data", o->data, "lang=text-file, one per language")->required();
  sub->add_option("--output", o->output, "model file")->required();
  reg["train-langid"] = [o, &g]() {
    std::map<std::string, std::vector<Sentence>> corpora;
    std::size_t total = 0;
    for (const auto& spec : o->data) {
      auto [lang, path] = split_assignment(spec, "--data");
      for (const auto& line : read_lines(path)) corpora[lang].push_back(split_words(line));
      total += corpora[lang].size();
    }
    const auto model = train_langid(corpora, g.workers);
    model.save(o->output);
    auto report = passthrough_report("train-langid", total, total);
    report.extra["languages"] = corpora.size();
    return Outcome{report, o->output};
  };
}

void add_train_align(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    AlignConfig cfg;
    bool fixed_tension = false, reverse = false;
    std::string output;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("train-align", "Train a diagonal-favoring word alignment model");
  o->in.add(sub);
  sub->add_option("--iterations", o->cfg.iterations, "EM iterations")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--p0", o->cfg.p0, "NULL alignment probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sub->add_option("--tension", o->cfg.tension, "initial diagonal tension")->capture_default_str();
  sub->add_flag("--fixed-tension", o->fixed_tension, "keep the tension fixed");
  sub->add_flag("--reverse", o->reverse, "align target to source");
  sub->add_option("--output", o->output, "model file")->required();
  reg["train-align"] = [o, &g]() {
    o->cfg.optimize_tension = !o->fixed_tension;
    Corpus corpus = o->in.read();
    if (o->reverse) corpus = swap_sides(std::move(corpus));
    const auto model = train_align(corpus, o->cfg, g.workers);
    model.save(o->output);
    auto report = passthrough_report("train-align", corpus.size(), corpus.size());
    report.extra["tension"] = model.tension();
    report.extra["log_likelihood"] = model.log_likelihood_trace();
    return Outcome{report, o->output};
  };
}

void add_score_align(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    CorpusOutput out;
    std::string model, reverse_model, name = "align";
    bool forward_only = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("score-align", "Attach per-pair alignment scores");
  o->in.add(sub);
  o->out.add(sub);
  sub->add_option("--model", o->model, "source-to-target model")->required()->check(CLI::ExistingFile);
  sub->add_option("--reverse-model", o->reverse_model, "target-to-source model; the score averages both directions")
      ->check(CLI::ExistingFile);
  sub->add_flag("--forward-only", o->forward_only, "score with the source-to-target model alone");
  sub->add_option("--name", o->name, "score name")->capture_default_str();
  reg["score-align"] = [o, &g]() {
    const auto fwd = AlignmentModel::load(o->model);
    if (o->reverse_model.empty() && !o->forward_only) {
      throw CLI::ValidationError("--reverse-model", "required unless --forward-only is given");
    }
    std::optional<AlignmentModel> rev;
    if (!o->forward_only) rev = AlignmentModel::load(o->reverse_model);
    Corpus corpus = o->in.read();
    if (corpus.side != Side::Bilingual) throw Error("score-align needs a bilingual corpus");
    parallel_for(corpus.size(), g.workers, [&](std::size_t i) {
      auto& p = corpus.pairs[i];
      p.scores[o->name] = rev ? align_score_symmetric(fwd, *rev, p) : align_score(fwd, p);
    });
    o->out.write(corpus);
    return Outcome{passthrough_report("score-align", corpus.size(), corpus.size()), o->out.primary()};
  };
}

void add_select_ml(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    std::vector<std::string> output;
    std::string in_src, out_src, in_tgt, out_tgt, name = "ml", format = "jsonl";
    std::vector<std::string> genres;
    std::size_t k = kDefaultSelectK;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "select-ml", "Moore-Lewis cross-entropy difference scoring, or per-genre LM bucketing with --genre");
  o->in.add(sub);
  sub->add_option("--output", o->output, "scored corpus, or a directory with --genre")->required()->expected(1, 2);
  sub->add_option("--out-format", o->format, "format of the scored corpus")->capture_default_str();
  sub->add_option("--in-src", o->in_src, "in-domain source LM")->check(CLI::ExistingFile);
  sub->add_option("--out-src", o->out_src, "general-domain source LM")->check(CLI::ExistingFile);
  sub->add_option("--in-tgt", o->in_tgt, "in-domain target LM")->check(CLI::ExistingFile);
  sub->add_option("--out-tgt", o->out_tgt, "general-domain target LM")->check(CLI::ExistingFile);
  sub->add_option("--name", o->name, "score name")->capture_default_str();
  sub->add_option("--genre", o->genres, "genre=lm-file; selects the k lowest-entropy sentences per genre");
  sub->add_option("--k", o->k, "sentences per genre")->capture_default_str();
  reg["select-ml"] = [o, &g]() {
    const Corpus corpus = o->in.read();
    if (!o->genres.empty()) {
      std::map<std::string, NGramLM> lms;
      for (const auto& spec : o->genres) {
        auto [genre, path] = split_assignment(spec, "--genre");
        lms.emplace(genre, NGramLM::load(path));
      }
      const std::filesystem::path dir = o->output.front();
      std::filesystem::create_directories(dir);
      const auto buckets = bucket_by_genre(corpus, lms, o->k, g.workers);
      auto report = passthrough_report("select-ml", corpus.size(), 0);
      for (const auto& [genre, bucket] : buckets) {
        const std::filesystem::path file = dir / (genre + ".jsonl");
        write_corpus(bucket, std::span(&file, 1), CorpusFormat::Jsonl);
        report.extra["buckets"][genre] = bucket.size();
        report.count_out += bucket.size();
      }
      report.count_in = corpus.size() * buckets.size();
      report.drops["not-selected"] = report.count_in - report.count_out;
      return Outcome{report, dir / "buckets"};
    }
    if (o->in_src.empty() || o->out_src.empty() || o->in_tgt.empty() || o->out_tgt.empty()) {
      throw CLI::ValidationError("select-ml", "needs --in-src, --out-src, --in-tgt and --out-tgt (or --genre)");
    }
    LMSet lms{NGramLM::load(o->in_src), NGramLM::load(o->out_src), NGramLM::load(o->in_tgt),
              NGramLM::load(o->out_tgt)};
    const Corpus scored = score_moore_lewis(corpus, lms, o->name, g.workers);
    std::vector<std::filesystem::path> paths(o->output.begin(), o->output.end());
    write_corpus(scored, paths, resolve_format(o->format, o->output));
    return Outcome{passthrough_report("select-ml", corpus.size(), scored.size()), paths.front()};
  };
}

void add_select_topk(CLI::App& app, const Globals&, Registry& reg) {
  struct Opts {
    CorpusInput in;
    CorpusOutput out;
    std::string score, criterion = "lowest";
    std::size_t k = kDefaultSelectK;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("select-topk", "Keep the k best pairs by an attached score");
  o->in.add(sub);
  o->out.add(sub);
  sub->add_option("--score", o->score, "score name")->required();
  sub->add_option("--k", o->k, "pairs to keep")->capture_default_str();
  sub->add_option("--criterion", o->criterion, "lowest or highest")
      ->capture_default_str()
      ->check(CLI::IsMember({"lowest", "highest"}));
  reg["select-topk"] = [o]() {
    const Corpus corpus = o->in.read();
    const auto result = select_top_k(corpus, o->score, o->k,
                                     o->criterion == "lowest" ? Criterion::Lowest : Criterion::Highest);
    o->out.write(result.selected);
    auto report = passthrough_report("select-topk", corpus.size(), result.selected.size());
    report.drops["not-selected"] = corpus.size() - result.selected.size();
    return Outcome{report, o->out.primary()};
  };
}

void add_ingest_scores(CLI::App& app, const Globals&, Registry& reg) {
  struct Opts {
    CorpusInput in;
    CorpusOutput out;
    std::string scores, name;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("ingest-scores", "Attach externally computed per-pair scores");
  o->in.add(sub);
  o->out.add(sub);
  sub->add_option("--scores", o->scores, "JSONL {\"id\", \"score\"} file")->required()->check(CLI::ExistingFile);
  sub->add_option("--name", o->name, "score name")->required();
  reg["ingest-scores"] = [o]() {
    const Corpus corpus = ingest_external_scores(o->in.read(), o->scores, o->name);
    o->out.write(corpus);
    return Outcome{passthrough_report("ingest-scores", corpus.size(), corpus.size()), o->out.primary()};
  };
}

void add_noise(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    CorpusOutput out;
    NoiseConfig cfg;
    std::string side = "src";
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("noise", "Drop, blank and swap words");
  o->in.add(sub);
  o->out.add(sub);
  sub->add_option("--p-drop", o->cfg.p_drop, "word drop probability")->capture_default_str();
  sub->add_option("--p-blank", o->cfg.p_blank, "word blanking probability")->capture_default_str();
  sub->add_option("--p-swap", o->cfg.p_swap, "adjacent swap probability")->capture_default_str();
  sub->add_option("--filler", o->cfg.filler, "blank token")->capture_default_str();
  sub->add_option("--side", o->side, "side to noise")->capture_default_str()->check(CLI::IsMember({"src", "tgt"}));
  reg["noise"] = [o, &g]() {
    o->cfg.seed = g.seed;
    o->cfg.validate();
    const Corpus corpus = noise_corpus(o->in.read(), o->cfg, parse_side(o->side), g.workers);
    o->out.write(corpus);
    return Outcome{passthrough_report("noise", corpus.size(), corpus.size()), o->out.primary()};
  };
}

void add_reverse_src(CLI::App& app, const Globals&, Registry& reg) {
  struct Opts {
    CorpusInput in;
    CorpusOutput out;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("reverse-src", "Reverse source word order");
  o->in.add(sub);
  o->out.add(sub);
  reg["reverse-src"] = [o]() {
    const Corpus corpus = reverse_source(o->in.read());
    o->out.write(corpus);
    return Outcome{passthrough_report("reverse-src", corpus.size(), corpus.size()), o->out.primary()};
  };
}

std::vector<Which> sides_of(const std::string& side) {
  if (side == "both") return {Which::Src, Which::Tgt};
  return {parse_side(side)};
}

void add_bpe_learn(CLI::App& app, const Globals&, Registry& reg) {
  struct Opts {
    CorpusInput in;
    std::string side = "src", output;
    std::size_t merges = kDefaultBpeMerges;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("bpe-learn", "Learn BPE merges");
  o->in.add(sub);
  sub->add_option("--side", o->side, "src, tgt or both")->capture_default_str()->check(CLI::IsMember({"src", "tgt", "both"}));
  sub->add_option("--merges", o->merges, "merge operations")->capture_default_str();
  sub->add_option("--output", o->output, "model file")->required();
  reg["bpe-learn"] = [o]() {
    const Corpus corpus = o->in.read();
    std::vector<Sentence> sentences;
    for (Which w : sides_of(o->side)) {
      auto s = side_sentences(corpus, w);
      sentences.insert(sentences.end(), s.begin(), s.end());
    }
    const auto model = bpe_learn(sentences, o->merges);
    model.save(o->output);
    auto report = passthrough_report("bpe-learn", sentences.size(), sentences.size());
    report.extra["merges"] = model.merges().size();
    return Outcome{report, o->output};
  };
}

void add_bpe_apply(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    CorpusOutput out;
    std::string model, side = "both";
    bool decode = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("bpe-apply", "Segment words into BPE units, or join them back with --decode");
  o->in.add(sub);
  o->out.add(sub);
  sub->add_option("--model", o->model, "BPE model (not needed with --decode)")->check(CLI::ExistingFile);
  sub->add_option("--side", o->side, "src, tgt or both")->capture_default_str()->check(CLI::IsMember({"src", "tgt", "both"}));
  sub->add_flag("--decode", o->decode, "undo segmentation");
  reg["bpe-apply"] = [o, &g]() {
    if (!o->decode && o->model.empty()) throw CLI::ValidationError("--model", "required unless --decode is given");
    const BpeModel model = o->decode ? BpeModel() : BpeModel::load(o->model);
    Corpus corpus = o->in.read();
    const auto sides = sides_of(o->side);
    const bool mono = corpus.side != Side::Bilingual;
    parallel_for(corpus.size(), g.workers, [&](std::size_t i) {
      auto& p = corpus.pairs[i];
      for (Which w : sides) {
        if (mono && w == Which::Tgt) continue;
        Sentence& s = w == Which::Src ? p.src : p.tgt;
        s = o->decode ? bpe_decode(s) : bpe_apply(model, s);
      }
    });
    o->out.write(corpus);
    return Outcome{passthrough_report("bpe-apply", corpus.size(), corpus.size()), o->out.primary()};
  };
}

void add_kd_filter(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    CorpusOutput out;
    std::string ref;
    double threshold = kDefaultKdThreshold;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("kd-filter", "Keep distilled pairs whose target scores high sentence BLEU");
  o->in.add(sub, "--input", true, "distilled corpus (target = hypothesis)");
  o->out.add(sub);
  sub->add_option("--ref", o->ref, "reference file, one line per pair")->required()->check(CLI::ExistingFile);
  sub->add_option("--threshold", o->threshold, "minimum sentence BLEU")->capture_default_str();
  reg["kd-filter"] = [o, &g]() {
    const Corpus corpus = o->in.read();
    std::vector<Sentence> refs;
    for (const auto& line : read_lines(o->ref)) refs.push_back(split_words(line));
    auto [kept, report] = kd_filter(corpus, refs, o->threshold, g.workers);
    o->out.write(kept);
    return Outcome{report, o->out.primary()};
  };
}

void add_bleu(CLI::App& app, const Globals&, Registry& reg) {
  struct Opts {
    std::string hyp, ref, output, sentence_scores;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("bleu", "Corpus BLEU of tokenized text");
  sub->add_option("--hyp", o->hyp, "hypothesis file")->required()->check(CLI::ExistingFile);
  sub->add_option("--ref", o->ref, "reference file")->required()->check(CLI::ExistingFile);
  sub->add_option("--output", o->output, "also write the result JSON here");
  sub->add_option("--sentence-scores", o->sentence_scores, "write smoothed sentence BLEU per line");
  reg["bleu"] = [o]() {
    const auto hyp_lines = read_lines(o->hyp);
    const auto ref_lines = read_lines(o->ref);
    if (hyp_lines.size() != ref_lines.size()) {
      throw Error("line count mismatch " + std::to_string(hyp_lines.size()) + " vs " +
                  std::to_string(ref_lines.size()) + " (" + o->hyp + ", " + o->ref + ")");
    }
    std::vector<BleuStats> stats;
    std::vector<std::string> sentence_lines;
    for (std::size_t i = 0; i < hyp_lines.size(); ++i) {
      const auto h = split_words(hyp_lines[i]);
      const auto r = split_words(ref_lines[i]);
      stats.push_back(bleu_stats(h, r));
      if (!o->sentence_scores.empty()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", sentence_bleu(h, r));
        sentence_lines.emplace_back(buf);
      }
    }
    const auto result = corpus_bleu(stats);
    auto report = passthrough_report("bleu", stats.size(), stats.size());
    const auto j = result.to_json();
    for (auto it = j.begin(); it != j.end(); ++it) report.extra[it.key()] = it.value();
    if (!o->sentence_scores.empty()) write_lines(o->sentence_scores, sentence_lines);
    if (!o->output.empty()) write_json(o->output, j);
    return Outcome{report, o->output};
  };
}

void add_postprocess(CLI::App& app, const Globals&, Registry& reg) {
  struct Opts {
    CorpusInput in;
    std::string output, unk = std::string(kUnk), side = "tgt";
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("postprocess", "Remove unknown-word tokens and detokenize");
  o->in.add(sub);
  sub->add_option("--side", o->side, "side of a bilingual corpus")->capture_default_str()->check(CLI::IsMember({"src", "tgt"}));
  sub->add_option("--unk", o->unk, "token to remove")->capture_default_str();
  sub->add_option("--output", o->output, "detokenized text")->required();
  reg["postprocess"] = [o]() {
    const Corpus corpus = o->in.read();
    std::vector<std::string> lines;
    for (const auto& s : side_sentences(corpus, parse_side(o->side))) lines.push_back(postprocess(s, o->unk));
    write_lines(o->output, lines);
    return Outcome{passthrough_report("postprocess", lines.size(), lines.size()), o->output};
  };
}

}  // namespace

void register_data_commands(CLI::App& app, const Globals& globals, Registry& registry) {
  add_filter(app, globals, registry);
  add_train_lm(app, globals, registry);
  add_score_lm(app, globals, registry);
  add_train_langid(app, globals, registry);
  add_train_align(app, globals, registry);
  add_score_align(app, globals, registry);
  add_select_ml(app, globals, registry);
  add_select_topk(app, globals, registry);
  add_ingest_scores(app, globals, registry);
  add_noise(app, globals, registry);
  add_reverse_src(app, globals, registry);
  add_bpe_learn(app, globals, registry);
  add_bpe_apply(app, globals, registry);
  add_kd_filter(app, globals, registry);
  add_bleu(app, globals, registry);
  add_postprocess(app, globals, registry);
}

}  // namespace mtforge::cli
