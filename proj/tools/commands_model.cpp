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
#include <unordered_map>

#include "cli_common.hpp"
#include "mtforge/bt.hpp"
#include "mtforge/decode.hpp"
#include "mtforge/domain.hpp"
#include "mtforge/metrics.hpp"
#include "mtforge/parallel.hpp"
#include "mtforge/rerank.hpp"

namespace mtforge::cli {

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

/// `table:name=path` or `lexicon:name=align-model,lm-model`.
std::shared_ptr<const ModelOracle> load_model(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw CLI::ValidationError("--model", "expected table:name=path or lexicon:name=align,lm; got '" + spec + "'");
  }
  const std::string kind = spec.substr(0, colon);
  auto [name, rest] = split_assignment(spec.substr(colon + 1), "--model");
  if (kind == "table") return std::make_shared<const TableModel>(TableModel::load(rest, name));
  if (kind == "lexicon") {
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw CLI::ValidationError("--model", "lexicon needs align-model,lm-model");
    auto lexicon = std::make_shared<const AlignmentModel>(AlignmentModel::load(rest.substr(0, comma)));
    return std::make_shared<const LexiconLM>(name, std::move(lexicon), load_lm(rest.substr(comma + 1)));
  }
  throw CLI::ValidationError("--model", "unknown model kind '" + kind + "'");
}

std::vector<std::shared_ptr<const ModelOracle>> load_models(const std::vector<std::string>& specs) {
  std::vector<std::shared_ptr<const ModelOracle>> out;
  for (const auto& s : specs) out.push_back(load_model(s));
  return out;
}

struct DecodeFlags {
  DecodeConfig cfg;
  std::string mode = "beam";

  void add(CLI::App* sub) {
    sub->add_option("--mode", mode, "greedy, beam or sample_topk")
        ->capture_default_str()
        ->check(CLI::IsMember({"greedy", "beam", "sample_topk"}));
    sub->add_option("--beam-size", cfg.beam_size, "beam width")->capture_default_str();
    sub->add_option("--alpha", cfg.length_penalty, "length penalty exponent")->capture_default_str();
    sub->add_option("--topk", cfg.topk, "sampling pool size")->capture_default_str();
    sub->add_option("--max-len", cfg.max_len, "output length limit; 0 means 2 * source + 10")->capture_default_str();
    sub->add_option("--n-best", cfg.n_best, "hypotheses per sentence")->capture_default_str();
  }

  DecodeConfig resolve(std::uint64_t seed) const {
    DecodeConfig c = cfg;
    c.mode = decode_mode_from_string(mode);
    c.seed = seed;
    c.validate();
    return c;
  }
};

std::vector<Source> sources_of(const Corpus& corpus) {
  std::vector<Source> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus.pairs) out.push_back({p.id, p.src});
  return out;
}

std::vector<Sentence> read_refs(const std::string& path) {
  std::vector<Sentence> refs;
  for (const auto& line : read_lines(path)) refs.push_back(split_words(line));
  return refs;
}

void write_top(const std::string& path, std::span<const NBestList> lists) {
  std::vector<std::string> lines;
  for (const auto& l : lists) lines.push_back(l.hyps.empty() ? std::string() : join(l.hyps.front().tokens));
  write_lines(path, lines);
}

std::unique_ptr<EmbeddingProvider> provider_for(const DomainModel& model, const std::string& vectors) {
  return provider_from_json(model.provider, vectors);
}

void add_decode(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    std::vector<std::string> models, domains;
    std::vector<double> weights;
    std::string strategy = "log_avg", output, top, domain_model, vectors;
    DecodeFlags decode;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("decode", "Ensemble decoding to an n-best list");
  o->in.add(sub, "--source", true, "source sentences");
  sub->add_option("--model", o->models, "table:name=path or lexicon:name=align,lm (repeatable)")->required();
  sub->add_option("--strategy", o->strategy, "max, avg or log_avg")
      ->capture_default_str()
      ->check(CLI::IsMember({"max", "avg", "log_avg"}));
  sub->add_option("--weights", o->weights, "member weights summing to 1");
  o->decode.add(sub);
  sub->add_option("--output", o->output, "n-best file")->required();
  sub->add_option("--top", o->top, "also write the best hypothesis per line");
  sub->add_option("--domain-model", o->domain_model, "mix per-domain ensembles by P(domain | source)")
      ->check(CLI::ExistingFile);
  sub->add_option("--domain", o->domains, "d=model-name,model-name: members of domain d's ensemble");
  sub->add_option("--vectors", o->vectors, "external vectors for the domain model")->check(CLI::ExistingFile);
  reg["decode"] = [o, &g]() {
    const auto config = o->decode.resolve(g.seed);
    const auto strategy = strategy_from_string(o->strategy);
    const auto models = load_models(o->models);
    const auto vocab = union_vocab(models);
    const Corpus corpus = o->in.read();
    const auto sources = sources_of(corpus);
    std::vector<NBestList> lists;

    if (o->domain_model.empty()) {
      const Ensemble ensemble(models, strategy, o->weights, vocab);
      lists = decode_all(ensemble, sources, config, g.workers);
    } else {
      const auto dm = DomainModel::load(o->domain_model);
      std::map<std::string, std::shared_ptr<const ModelOracle>> by_name;
      for (const auto& m : models) by_name[m->name()] = m;
      std::vector<std::shared_ptr<const Ensemble>> ensembles(dm.k());
      for (const auto& spec : o->domains) {
        auto [d, names] = split_assignment(spec, "--domain");
        const std::size_t idx = std::stoul(d);
        if (idx >= dm.k()) throw Error("domain " + d + " is out of range for a " + std::to_string(dm.k()) + "-domain model");
        std::vector<std::shared_ptr<const ModelOracle>> members;
        std::size_t start = 0;
        while (start <= names.size()) {
          const auto comma = names.find(',', start);
          const auto name = names.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
          auto it = by_name.find(name);
          if (it == by_name.end()) throw Error("--domain " + spec + ": no model named '" + name + "'");
          members.push_back(it->second);
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
        ensembles[idx] = std::make_shared<const Ensemble>(members, strategy, std::vector<double>{}, vocab);
      }
      for (std::size_t d = 0; d < dm.k(); ++d) {
        if (!ensembles[d]) throw Error("no --domain ensemble given for domain " + std::to_string(d));
      }
      const auto provider = provider_for(dm, o->vectors);
      lists.resize(sources.size());
      parallel_for(sources.size(), g.workers, [&](std::size_t i) {
        const auto v = provider->embed(sources[i].id, sources[i].tokens);
        const auto probs = domain_probs(dm, v);
        lists[i] = domain_weighted_decode(ensembles, probs, sources[i], config);
      });
    }
    write_nbest(o->output, lists, config.length_penalty);
    if (!o->top.empty()) write_top(o->top, lists);
    RunReport report;
    report.stage = "decode";
    report.count_in = report.count_out = sources.size();
    std::size_t forced = 0;
    for (const auto& l : lists) {
      for (const auto& h : l.hyps) forced += h.forced;
    }
    report.extra["forced_hypotheses"] = forced;
    report.extra["vocab_size"] = vocab->size();
    return Outcome{report, o->output};
  };
}

void add_ensemble_select(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput dev;
    std::vector<std::string> models;
    std::string ref, strategy = "log_avg", output;
    double epsilon = kSelectionEpsilon;
    DecodeFlags decode;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("ensemble-select", "Greedy ensemble selection on a dev set");
  o->dev.add(sub, "--dev-src", true, "dev source sentences");
  sub->add_option("--dev-ref", o->ref, "dev references")->required()->check(CLI::ExistingFile);
  sub->add_option("--model", o->models, "candidates, best single model first (repeatable)")->required();
  sub->add_option("--strategy", o->strategy, "max, avg or log_avg")
      ->capture_default_str()
      ->check(CLI::IsMember({"max", "avg", "log_avg"}));
  sub->add_option("--epsilon", o->epsilon, "minimum dev BLEU gain to add a member")->capture_default_str();
  o->decode.add(sub);
  sub->add_option("--output", o->output, "selection JSON")->required();
  reg["ensemble-select"] = [o, &g]() {
    const auto config = o->decode.resolve(g.seed);
    const auto models = load_models(o->models);
    const auto sources = sources_of(o->dev.read());
    const auto refs = read_refs(o->ref);
    if (refs.size() != sources.size()) throw Error("dev source and reference counts differ");
    const auto sel = greedy_ensemble_select(models, sources, refs, config, strategy_from_string(o->strategy),
                                            o->epsilon, g.workers);
    nlohmann::json j;
    for (auto i : sel.members) j["members"].push_back(models[i]->name());
    j["trace"] = sel.trace;
    j["best_pair_bleu"] = sel.best_pair_bleu;
    write_json(o->output, j);
    RunReport report;
    report.stage = "ensemble-select";
    report.count_in = models.size();
    report.count_out = sel.members.size();
    report.drops["not-selected"] = models.size() - sel.members.size();
    report.extra["selection"] = j;
    return Outcome{report, o->output};
  };
}

void add_cluster(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    std::string side = "src", vectors, output, labels;
    std::size_t k = kDefaultClusters, max_iter = 100, dim = kDefaultEmbeddingDim;
    double tol = 1e-6;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("cluster", "K-means domain clustering of sentence embeddings");
  o->in.add(sub);
  sub->add_option("--side", o->side, "side to embed")->capture_default_str()->check(CLI::IsMember({"src", "tgt"}));
  sub->add_option("--k", o->k, "clusters")->capture_default_str();
  sub->add_option("--max-iter", o->max_iter, "Lloyd iterations")->capture_default_str();
  sub->add_option("--tol", o->tol, "centroid movement tolerance")->capture_default_str();
  sub->add_option("--dim", o->dim, "hashed embedding dimension")->capture_default_str();
  sub->add_option("--vectors", o->vectors, "external JSONL vectors instead of hashed TF-IDF")
      ->check(CLI::ExistingFile);
  sub->add_option("--output", o->output, "domain model JSON")->required();
  sub->add_option("--labels", o->labels, "also write the corpus with tags.domain");
  reg["cluster"] = [o, &g]() {
    Corpus corpus = o->in.read();
    const Which side = parse_side(o->side);
    std::unique_ptr<EmbeddingProvider> provider;
    if (o->vectors.empty()) {
      auto tfidf = std::make_unique<HashedTfIdf>(o->dim);
      tfidf->fit(side_sentences(corpus, side));
      provider = std::move(tfidf);
    } else {
      provider = std::make_unique<ExternalVectors>(ExternalVectors::load(o->vectors));
    }
    const auto vecs = embed_corpus(*provider, corpus, side, g.workers);
    auto result = kmeans_fit(vecs, o->k, g.seed, o->max_iter, o->tol, g.workers);
    result.model.provider = provider->to_json();
    result.model.save(o->output);
    if (!o->labels.empty()) {
      for (std::size_t i = 0; i < corpus.size(); ++i) corpus.pairs[i].tags["domain"] = std::to_string(result.labels[i]);
      const std::filesystem::path p = o->labels;
      write_corpus(corpus, std::span(&p, 1), CorpusFormat::Jsonl);
    }
    RunReport report;
    report.stage = "cluster";
    report.count_in = report.count_out = corpus.size();
    std::vector<std::size_t> sizes(o->k, 0);
    for (auto l : result.labels) ++sizes[l];
    report.extra["cluster_sizes"] = sizes;
    report.extra["iterations"] = result.iterations;
    report.extra["sse"] = result.sse_trace.empty() ? 0.0 : result.sse_trace.back();
    report.extra["temperature"] = result.model.temperature;
    return Outcome{report, o->output};
  };
}

void add_domain_probs(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput in;
    CorpusOutput out;
    std::string model, side = "src", vectors;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("domain-probs", "Attach domain probabilities and labels");
  o->in.add(sub);
  o->out.add(sub);
  sub->add_option("--model", o->model, "domain model JSON")->required()->check(CLI::ExistingFile);
  sub->add_option("--side", o->side, "side to embed")->capture_default_str()->check(CLI::IsMember({"src", "tgt"}));
  sub->add_option("--vectors", o->vectors, "external vectors for this corpus")->check(CLI::ExistingFile);
  reg["domain-probs"] = [o, &g]() {
    const auto dm = DomainModel::load(o->model);
    const auto provider = provider_for(dm, o->vectors);
    Corpus corpus = o->in.read();
    const auto vecs = embed_corpus(*provider, corpus, parse_side(o->side), g.workers);
    parallel_for(corpus.size(), g.workers, [&](std::size_t i) {
      auto& p = corpus.pairs[i];
      const auto probs = domain_probs(dm, vecs[i]);
      for (std::size_t d = 0; d < probs.size(); ++d) p.scores["domain_p" + std::to_string(d)] = probs[d];
      p.tags["domain"] = std::to_string(domain_label(dm, vecs[i]));
    });
    o->out.write(corpus);
    RunReport report;
    report.stage = "domain-probs";
    report.count_in = report.count_out = corpus.size();
    return Outcome{report, o->out.primary()};
  };
}

/// Reads an n-best file and fills features from the matching source sentences.
std::vector<NBestList> featurized(const std::string& nbest_path, const Corpus& sources,
                                  const std::vector<std::string>& lm_paths, unsigned workers) {
  auto lists = read_nbest(nbest_path);
  std::unordered_map<std::uint64_t, const Sentence*> by_id;
  for (const auto& p : sources.pairs) by_id[p.id] = &p.src;
  for (const auto& l : lists) {
    if (!by_id.contains(l.source_id)) throw Error("n-best id " + std::to_string(l.source_id) + " has no source sentence");
  }
  std::vector<std::shared_ptr<const NGramLM>> lms;
  for (const auto& p : lm_paths) lms.push_back(load_lm(p));
  parallel_for(lists.size(), workers, [&](std::size_t i) {
    for (auto& h : lists[i].hyps) h.features.clear();
    extract_features(*by_id.at(lists[i].source_id), lists[i], lms);
  });
  return lists;
}

void add_rerank_train(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput source;
    std::string nbest, ref, output;
    std::vector<std::string> lms;
    MiraConfig mira;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("rerank-train", "Train re-ranking weights with k-best MIRA");
  sub->add_option("--nbest", o->nbest, "n-best file")->required()->check(CLI::ExistingFile);
  o->source.add(sub, "--source", true, "source sentences");
  sub->add_option("--ref", o->ref, "references, one per n-best list in file order")->required()->check(CLI::ExistingFile);
  sub->add_option("--lm", o->lms, "language model feature (repeatable)")->check(CLI::ExistingFile);
  sub->add_option("--c", o->mira.c, "MIRA step cap")->capture_default_str();
  sub->add_option("--epochs", o->mira.epochs, "passes over the data")->capture_default_str();
  sub->add_option("--output", o->output, "weights JSON")->required();
  reg["rerank-train"] = [o, &g]() {
    o->mira.seed = g.seed;
    const auto lists = featurized(o->nbest, o->source.read(), o->lms, g.workers);
    const auto refs = read_refs(o->ref);
    const auto bleu = hypothesis_bleu(lists, refs);
    const auto weights = mira_train(lists, bleu, o->mira);
    weights.save(o->output);
    RunReport report;
    report.stage = "rerank-train";
    report.count_in = report.count_out = lists.size();
    report.extra["updates"] = weights.updates;
    report.extra["weights"] = weights.weights;
    return Outcome{report, o->output};
  };
}

void add_rerank_apply(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput source;
    std::string nbest, weights, output, top;
    std::vector<std::string> lms;
    double alpha = 1.4;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("rerank-apply", "Re-rank n-best lists with trained weights");
  sub->add_option("--nbest", o->nbest, "n-best file")->required()->check(CLI::ExistingFile);
  o->source.add(sub, "--source", true, "source sentences");
  sub->add_option("--weights", o->weights, "weights JSON")->required()->check(CLI::ExistingFile);
  sub->add_option("--lm", o->lms, "language model features, as in training")->check(CLI::ExistingFile);
  sub->add_option("--alpha", o->alpha, "length penalty exponent used when decoding")->capture_default_str();
  sub->add_option("--output", o->output, "re-ranked n-best file with features")->required();
  sub->add_option("--top", o->top, "also write the best hypothesis per line");
  reg["rerank-apply"] = [o, &g]() {
    const auto weights = RerankWeights::load(o->weights);
    auto lists = featurized(o->nbest, o->source.read(), o->lms, g.workers);
    for (auto& l : lists) l = rerank_apply(weights, std::move(l));
    write_nbest(o->output, lists, o->alpha);
    if (!o->top.empty()) write_top(o->top, lists);
    RunReport report;
    report.stage = "rerank-apply";
    report.count_in = report.count_out = lists.size();
    return Outcome{report, o->output};
  };
}

void add_bt_iterate(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    CorpusInput seed_corpus, src_mono, tgt_mono, dev;
    std::string output_dir;
    BtConfig bt;
    DecodeFlags decode;
    int lm_order = 3;
    int align_iterations = 5;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("bt-iterate", "Iterative joint back-translation with lexicon models");
  o->seed_corpus.add(sub, "--bilingual", true, "seed parallel corpus");
  o->src_mono.add(sub, "--src-mono", true, "source-language monolingual text");
  o->tgt_mono.add(sub, "--tgt-mono", true, "target-language monolingual text");
  o->dev.add(sub, "--dev", true, "parallel dev set");
  sub->add_option("--rounds", o->bt.rounds, "maximum rounds")->capture_default_str();
  sub->add_option("--min-gain", o->bt.min_gain, "stop when dev BLEU gains less")->capture_default_str();
  sub->add_option("--p-drop", o->bt.noise.p_drop, "word drop probability")->capture_default_str();
  sub->add_option("--p-blank", o->bt.noise.p_blank, "word blanking probability")->capture_default_str();
  sub->add_option("--p-swap", o->bt.noise.p_swap, "adjacent swap probability")->capture_default_str();
  sub->add_option("--filler", o->bt.noise.filler, "blank token")->capture_default_str();
  sub->add_option("--lm-order", o->lm_order, "order of the target-side LMs")->capture_default_str();
  sub->add_option("--align-iterations", o->align_iterations, "EM iterations per retraining")->capture_default_str();
  o->decode.add(sub);
  sub->add_option("--output-dir", o->output_dir, "synthetic corpora and trace.json")->required();
  reg["bt-iterate"] = [o, &g]() {
    BtConfig cfg = o->bt;
    cfg.decode = o->decode.resolve(g.seed);
    cfg.noise.seed = g.seed;
    cfg.workers = g.workers;
    const Corpus seed = o->seed_corpus.read();
    if (seed.side != Side::Bilingual) throw Error("--bilingual must be a parallel corpus");
    const Corpus src_mono = o->src_mono.read();
    const Corpus tgt_mono = o->tgt_mono.read();
    const Corpus dev = o->dev.read();

    LmConfig lm_cfg;
    lm_cfg.order = o->lm_order;
    lm_cfg.min_count = 1;
    auto mono_and_side = [&](const Corpus& mono, Which side) {
      auto s = side_sentences(mono, Which::Src);
      auto b = side_sentences(seed, side);
      s.insert(s.end(), b.begin(), b.end());
      return s;
    };
    auto tgt_lm = std::make_shared<const NGramLM>(train_ngram(mono_and_side(tgt_mono, Which::Tgt), lm_cfg, g.workers));
    auto src_lm = std::make_shared<const NGramLM>(train_ngram(mono_and_side(src_mono, Which::Src), lm_cfg, g.workers));

    AlignConfig align;
    align.iterations = o->align_iterations;
    BtDirection s2t, t2s;
    s2t.retrain = lexicon_retrainer("s2t", seed, tgt_lm, align, g.workers);
    t2s.retrain = lexicon_retrainer("t2s", swap_sides(seed), src_lm, align, g.workers);
    s2t.oracle = s2t.retrain(Corpus{});
    t2s.oracle = t2s.retrain(Corpus{});
    for (const auto& p : dev.pairs) {
      s2t.dev_sources.push_back({p.id, p.src});
      s2t.dev_refs.push_back(p.tgt);
      t2s.dev_sources.push_back({p.id, p.tgt});
      t2s.dev_refs.push_back(p.src);
    }

    const auto result = iterate_joint_bt(s2t, t2s, src_mono, tgt_mono, cfg);
    const std::filesystem::path dir = o->output_dir;
    std::filesystem::create_directories(dir);
    std::size_t synthetic = 0;
    for (const auto& r : result.rounds) {
      const auto a = dir / ("round-" + std::to_string(r.round) + ".s2t.jsonl");
      const auto b = dir / ("round-" + std::to_string(r.round) + ".t2s.jsonl");
      write_corpus(r.synthetic_s2t, std::span(&a, 1), CorpusFormat::Jsonl);
      write_corpus(r.synthetic_t2s, std::span(&b, 1), CorpusFormat::Jsonl);
      synthetic += r.synthetic_s2t.size() + r.synthetic_t2s.size();
    }
    const auto trace = result.trace();
    write_json(dir / "trace.json", trace);
    RunReport report;
    report.stage = "bt-iterate";
    report.count_in = (src_mono.size() + tgt_mono.size()) * result.rounds.size();
    report.count_out = synthetic;
    report.extra["trace"] = trace;
    return Outcome{report, dir / "trace.json"};
  };
}

}  // namespace

void register_model_commands(CLI::App& app, const Globals& globals, Registry& registry) {
  add_decode(app, globals, registry);
  add_ensemble_select(app, globals, registry);
  add_cluster(app, globals, registry);
  add_domain_probs(app, globals, registry);
  add_rerank_train(app, globals, registry);
  add_rerank_apply(app, globals, registry);
  add_bt_iterate(app, globals, registry);
}

}  // namespace mtforge::cli
