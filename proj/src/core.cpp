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

#include "mtforge/core.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include "mtforge/utf8.hpp"

namespace mtforge {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  return out;
}

Sentence sentence_from_json(const nlohmann::json& j) {
  if (j.is_string()) return split_words(j.get<std::string>());
  if (j.is_array()) {
    Sentence s;
    for (const auto& t : j) s.tokens.push_back(t.get<std::string>());
    return s;
  }
  throw Error("sentence must be a string or an array of tokens");
}

void check_paths(std::span<const std::filesystem::path> paths, std::size_t expected,
                 std::string_view format) {
  if (paths.size() != expected) {
    throw Error(std::string(format) + " format expects " + std::to_string(expected) +
                " path(s), got " + std::to_string(paths.size()));
  }
}

}  // namespace

std::string_view to_string(Level level) {
  switch (level) {
    case Level::Word: return "word";
    case Level::Char: return "char";
    case Level::Subword: return "subword";
  }
  return "word";
}

Level level_from_string(std::string_view name) {
  if (name == "word") return Level::Word;
  if (name == "char") return Level::Char;
  if (name == "subword") return Level::Subword;
  throw Error("unknown level: " + std::string(name));
}

Sentence split_words(std::string_view line, Level level) {
  Sentence s;
  s.level = level;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) s.tokens.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return s;
}

std::string join(const Sentence& sentence, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    if (i) out += sep;
    out += sentence.tokens[i];
  }
  return out;
}

Sentence to_char_level(const Sentence& sentence) {
  Sentence out;
  out.level = Level::Char;
  for (const auto& tok : sentence.tokens) {
    for (auto& c : utf8::chars(tok)) out.tokens.push_back(std::move(c));
  }
  return out;
}

double SentencePair::score(const std::string& name) const {
  auto it = scores.find(name);
  if (it == scores.end()) {
    throw Error("pair " + std::to_string(id) + " has no score '" + name + "'");
  }
  return it->second;
}

Corpus Corpus::from_lines(std::span<const std::string> lines, Side side) {
  Corpus c;
  c.side = side;
  c.pairs.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    SentencePair p;
    p.id = i;
    p.src = split_words(lines[i]);
    c.pairs.push_back(std::move(p));
  }
  return c;
}

CorpusFormat format_from_string(std::string_view name) {
  if (name == "two-file") return CorpusFormat::TwoFile;
  if (name == "tsv") return CorpusFormat::Tsv;
  if (name == "jsonl") return CorpusFormat::Jsonl;
  if (name == "text") return CorpusFormat::Text;
  throw Error("unknown corpus format: " + std::string(name));
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  auto out = open_out(path);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

nlohmann::json to_json(const SentencePair& pair) {
  nlohmann::json j;
  j["id"] = pair.id;
  j["src"] = join(pair.src);
  j["tgt"] = join(pair.tgt);
  if (!pair.tags.empty()) j["tags"] = pair.tags;
  if (!pair.scores.empty()) j["scores"] = pair.scores;
  return j;
}

SentencePair pair_from_json(const nlohmann::json& j) {
  SentencePair p;
  if (j.contains("id")) p.id = j.at("id").get<std::uint64_t>();
  if (j.contains("src")) p.src = sentence_from_json(j.at("src"));
  if (j.contains("tgt")) p.tgt = sentence_from_json(j.at("tgt"));
  if (j.contains("tags")) p.tags = j.at("tags").get<std::map<std::string, std::string>>();
  if (j.contains("scores")) p.scores = j.at("scores").get<std::map<std::string, double>>();
  return p;
}

Corpus read_corpus(std::span<const std::filesystem::path> paths, CorpusFormat format) {
  Corpus c;
  switch (format) {
    case CorpusFormat::Text: {
      check_paths(paths, 1, "text");
      auto lines = read_lines(paths[0]);
      return Corpus::from_lines(lines, Side::SrcMono);
    }
    case CorpusFormat::TwoFile: {
      check_paths(paths, 2, "two-file");
      auto src = read_lines(paths[0]);
      auto tgt = read_lines(paths[1]);
      if (src.size() != tgt.size()) {
        throw Error("line count mismatch " + std::to_string(src.size()) + " vs " +
                    std::to_string(tgt.size()) + " (" + paths[0].string() + ", " +
                    paths[1].string() + ")");
      }
      c.pairs.resize(src.size());
      for (std::size_t i = 0; i < src.size(); ++i) {
        c.pairs[i].id = i;
        c.pairs[i].src = split_words(src[i]);
        c.pairs[i].tgt = split_words(tgt[i]);
      }
      return c;
    }
    case CorpusFormat::Tsv: {
      check_paths(paths, 1, "tsv");
      auto lines = read_lines(paths[0]);
      c.pairs.resize(lines.size());
      for (std::size_t i = 0; i < lines.size(); ++i) {
        auto tab = lines[i].find('\t');
        if (tab == std::string::npos || lines[i].find('\t', tab + 1) != std::string::npos) {
          throw Error(paths[0].string() + ":" + std::to_string(i + 1) +
                      ": expected exactly one tab");
        }
        c.pairs[i].id = i;
        c.pairs[i].src = split_words(std::string_view(lines[i]).substr(0, tab));
        c.pairs[i].tgt = split_words(std::string_view(lines[i]).substr(tab + 1));
      }
      return c;
    }
    case CorpusFormat::Jsonl: {
      check_paths(paths, 1, "jsonl");
      auto lines = read_lines(paths[0]);
      bool any_mono = false;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        SentencePair p;
        try {
          auto j = nlohmann::json::parse(lines[i]);
          if (!j.is_object()) throw Error("not an object");
          p = pair_from_json(j);
          if (!j.contains("id")) p.id = c.pairs.size();
          if (!j.contains("tgt")) any_mono = true;
        } catch (const std::exception& e) {
          throw Error(paths[0].string() + ":" + std::to_string(i + 1) +
                      ": malformed JSONL line: " + e.what());
        }
        if (!c.pairs.empty() && p.id <= c.pairs.back().id) {
          throw Error(paths[0].string() + ":" + std::to_string(i + 1) +
                      ": ids must be strictly increasing");
        }
        c.pairs.push_back(std::move(p));
      }
      if (any_mono) c.side = Side::SrcMono;
      return c;
    }
  }
  return c;
}

void write_corpus(const Corpus& corpus, std::span<const std::filesystem::path> paths,
                  CorpusFormat format) {
  switch (format) {
    case CorpusFormat::Text: {
      check_paths(paths, 1, "text");
      auto out = open_out(paths[0]);
      for (const auto& p : corpus.pairs) out << join(p.src) << '\n';
      if (!out) throw Error("write failed: " + paths[0].string());
      return;
    }
    case CorpusFormat::TwoFile: {
      check_paths(paths, 2, "two-file");
      auto src = open_out(paths[0]);
      auto tgt = open_out(paths[1]);
      for (const auto& p : corpus.pairs) {
        src << join(p.src) << '\n';
        tgt << join(p.tgt) << '\n';
      }
      if (!src) throw Error("write failed: " + paths[0].string());
      if (!tgt) throw Error("write failed: " + paths[1].string());
      return;
    }
    case CorpusFormat::Tsv: {
      check_paths(paths, 1, "tsv");
      auto out = open_out(paths[0]);
      for (const auto& p : corpus.pairs) out << join(p.src) << '\t' << join(p.tgt) << '\n';
      if (!out) throw Error("write failed: " + paths[0].string());
      return;
    }
    case CorpusFormat::Jsonl: {
      check_paths(paths, 1, "jsonl");
      auto out = open_out(paths[0]);
      for (const auto& p : corpus.pairs) {
        auto j = to_json(p);
        if (corpus.side != Side::Bilingual) j.erase("tgt");
        out << j.dump() << '\n';
      }
      if (!out) throw Error("write failed: " + paths[0].string());
      return;
    }
  }
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::uint64_t RunReport::total_drops() const {
  return std::accumulate(drops.begin(), drops.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["stage"] = stage;
  j["count_in"] = count_in;
  j["count_out"] = count_out;
  j["drops"] = drops;
  j["wall_time_s"] = wall_time_s;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

}  // namespace mtforge
