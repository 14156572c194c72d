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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "mtforge/filter.hpp"
#include "support.hpp"

using namespace mtforge;
using namespace mtforge::testing;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run_cli(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + MTFORGE_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

// The six-pair corpus from the filter tests: four clean pairs plus one
// violation each for length, long word, HTML, duplicate, ratio and language.
Corpus six_violations() {
  Rng rng(1);
  Corpus c;
  for (std::uint64_t i = 0; i < 4; ++i) c.pairs.push_back(clean_pair(rng, i));
  auto p = clean_pair(rng, 10);
  p.src = zh_sentence(rng, 121);
  p.tgt = en_sentence(rng, 121);
  c.pairs.push_back(p);
  p = clean_pair(rng, 11);
  p.tgt.tokens[0] = std::string(41, 'z');
  c.pairs.push_back(p);
  p = clean_pair(rng, 12);
  p.tgt.tokens[0] = "<b>";
  c.pairs.push_back(p);
  p = c.pairs[0];
  p.id = 13;
  c.pairs.push_back(p);
  p = clean_pair(rng, 14);
  p.src.tokens.resize(2);
  p.tgt = en_sentence(rng, 7);
  c.pairs.push_back(p);
  p = clean_pair(rng, 15);
  p.src = en_sentence(rng, p.tgt.size());
  c.pairs.push_back(p);
  return c;
}

void write_jsonl(const Corpus& c, const std::filesystem::path& path) {
  const std::filesystem::path paths[] = {path};
  write_corpus(c, paths, CorpusFormat::Jsonl);
}

}  // namespace

TEST_CASE("bleu on identical files reports 100") {
  TempDir dir;
  write_lines(dir / "h.txt", std::vector<std::string>{"a b c d", "the cat sat on the mat"});
  const auto r = run_cli(dir, "bleu --hyp " + q(dir / "h.txt") + " --ref " + q(dir / "h.txt"));
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("bleu") == 100.0);
  CHECK(j.at("stage") == "bleu");
  CHECK(j.at("count_in") == 2);
}

TEST_CASE("usage errors exit 1 and data errors exit 2") {
  TempDir dir;
  write_lines(dir / "h.txt", std::vector<std::string>{"a b"});
  write_lines(dir / "r.txt", std::vector<std::string>{"a b", "c d"});

  const auto unknown = run_cli(dir, "bleu --hyp " + q(dir / "h.txt") + " --ref " + q(dir / "h.txt") + " --bogus");
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("--help") != std::string::npos);
  CHECK(run_cli(dir, "").code == 1);
  CHECK(run_cli(dir, "no-such-command").code == 1);
  CHECK(run_cli(dir, "--help").code == 0);

  const auto mismatch = run_cli(dir, "bleu --hyp " + q(dir / "h.txt") + " --ref " + q(dir / "r.txt"));
  CHECK(mismatch.code == 2);
  CHECK(mismatch.err.find("line count mismatch") != std::string::npos);

  write_lines(dir / "bad.jsonl", std::vector<std::string>{"{\"id\": 0, \"src\": \"a\"", ""});
  CHECK(run_cli(dir, "noise --input " + q(dir / "bad.jsonl") + " --output " + q(dir / "o.jsonl")).code == 2);
}

TEST_CASE("filter reports the same drops as the library pipeline") {
  TempDir dir;
  const Corpus c = six_violations();
  write_jsonl(c, dir / "in.jsonl");
  toy_langid()->save(dir / "langid.json");

  const auto r = run_cli(dir, "filter --input " + q(dir / "in.jsonl") + " --output " + q(dir / "out.jsonl") +
                                  " --langid " + q(dir / "langid.json"));
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);

  FilterConfig cfg;
  const auto [kept, report] = run_pipeline(c, default_rules(cfg, true));
  CHECK(j.at("drops") == nlohmann::json(report.drops));
  CHECK(j.at("count_out") == kept.size());
  const std::filesystem::path out_paths[] = {dir / "out.jsonl"};
  CHECK(read_corpus(out_paths, CorpusFormat::Jsonl) == kept);

  // The resolved configuration lands next to the output.
  const auto resolved = nlohmann::json::parse(slurp(dir / "out.jsonl.config.json"));
  CHECK(resolved.at("filter").at("max-words") == "120");
  CHECK(resolved.contains("seed"));
}

TEST_CASE("config files set flags and command-line flags win") {
  TempDir dir;
  Corpus c;
  c.pairs.push_back(pair_of(0, "a b c d e f", "u v w x y z"));
  c.pairs.push_back(pair_of(1, "a b", "u v"));
  write_jsonl(c, dir / "in.jsonl");
  std::ofstream(dir / "cfg.json") << R"({"seed": 3, "filter": {"max_words": 4}})";

  const std::string base = "--config " + q(dir / "cfg.json") + " filter --input " + q(dir / "in.jsonl") +
                           " --output " + q(dir / "out.jsonl");
  const auto from_config = run_cli(dir, base);
  REQUIRE(from_config.code == 0);
  CHECK(nlohmann::json::parse(from_config.out).at("count_out") == 1);
  const auto resolved = nlohmann::json::parse(slurp(dir / "out.jsonl.config.json"));
  CHECK(resolved.at("seed") == 3);
  CHECK(resolved.at("filter").at("max-words") == "4");

  const auto overridden = run_cli(dir, base + " --max-words 10");
  REQUIRE(overridden.code == 0);
  CHECK(nlohmann::json::parse(overridden.out).at("count_out") == 2);

  std::ofstream(dir / "typo.json") << R"({"filter": {"max_wrds": 4}})";
  CHECK(run_cli(dir, "--config " + q(dir / "typo.json") + " filter --input " + q(dir / "in.jsonl") +
                         " --output " + q(dir / "out.jsonl"))
            .code == 1);
}

TEST_CASE("noise output does not depend on the worker count") {
  TempDir dir;
  Rng rng(5);
  Corpus c;
  for (std::uint64_t i = 0; i < 500; ++i) c.pairs.push_back({i, random_sentence(rng, 1, 20, 50), words("t"), {}, {}});
  write_jsonl(c, dir / "in.jsonl");
  const std::string base = "noise --p-drop 0.2 --p-swap 0.2 --input " + q(dir / "in.jsonl");
  REQUIRE(run_cli(dir, "--seed 7 --workers 1 " + base + " --output " + q(dir / "a.jsonl")).code == 0);
  REQUIRE(run_cli(dir, "--seed 7 --workers 8 " + base + " --output " + q(dir / "b.jsonl")).code == 0);
  REQUIRE(run_cli(dir, "--seed 8 --workers 1 " + base + " --output " + q(dir / "c.jsonl")).code == 0);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(slurp(dir / "a.jsonl") != slurp(dir / "c.jsonl"));
}
