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

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mtforge/core.hpp"
#include "mtforge/ngram_lm.hpp"

namespace mtforge::cli {

/// Reads `--config` files: top-level keys are global flags, and an object under
/// a subcommand's name holds that subcommand's flags. Underscores in keys are
/// read as dashes.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level from MTFORGE_LOG (error, warn, info, debug); warn when unset.
LogLevel log_level();
void log(LogLevel level, const std::string& message);

struct Globals {
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Result of one subcommand run.
struct Outcome {
  RunReport report;
  /// The resolved config is written to `<primary_output>.config.json`.
  std::filesystem::path primary_output;
};

using Runner = std::function<Outcome()>;

/// Subcommand name -> what to run once flags are parsed.
using Registry = std::map<std::string, Runner>;

void register_data_commands(CLI::App& app, const Globals& globals, Registry& registry);
void register_model_commands(CLI::App& app, const Globals& globals, Registry& registry);

/// `--input`/`--format` flags for a corpus.
struct CorpusInput {
  std::vector<std::string> paths;
  std::string format = "auto";

  void add(CLI::App* sub, const std::string& flag = "--input", bool required = true,
           const std::string& what = "input corpus");
  Corpus read() const;
};

/// `--output`/`--out-format` flags for a corpus.
struct CorpusOutput {
  std::vector<std::string> paths;
  std::string format = "auto";

  void add(CLI::App* sub, const std::string& flag = "--output", const std::string& what = "output corpus");
  void write(const Corpus& corpus) const;
  std::filesystem::path primary() const { return paths.front(); }
};

/// auto: two paths -> two-file; *.jsonl -> jsonl; *.tsv -> tsv; otherwise text.
CorpusFormat resolve_format(const std::string& format, const std::vector<std::string>& paths);

Which parse_side(const std::string& side);

/// The sentences of one side (monolingual corpora keep theirs in src).
std::vector<Sentence> side_sentences(const Corpus& corpus, Which side);

/// Parses "key=value".
std::pair<std::string, std::string> split_assignment(const std::string& text, const std::string& flag);

std::shared_ptr<const NGramLM> load_lm(const std::string& path);

/// Option values of `sub` (given or default), keyed by long flag name.
nlohmann::json resolved_options(const CLI::App* sub);

}  // namespace mtforge::cli
