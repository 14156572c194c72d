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

#include "cli_common.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>

namespace mtforge::cli {

namespace {

std::string scalar_to_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

void collect(const nlohmann::json& object, std::vector<std::string> parents,
             std::vector<CLI::ConfigItem>& items) {
  for (auto it = object.begin(); it != object.end(); ++it) {
    const auto& value = it.value();
    if (value.is_object()) {
      auto nested = parents;
      nested.push_back(it.key());
      collect(value, nested, items);
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = dashed(it.key());
    if (value.is_array()) {
      for (const auto& v : value) item.inputs.push_back(scalar_to_string(v));
    } else if (!value.is_null()) {
      item.inputs.push_back(scalar_to_string(value));
    }
    items.push_back(std::move(item));
  }
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool, bool, std::string) const {
  return resolved_options(app).dump(2);
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(input);
  } catch (const nlohmann::json::exception& e) {
    throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
  std::vector<CLI::ConfigItem> items;
  collect(j, {}, items);
  return items;
}

LogLevel log_level() {
  const char* env = std::getenv("MTFORGE_LOG");
  if (!env) return LogLevel::Warn;
  const std::string v(env);
  if (v == "error") return LogLevel::Error;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(LogLevel level, const std::string& message) {
  static const LogLevel threshold = log_level();
  if (level > threshold) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[mtforge " << names[static_cast<int>(level)] << "] " << message << '\n';
}

CorpusFormat resolve_format(const std::string& format, const std::vector<std::string>& paths) {
  if (format != "auto") return format_from_string(format);
  if (paths.size() == 2) return CorpusFormat::TwoFile;
  if (!paths.empty() && ends_with(paths.front(), ".jsonl")) return CorpusFormat::Jsonl;
  if (!paths.empty() && ends_with(paths.front(), ".tsv")) return CorpusFormat::Tsv;
  return CorpusFormat::Text;
}

void CorpusInput::add(CLI::App* sub, const std::string& flag, bool required, const std::string& what) {
  auto* opt = sub->add_option(flag, paths, what + " (one file, or source and target files)")
                  ->expected(1, 2)
                  ->check(CLI::ExistingFile);
  if (required) opt->required();
  const std::string fmt_flag = flag == "--input" ? "--format" : flag + "-format";
  sub->add_option(fmt_flag, format, "auto, two-file, tsv, jsonl or text")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "two-file", "tsv", "jsonl", "text"}));
}

Corpus CorpusInput::read() const {
  std::vector<std::filesystem::path> p(paths.begin(), paths.end());
  return read_corpus(p, resolve_format(format, paths));
}

void CorpusOutput::add(CLI::App* sub, const std::string& flag, const std::string& what) {
  sub->add_option(flag, paths, what + " (one file, or source and target files)")->expected(1, 2)->required();
  const std::string fmt_flag = flag == "--output" ? "--out-format" : flag + "-format";
  sub->add_option(fmt_flag, format, "auto, two-file, tsv, jsonl or text")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "two-file", "tsv", "jsonl", "text"}));
}

void CorpusOutput::write(const Corpus& corpus) const {
  std::vector<std::filesystem::path> p(paths.begin(), paths.end());
  write_corpus(corpus, p, resolve_format(format, paths));
}

Which parse_side(const std::string& side) {
  if (side == "src") return Which::Src;
  if (side == "tgt") return Which::Tgt;
  throw Error("side must be 'src' or 'tgt', got '" + side + "'");
}

std::vector<Sentence> side_sentences(const Corpus& corpus, Which side) {
  std::vector<Sentence> out;
  out.reserve(corpus.pairs.size());
  const bool mono = corpus.side != Side::Bilingual;
  for (const auto& p : corpus.pairs) out.push_back(side == Which::Src || mono ? p.src : p.tgt);
  return out;
}

std::pair<std::string, std::string> split_assignment(const std::string& text, const std::string& flag) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw CLI::ValidationError(flag, "expected key=value, got '" + text + "'");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

std::shared_ptr<const NGramLM> load_lm(const std::string& path) {
  return std::make_shared<const NGramLM>(NGramLM::load(path));
}

nlohmann::json resolved_options(const CLI::App* sub) {
  nlohmann::json out = nlohmann::json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "workers") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (res.size() == 1 && opt->get_expected_max() <= 1) {
        out[name] = res.front();
      } else {
        out[name] = res;
      }
    } else if (!opt->get_default_str().empty()) {
      out[name] = opt->get_default_str();
    }
  }
  return out;
}

}  // namespace mtforge::cli
