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

#include "mtforge/textnorm.hpp"

#include <array>
#include <cstdint>

#include "mtforge/utf8.hpp"

namespace mtforge {

namespace {

char32_t decode(std::string_view c) {
  const auto b = [&](std::size_t i) { return static_cast<unsigned char>(c[i]); };
  switch (c.size()) {
    case 1: return b(0);
    case 2: return ((b(0) & 0x1f) << 6) | (b(1) & 0x3f);
    case 3: return ((b(0) & 0x0f) << 12) | ((b(1) & 0x3f) << 6) | (b(2) & 0x3f);
    case 4:
      return ((b(0) & 0x07) << 18) | ((b(1) & 0x3f) << 12) | ((b(2) & 0x3f) << 6) | (b(3) & 0x3f);
  }
  return 0xfffd;
}

bool is_fullwidth_mapped(char32_t cp) {
  if (cp >= 0xff10 && cp <= 0xff19) return true;  // digits
  if (cp >= 0xff21 && cp <= 0xff3a) return true;  // A-Z
  if (cp >= 0xff41 && cp <= 0xff5a) return true;  // a-z
  switch (cp) {
    case 0xff0c: case 0xff0e: case 0xff01: case 0xff1f: case 0xff1a: case 0xff1b: case 0xff08:
    case 0xff09:
      return true;
    default:
      return false;
  }
}

bool is_one_of(std::string_view tok, std::initializer_list<std::string_view> set) {
  for (auto s : set) {
    if (tok == s) return true;
  }
  return false;
}

bool attaches_left(std::string_view tok) {
  if (is_one_of(tok, {".", ",", "!", "?", ":", ";", "%", ")", "]", "}", "...", "n't", "@-@"})) {
    return true;
  }
  // 's 're 'll 'd 've 'm
  return tok.size() >= 2 && tok.front() == '\'' && tok[1] != '\'';
}

bool attaches_right(std::string_view tok) { return is_one_of(tok, {"(", "[", "{", "$", "@-@"}); }

}  // namespace

std::string normalize_punct(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const auto& ch : utf8::chars(text)) {
    const char32_t cp = decode(ch);
    switch (cp) {
      case U'\u201c': case U'\u201d': case U'\u201e': out += '"'; continue;
      case U'\u2018': case U'\u2019': case U'\u201a': out += '\''; continue;
      case U'\u2013': case U'\u2014': out += '-'; continue;
      case U'\u2026': out += "..."; continue;
      case U'\u00a0': out += ' '; continue;
      default: break;
    }
    if (is_fullwidth_mapped(cp)) {
      out += static_cast<char>(cp - 0xfee0);
    } else {
      out += ch;
    }
  }
  return out;
}

Sentence normalize_punct(const Sentence& sentence) {
  Sentence out;
  out.level = sentence.level;
  for (const auto& tok : sentence.tokens) {
    auto norm = split_words(normalize_punct(tok));
    for (auto& t : norm.tokens) out.tokens.push_back(std::move(t));
  }
  return out;
}

std::string detokenize(const Sentence& sentence) {
  std::string out;
  bool glue_next = true;  // no space before the first token
  bool double_quote_open = false;
  bool single_quote_open = false;
  for (const auto& tok : sentence.tokens) {
    bool space_before = !glue_next;
    bool glue_after = false;
    if (tok == "\"" || tok == "'") {
      bool& open = tok == "\"" ? double_quote_open : single_quote_open;
      if (open) {
        space_before = false;
      } else {
        glue_after = true;
      }
      open = !open;
    } else {
      if (attaches_left(tok)) space_before = false;
      if (attaches_right(tok)) glue_after = true;
    }
    if (tok == "@-@") {
      out += '-';
    } else {
      if (space_before) out += ' ';
      out += tok;
    }
    glue_next = glue_after;
  }
  return out;
}

std::string postprocess(const Sentence& sentence, std::string_view unk_token) {
  Sentence kept;
  kept.level = sentence.level;
  for (const auto& tok : sentence.tokens) {
    if (tok != unk_token) kept.tokens.push_back(tok);
  }
  return detokenize(kept);
}

}  // namespace mtforge
