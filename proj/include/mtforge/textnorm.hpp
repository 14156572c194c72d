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

#include <string>
#include <string_view>

#include "mtforge/core.hpp"

namespace mtforge {

/// Applies the fixed punctuation table code point by code point: curly double
/// quotes to '"', curly single quotes to '\'', en/em dash to '-', ellipsis to
/// "...", no-break space to ' ', and fullwidth digits, letters and ，．！？：；（）
/// to ASCII. Idempotent.
std::string normalize_punct(std::string_view text);

/// Token-wise normalization. A token that contained a no-break space is split at it.
Sentence normalize_punct(const Sentence& sentence);

/// Rule-based English detokenization of already-tokenized text.
std::string detokenize(const Sentence& sentence);

/// Removes every `unk_token` then detokenizes.
std::string postprocess(const Sentence& sentence, std::string_view unk_token = "<unk>");

}  // namespace mtforge
