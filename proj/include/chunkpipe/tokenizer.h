/*
 * Copyright 2026 The chunkpipe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace chunkpipe {

// Byte range [begin, end) of one token inside the tokenized text.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const TokenSpan&) const = default;
};

// Budget-accounting tokenizer. Implementations must be deterministic and
// must re-tokenize any substring cut at token boundaries into exactly the
// tokens it was cut from.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::string_view id() const = 0;
  virtual std::vector<TokenSpan> spans(std::string_view text) const = 0;

  std::vector<std::string> tokens(std::string_view text) const;
  std::size_t count(std::string_view text) const { return spans(text).size(); }
};

inline constexpr std::string_view kDefaultTokenizerId = "ws-punct";

// "ws-punct": whitespace separates tokens and every ASCII punctuation
// character is a token of its own. "whitespace": whitespace only.
const Tokenizer& tokenizer_for(std::string_view id);
const Tokenizer& default_tokenizer();

std::string ascii_lower(std::string_view text);

}  // namespace chunkpipe
