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

#include "chunkpipe/tokenizer.h"

#include <cctype>

#include "chunkpipe/error.h"

namespace chunkpipe {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

class WhitespacePunctTokenizer final : public Tokenizer {
 public:
  std::string_view id() const override { return "ws-punct"; }

  std::vector<TokenSpan> spans(std::string_view text) const override {
    std::vector<TokenSpan> out;
    std::size_t i = 0;
    while (i < text.size()) {
      if (is_space(text[i])) {
        ++i;
      } else if (is_punct(text[i])) {
        out.push_back({i, i + 1});
        ++i;
      } else {
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i]) && !is_punct(text[i])) ++i;
        out.push_back({start, i});
      }
    }
    return out;
  }
};

class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::string_view id() const override { return "whitespace"; }

  std::vector<TokenSpan> spans(std::string_view text) const override {
    std::vector<TokenSpan> out;
    std::size_t i = 0;
    while (i < text.size()) {
      if (is_space(text[i])) {
        ++i;
        continue;
      }
      std::size_t start = i;
      while (i < text.size() && !is_space(text[i])) ++i;
      out.push_back({start, i});
    }
    return out;
  }
};

}  // namespace

std::vector<std::string> Tokenizer::tokens(std::string_view text) const {
  std::vector<std::string> out;
  for (const auto& s : spans(text)) out.emplace_back(text.substr(s.begin, s.end - s.begin));
  return out;
}

const Tokenizer& tokenizer_for(std::string_view id) {
  static const WhitespacePunctTokenizer ws_punct;
  static const WhitespaceTokenizer whitespace;
  if (id == ws_punct.id()) return ws_punct;
  if (id == whitespace.id()) return whitespace;
  throw Error(ErrorCode::kInvalidArgument, "unknown tokenizer_id '" + std::string(id) + "'");
}

const Tokenizer& default_tokenizer() { return tokenizer_for(kDefaultTokenizerId); }

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace chunkpipe
