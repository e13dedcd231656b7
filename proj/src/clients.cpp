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

#include "chunkpipe/clients.h"

#include <algorithm>
#include <set>

#include "chunkpipe/error.h"
#include "chunkpipe/tokenizer.h"

namespace chunkpipe {

std::string Generator::generate(std::string_view prompt, int max_tokens) {
  ++calls_;
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "empty prompt");
  return do_generate(prompt, max_tokens);
}

std::vector<EmbeddingVector> Embedder::embed(const std::vector<std::string>& texts) {
  ++calls_;
  auto out = do_embed(texts);
  if (out.size() != texts.size()) {
    throw Error(ErrorCode::kModelUnavailable, "embedder returned " + std::to_string(out.size()) +
                                                  " vectors for " + std::to_string(texts.size()) + " texts");
  }
  return out;
}

EmbeddingVector Embedder::embed_one(const std::string& text) { return embed({text}).front(); }

int RelevanceScorer::score(std::string_view question, const Chunk& chunk) {
  ++calls_;
  return do_score(question, chunk);
}

std::string ScriptedGenerator::do_generate(std::string_view prompt, int) {
  for (const auto& rule : rules_) {
    if (prompt.find(rule.contains) != std::string_view::npos) return rule.reply;
  }
  return default_reply_;
}

namespace {

std::set<std::string> token_set(std::string_view text) {
  auto toks = default_tokenizer().tokens(ascii_lower(text));
  return {toks.begin(), toks.end()};
}

std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const auto& t : a) n += b.count(t);
  return n;
}

}  // namespace

std::string LexicalGenerator::do_generate(std::string_view prompt, int) {
  constexpr std::string_view kContext = "Context:\n";
  constexpr std::string_view kQuestion = "\n\nQuestion: ";
  constexpr std::string_view kOptions = "\n\nOptions:\n";

  const std::size_t opts_at = prompt.find(kOptions);
  if (opts_at == std::string_view::npos) return "1";
  std::string_view context;
  if (prompt.starts_with(kContext)) {
    const std::size_t q_at = prompt.rfind(kQuestion, opts_at);
    if (q_at != std::string_view::npos && q_at >= kContext.size()) {
      context = prompt.substr(kContext.size(), q_at - kContext.size());
    }
  }

  std::vector<std::pair<std::string, std::string>> options;  // (symbol, text)
  std::size_t pos = opts_at + kOptions.size();
  while (pos < prompt.size()) {
    std::size_t eol = prompt.find('\n', pos);
    if (eol == std::string_view::npos) eol = prompt.size();
    std::string_view line = prompt.substr(pos, eol - pos);
    if (line.empty()) break;
    const std::size_t sep = line.find(") ");
    if (sep != std::string_view::npos) options.emplace_back(line.substr(0, sep), line.substr(sep + 2));
    pos = eol + 1;
  }
  if (options.empty()) return "1";

  const auto ctx = token_set(context);
  std::size_t best = 0;
  double best_frac = 0.0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    const auto opt = token_set(options[i].second);
    if (opt.empty()) continue;
    const double frac = static_cast<double>(intersection_size(opt, ctx)) / static_cast<double>(opt.size());
    if (frac > best_frac) {
      best_frac = frac;
      best = i;
    }
  }
  return options[best].first;
}

HashEmbedder::HashEmbedder(int dim) : dim_(dim) {
  if (dim < 1) throw Error(ErrorCode::kInvalidArgument, "embedding dim must be >= 1");
}

std::vector<EmbeddingVector> HashEmbedder::do_embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(mock_embed(t, dim_));
  return out;
}

int jaccard_rubric(std::string_view question, std::string_view body) {
  const auto q = token_set(question);
  const auto b = token_set(body);
  const std::size_t inter = intersection_size(q, b);
  const std::size_t uni = q.size() + b.size() - inter;
  if (uni == 0) return 1;
  // Thresholds compared as integers: inter/uni >= t  <=>  10*inter >= 10t*uni.
  const std::size_t scaled = 10 * inter;
  if (scaled >= 5 * uni) return 5;
  if (scaled >= 3 * uni) return 4;
  if (scaled >= 2 * uni) return 3;
  if (scaled >= 1 * uni) return 2;
  return 1;
}

int RubricScorer::do_score(std::string_view question, const Chunk& chunk) {
  return jaccard_rubric(question, chunk.body);
}

void EndpointConfig::validate() const {
  if (base_url.empty()) throw Error(ErrorCode::kConfig, "endpoint base_url is empty");
  if (timeout_ms <= 0) throw Error(ErrorCode::kConfig, "endpoint timeout_ms must be > 0");
  if (retries < 0) throw Error(ErrorCode::kConfig, "endpoint retries must be >= 0");
}

std::vector<EmbeddingVector> embed_chunks(Embedder& embedder, const std::vector<Chunk>& chunks) {
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(render_chunk(c));
  return embedder.embed(texts);
}

}  // namespace chunkpipe
