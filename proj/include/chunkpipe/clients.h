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

#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chunkpipe/corpus.h"
#include "chunkpipe/embedx.h"

namespace chunkpipe {

// Model boundary. Each public entry point bumps an atomic call counter once
// and then dispatches to the implementation; all clients may be shared
// between worker threads.

class Generator {
 public:
  virtual ~Generator() = default;

  std::string generate(std::string_view prompt, int max_tokens);
  std::size_t call_count() const { return calls_.load(); }
  virtual std::string id() const = 0;

 protected:
  virtual std::string do_generate(std::string_view prompt, int max_tokens) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

class Embedder {
 public:
  virtual ~Embedder() = default;

  // One vector per text, in input order.
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);
  EmbeddingVector embed_one(const std::string& text);
  std::size_t call_count() const { return calls_.load(); }
  virtual std::string id() const = 0;

 protected:
  virtual std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

// Relevance scorer and rank labeler share this contract: a raw integer
// that callers clamp into 1..5.
class RelevanceScorer {
 public:
  virtual ~RelevanceScorer() = default;

  int score(std::string_view question, const Chunk& chunk);
  std::size_t call_count() const { return calls_.load(); }
  virtual std::string id() const = 0;

 protected:
  virtual int do_score(std::string_view question, const Chunk& chunk) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

// --- deterministic in-process mocks ---

struct ScriptRule {
  std::string contains;  // matched as a plain substring of the prompt
  std::string reply;
};

class ScriptedGenerator final : public Generator {
 public:
  ScriptedGenerator(std::vector<ScriptRule> rules, std::string default_reply)
      : rules_(std::move(rules)), default_reply_(std::move(default_reply)) {}

  std::string id() const override { return "scripted"; }
  const std::vector<ScriptRule>& rules() const { return rules_; }

 protected:
  std::string do_generate(std::string_view prompt, int max_tokens) override;

 private:
  std::vector<ScriptRule> rules_;
  std::string default_reply_;
};

// Reads the option list out of a multiple-choice prompt and answers with
// the symbol of the option sharing the largest fraction of its tokens with
// the context block. No context, or no overlap, answers the first symbol.
class LexicalGenerator final : public Generator {
 public:
  std::string id() const override { return "lexical"; }

 protected:
  std::string do_generate(std::string_view prompt, int max_tokens) override;
};

class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(int dim);

  std::string id() const override { return "hash-fnv1a-" + std::to_string(dim_); }
  int dim() const { return dim_; }

 protected:
  std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) override;

 private:
  int dim_;
};

// Jaccard overlap J of lowercased token sets of question and chunk body:
// 5 if J >= 0.5, 4 if >= 0.3, 3 if >= 0.2, 2 if >= 0.1, else 1.
int jaccard_rubric(std::string_view question, std::string_view body);

class RubricScorer final : public RelevanceScorer {
 public:
  std::string id() const override { return "jaccard-rubric"; }

 protected:
  int do_score(std::string_view question, const Chunk& chunk) override;
};

// --- HTTP clients ---

struct EndpointConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8080"
  int timeout_ms = 30000;
  int retries = 2;
  std::optional<std::string> auth_token;

  void validate() const;
};

inline constexpr std::size_t kEmbedBatchSize = 32;

// POST /generate {"prompt", "max_tokens", "temperature": 0} -> {"text"}.
class HttpGenerator final : public Generator {
 public:
  explicit HttpGenerator(EndpointConfig config);
  std::string id() const override { return "http:" + config_.base_url; }

 protected:
  std::string do_generate(std::string_view prompt, int max_tokens) override;

 private:
  EndpointConfig config_;
};

// POST /embed {"texts": [...]} -> {"vectors": [[...], ...]}, batched.
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(EndpointConfig config, std::size_t batch_size = kEmbedBatchSize);
  std::string id() const override { return "http:" + config_.base_url; }

 protected:
  std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) override;

 private:
  EndpointConfig config_;
  std::size_t batch_size_;
};

// POST /score {"question", "chunk"} -> {"rank"}. The chunk is sent rendered
// with its header.
class HttpScorer final : public RelevanceScorer {
 public:
  explicit HttpScorer(EndpointConfig config);
  std::string id() const override { return "http:" + config_.base_url; }

 protected:
  int do_score(std::string_view question, const Chunk& chunk) override;

 private:
  EndpointConfig config_;
};

// Embeds header + blank line + body for every chunk.
std::vector<EmbeddingVector> embed_chunks(Embedder& embedder, const std::vector<Chunk>& chunks);

}  // namespace chunkpipe
