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
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chunkpipe/analysis.h"
#include "chunkpipe/clients.h"
#include "chunkpipe/corpus.h"
#include "chunkpipe/qa.h"

namespace chunkpipe {

inline constexpr int kDefaultEmbedDim = 256;

enum class ClientKind { kMock, kEndpoint };

struct EmbedderSettings {
  ClientKind kind = ClientKind::kMock;
  int dim = kDefaultEmbedDim;
  EndpointConfig endpoint;
};

struct ScorerSettings {
  ClientKind kind = ClientKind::kMock;
  EndpointConfig endpoint;
};

enum class GeneratorKind {
  kOracle,    // answers every loaded item with its gold symbol
  kScripted,  // substring rules
  kLexical,   // option/context token overlap
  kEndpoint,
};

struct GeneratorSettings {
  GeneratorKind kind = GeneratorKind::kLexical;
  std::vector<ScriptRule> rules;
  std::string default_reply;
  EndpointConfig endpoint;
};

// Single-document pipeline configuration. Relative paths resolve against
// the config file's directory. See docs/config.md for the schema.
struct PipelineConfig {
  std::filesystem::path base_dir;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  std::vector<std::filesystem::path> corpus_paths;  // resolved
  std::vector<std::string> corpus_spec;             // as written
  ChunkPolicy chunk_policy;

  EmbedderSettings embedder;
  int k = kDefaultRetrievalDepth;
  bool crr_enabled = true;
  ScorerSettings scorer;
  ContextSource context_source = ContextSource::kRetrievedCrr;
  int budget_tokens = kDefaultContextBudget;

  std::filesystem::path mcqa_path;
  std::string mcqa_spec;
  SymbolSetId symbols = SymbolSetId::kAlpha;
  bool balance = false;
  int max_tokens = 1;

  int n_splits = kDefaultSplits;
  int eval_size = kDefaultEvalSize;

  GeneratorSettings generator;

  std::vector<int> sweep_sizes{128, 192, 256, 512};
  std::vector<int> sweep_counts{1, 2, 3, 4, 5, 6, 7};
  std::vector<int> noise_counts{0, 1, 6};
  GoldenMode golden_mode = GoldenMode::kNoContext;

  // Effective configuration with defaults filled in; output_dir, jobs and
  // base_dir are left out since they do not affect artifact contents.
  Json effective() const;
  std::string fingerprint() const;
};

// Throws ConfigError naming the offending field path.
PipelineConfig parse_config(const Json& doc, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// CHUNKPIPE_GEN_URL / CHUNKPIPE_EMBED_URL / CHUNKPIPE_SCORE_URL switch the
// matching client to its HTTP endpoint.
void apply_env_overrides(PipelineConfig& config);

// Resolves corpus_paths: directories expand to their *.md and *.txt files in
// name order.
std::vector<std::filesystem::path> corpus_files(const PipelineConfig& config);

std::unique_ptr<Embedder> make_embedder(const EmbedderSettings& settings);
std::unique_ptr<RelevanceScorer> make_scorer(const ScorerSettings& settings);
// `items` feeds the oracle generator.
std::unique_ptr<Generator> make_generator(const GeneratorSettings& settings, const std::vector<McqaItem>& items,
                                          SymbolSetId symbols);

// Oracle rules: the question line of each item maps to its gold symbol.
std::unique_ptr<ScriptedGenerator> make_oracle_generator(const std::vector<McqaItem>& items, SymbolSetId symbols);

}  // namespace chunkpipe
