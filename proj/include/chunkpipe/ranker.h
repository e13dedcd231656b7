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
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chunkpipe/clients.h"
#include "chunkpipe/corpus.h"
#include "chunkpipe/embedx.h"

namespace chunkpipe {

inline constexpr int kMinRelevance = 1;
inline constexpr int kMaxRelevance = 5;
// Chunks scoring at least this are kept as context.
inline constexpr int kRetainThreshold = 4;
// Chunks used, in retrieval order, when nothing reaches the threshold.
inline constexpr std::size_t kFallbackCount = 3;
inline constexpr int kDefaultRetrievalDepth = 7;

class RelevanceScore {
 public:
  // Throws InvalidArgument outside 1..5.
  explicit RelevanceScore(int value);
  // Clamps into 1..5, logging a warning when the input was out of range.
  static RelevanceScore clamped(int raw, std::string_view what);

  int value() const { return value_; }
  bool operator==(const RelevanceScore&) const = default;

 private:
  int value_;
};

struct ScoredHit {
  RetrievalHit hit;
  RelevanceScore score;
};

struct ContextSelection {
  std::vector<std::string> chunk_ids;
  bool used_fallback = false;

  bool operator==(const ContextSelection&) const = default;
};

struct ContextBlock {
  std::string text;
  std::vector<std::string> included_ids;
  bool truncated = false;
};

struct RankTriplet {
  std::string chunk_id;
  std::string question;
  int rank = 1;

  bool operator==(const RankTriplet&) const = default;
};

// Lookup table from chunk_id to chunk; borrows the chunk vector.
class ChunkStore {
 public:
  explicit ChunkStore(const std::vector<Chunk>& chunks);
  const Chunk& at(const std::string& chunk_id) const;  // throws UnknownChunkId
  bool contains(const std::string& chunk_id) const { return by_id_.count(chunk_id) != 0; }
  const std::vector<Chunk>& chunks() const { return *chunks_; }

 private:
  const std::vector<Chunk>* chunks_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

RelevanceScore score_chunk(RelevanceScorer& scorer, std::string_view question, const Chunk& chunk);

// Keeps hits scored 4 or 5 (score descending, then retrieval rank). When
// none qualify, falls back to the first three hits in retrieval order.
ContextSelection filter_and_order(const std::vector<ScoredHit>& scored);

// Renders selected chunks (header + body, blank-line separated) and keeps
// the longest prefix within budget_tokens. A first chunk that alone exceeds
// the budget is cut to its first budget_tokens tokens.
ContextBlock assemble_context(const ContextSelection& selection, const ChunkStore& chunks, int budget_tokens,
                              const Tokenizer& tokenizer = default_tokenizer());

struct RankQuery {
  std::string question;
  std::vector<Chunk> retrieved;  // in retrieval order
};

std::vector<RankTriplet> build_rank_dataset(const std::vector<RankQuery>& queries, RelevanceScorer& labeler,
                                            std::size_t jobs = 1);

void write_rank_dataset(const std::filesystem::path& path, const std::vector<RankTriplet>& triplets);
std::vector<RankTriplet> read_rank_dataset(const std::filesystem::path& path);

enum class RecipeTarget { kCrr, kSft };

struct TrainingRecipe {
  RecipeTarget target = RecipeTarget::kCrr;
  std::string optimizer;
  int batch_size = 0;
  double learning_rate = 0.0;
  std::string scheduler;
  int warmup_steps = 0;
  int epochs = 0;

  bool operator==(const TrainingRecipe&) const = default;
};

RecipeTarget parse_recipe_target(std::string_view name);  // throws InvalidArgument
std::string_view recipe_target_name(RecipeTarget target);
TrainingRecipe training_recipe(RecipeTarget target);
Json recipe_json(const TrainingRecipe& recipe);
void emit_training_recipe(RecipeTarget target, const std::filesystem::path& path);

}  // namespace chunkpipe
