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

#include "chunkpipe/ranker.h"

#include <algorithm>
#include <optional>
#include <spdlog/spdlog.h>

#include "chunkpipe/error.h"
#include "chunkpipe/parallel.h"

namespace chunkpipe {

RelevanceScore::RelevanceScore(int value) : value_(value) {
  if (value < kMinRelevance || value > kMaxRelevance) {
    throw Error(ErrorCode::kInvalidArgument, "relevance score " + std::to_string(value) + " outside 1..5");
  }
}

RelevanceScore RelevanceScore::clamped(int raw, std::string_view what) {
  const int v = std::clamp(raw, kMinRelevance, kMaxRelevance);
  if (v != raw) spdlog::warn("{}: relevance {} out of range, clamped to {}", what, raw, v);
  return RelevanceScore(v);
}

ChunkStore::ChunkStore(const std::vector<Chunk>& chunks) : chunks_(&chunks) {
  by_id_.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) by_id_.emplace(chunks[i].chunk_id, i);
}

const Chunk& ChunkStore::at(const std::string& chunk_id) const {
  auto it = by_id_.find(chunk_id);
  if (it == by_id_.end()) throw Error(ErrorCode::kUnknownChunkId, chunk_id);
  return (*chunks_)[it->second];
}

RelevanceScore score_chunk(RelevanceScorer& scorer, std::string_view question, const Chunk& chunk) {
  if (question.empty()) throw Error(ErrorCode::kInvalidArgument, "empty question");
  if (chunk.body.empty()) throw Error(ErrorCode::kInvalidArgument, "chunk '" + chunk.chunk_id + "' has no body");
  int raw = 0;
  try {
    raw = scorer.score(question, chunk);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kModelUnavailable || e.code() == ErrorCode::kTimeout) {
      throw Error(ErrorCode::kScorerUnavailable, e.what());
    }
    throw;
  }
  return RelevanceScore::clamped(raw, chunk.chunk_id);
}

ContextSelection filter_and_order(const std::vector<ScoredHit>& scored) {
  if (scored.empty()) throw Error(ErrorCode::kEmptyInput, "no scored hits to filter");
  std::vector<const ScoredHit*> kept;
  for (const auto& s : scored) {
    if (s.score.value() >= kRetainThreshold) kept.push_back(&s);
  }
  ContextSelection out;
  if (!kept.empty()) {
    std::stable_sort(kept.begin(), kept.end(), [](const ScoredHit* a, const ScoredHit* b) {
      if (a->score.value() != b->score.value()) return a->score.value() > b->score.value();
      return a->hit.rank < b->hit.rank;
    });
    for (const auto* s : kept) out.chunk_ids.push_back(s->hit.chunk_id);
    return out;
  }
  out.used_fallback = true;
  const std::size_t n = std::min(kFallbackCount, scored.size());
  for (std::size_t i = 0; i < n; ++i) out.chunk_ids.push_back(scored[i].hit.chunk_id);
  return out;
}

ContextBlock assemble_context(const ContextSelection& selection, const ChunkStore& chunks, int budget_tokens,
                              const Tokenizer& tokenizer) {
  if (budget_tokens <= 0) throw Error(ErrorCode::kInvalidArgument, "context budget must be positive");
  const auto budget = static_cast<std::size_t>(budget_tokens);

  std::vector<std::string> rendered;
  rendered.reserve(selection.chunk_ids.size());
  for (const auto& id : selection.chunk_ids) rendered.push_back(render_chunk(chunks.at(id)));

  ContextBlock block;
  std::size_t used = 0;
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    const std::size_t n = tokenizer.count(rendered[i]);
    if (used + n > budget) {
      if (i == 0) {
        const auto spans = tokenizer.spans(rendered[i]);
        block.text = rendered[i].substr(0, spans[budget - 1].end);
        block.included_ids.push_back(selection.chunk_ids[i]);
        block.truncated = true;
      }
      break;
    }
    if (i > 0) block.text += "\n\n";
    block.text += rendered[i];
    block.included_ids.push_back(selection.chunk_ids[i]);
    used += n;
  }
  if (tokenizer.count(block.text) > budget) {
    throw Error(ErrorCode::kInvalidArgument, "assembled context exceeds budget; tokenizer is not additive");
  }
  return block;
}

std::vector<RankTriplet> build_rank_dataset(const std::vector<RankQuery>& queries, RelevanceScorer& labeler,
                                            std::size_t jobs) {
  struct Cell {
    std::size_t query;
    std::size_t chunk;
  };
  std::vector<Cell> cells;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t c = 0; c < queries[q].retrieved.size(); ++c) cells.push_back({q, c});
  }
  std::vector<std::optional<RankTriplet>> out(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const auto& q = queries[cells[i].query];
    const Chunk& chunk = q.retrieved[cells[i].chunk];
    int raw = 0;
    try {
      raw = labeler.score(q.question, chunk);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kModelUnavailable || e.code() == ErrorCode::kTimeout) {
        throw Error(ErrorCode::kLabelerUnavailable, e.what());
      }
      throw;
    }
    out[i] = RankTriplet{chunk.chunk_id, q.question, RelevanceScore::clamped(raw, chunk.chunk_id).value()};
  });
  std::vector<RankTriplet> triplets;
  triplets.reserve(out.size());
  for (auto& t : out) triplets.push_back(std::move(*t));
  return triplets;
}

void write_rank_dataset(const std::filesystem::path& path, const std::vector<RankTriplet>& triplets) {
  std::vector<Json> rows;
  rows.reserve(triplets.size());
  for (const auto& t : triplets) rows.push_back(Json{{"chunk_id", t.chunk_id}, {"question", t.question}, {"rank", t.rank}});
  write_jsonl(path, rows);
}

std::vector<RankTriplet> read_rank_dataset(const std::filesystem::path& path) {
  std::vector<RankTriplet> out;
  for (const auto& row : read_jsonl(path)) {
    try {
      RankTriplet t{row.at("chunk_id").get<std::string>(), row.at("question").get<std::string>(),
                    row.at("rank").get<int>()};
      if (t.rank < kMinRelevance || t.rank > kMaxRelevance) {
        throw Error(ErrorCode::kSchemaError, "rank " + std::to_string(t.rank) + " outside 1..5");
      }
      out.push_back(std::move(t));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kSchemaError, std::string("bad triplet: ") + e.what());
    }
  }
  return out;
}

RecipeTarget parse_recipe_target(std::string_view name) {
  if (name == "crr") return RecipeTarget::kCrr;
  if (name == "sft") return RecipeTarget::kSft;
  throw Error(ErrorCode::kInvalidArgument, "unknown recipe target '" + std::string(name) + "'");
}

std::string_view recipe_target_name(RecipeTarget target) { return target == RecipeTarget::kCrr ? "crr" : "sft"; }

TrainingRecipe training_recipe(RecipeTarget target) {
  switch (target) {
    case RecipeTarget::kCrr:
      return {RecipeTarget::kCrr, "adam", 64, 5e-6, "constant", 70, 100};
    case RecipeTarget::kSft:
      return {RecipeTarget::kSft, "adam", 16, 1e-5, "polynomial", 10, 3};
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown recipe target");
}

Json recipe_json(const TrainingRecipe& r) {
  return Json{{"target", recipe_target_name(r.target)},
              {"optimizer", r.optimizer},
              {"batch_size", r.batch_size},
              {"learning_rate", r.learning_rate},
              {"scheduler", r.scheduler},
              {"warmup_steps", r.warmup_steps},
              {"epochs", r.epochs}};
}

void emit_training_recipe(RecipeTarget target, const std::filesystem::path& path) {
  write_json(path, recipe_json(training_recipe(target)));
}

}  // namespace chunkpipe
