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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chunkpipe/clients.h"
#include "chunkpipe/corpus.h"
#include "chunkpipe/qa.h"

namespace chunkpipe {

// How the "model fails without this chunk" half of the golden test is run.
enum class GoldenMode {
  kNoContext,     // once per item, with an empty context
  kWithoutChunk,  // once per candidate, with all the other candidates
};

struct GoldenConfig {
  SymbolSetId symbols = SymbolSetId::kAlpha;
  int max_tokens = 1;
  GoldenMode mode = GoldenMode::kNoContext;
};

// A candidate is golden when the item is answered correctly with that chunk
// as the only context and incorrectly without it. In kNoContext mode this
// makes exactly |candidates| + 1 generate calls.
std::vector<std::string> find_golden(Generator& generator, const McqaItem& item, const std::vector<Chunk>& candidates,
                                     const GoldenConfig& config = {});

struct GoldenRecord {
  std::string item_id;
  std::vector<std::string> golden_chunk_ids;
  std::optional<int> position_in_retrieval;  // 1-based

  bool operator==(const GoldenRecord&) const = default;
};

// Position of the first retrieved chunk that is golden, if any.
GoldenRecord golden_record(std::string item_id, std::vector<std::string> golden_ids,
                           const std::vector<std::string>& retrieved_ids);

struct GoldenHistogram {
  std::vector<std::size_t> counts;  // counts[p - 1] for positions 1..k
  std::size_t absent = 0;

  std::size_t total() const;
  bool operator==(const GoldenHistogram&) const = default;
};

GoldenHistogram golden_histogram(const std::vector<GoldenRecord>& records, int k);

struct SweepRow {
  int chunk_size = 0;
  int n_chunks = 0;
  double accuracy = 0.0;

  bool operator==(const SweepRow&) const = default;
};

// Accuracy for a number of context chunks, at one chunk size.
using CountEvaluator = std::function<double(int n_chunks)>;
// Called once per chunk size; re-chunks the corpus and returns the
// per-count evaluator for that size.
using SizePreparer = std::function<CountEvaluator(int chunk_size)>;

// Rows in grid order: sizes outer, counts inner.
std::vector<SweepRow> sweep_chunk_config(const std::vector<int>& sizes, const std::vector<int>& counts,
                                         const SizePreparer& prepare);

struct NoiseItem {
  McqaItem item;
  Chunk golden;
  std::vector<std::string> excluded_ids;  // e.g. the item's retrieved chunks
};

struct NoiseRow {
  int n_random = 0;
  double accuracy = 0.0;
  std::size_t n_items = 0;

  bool operator==(const NoiseRow&) const = default;
};

struct NoiseConfig {
  SymbolSetId symbols = SymbolSetId::kAlpha;
  int max_tokens = 1;
};

// For each n: context = the golden chunk plus n distinct distractors drawn
// uniformly from the pool (minus the golden and excluded ids), with the
// golden chunk at a uniformly random position. Draws depend only on
// (seed, n, item index).
std::vector<NoiseRow> noise_experiment(Generator& generator, const std::vector<NoiseItem>& items,
                                       const std::vector<Chunk>& pool, const std::vector<int>& n_random,
                                       std::uint64_t seed, const NoiseConfig& config = {});

// The distractor/golden ordering noise_experiment uses for one item.
std::vector<const Chunk*> noise_context(const NoiseItem& item, const std::vector<Chunk>& pool, int n_random,
                                        std::uint64_t seed, std::size_t item_index);

// CSV (header row first) and JSON mirrors of the reports.
std::string golden_csv(const std::vector<GoldenRecord>& records);
std::string histogram_csv(const GoldenHistogram& histogram);
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string noise_csv(const std::vector<NoiseRow>& rows);

Json golden_json(const std::vector<GoldenRecord>& records);
std::vector<GoldenRecord> golden_from_json(const Json& j);
Json histogram_json(const GoldenHistogram& histogram);
Json sweep_json(const std::vector<SweepRow>& rows);
Json noise_json(const std::vector<NoiseRow>& rows);

}  // namespace chunkpipe
