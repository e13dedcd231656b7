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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chunkpipe/config.h"
#include "chunkpipe/corpus.h"
#include "chunkpipe/embedx.h"
#include "chunkpipe/qa.h"
#include "chunkpipe/ranker.h"

namespace chunkpipe {

struct StructuredCorpus {
  std::vector<Chunk> chunks;
  std::vector<Asset> assets;
};

// Parses every file (doc_id = file stem), extracts assets, cuts one chunk
// per section, deduplicates section chunks across the corpus and only then
// applies the sliding window, so sub-chunk groups stay contiguous.
StructuredCorpus structure_corpus(const std::vector<std::filesystem::path>& files, const ChunkPolicy& policy);

// Stage runner. Each stage reads earlier artifacts under
// <output_dir>/<stage>/ and writes its own next to a manifest.json carrying
// the config fingerprint and seed; wall-clock times go to timing.json only.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }
  std::filesystem::path stage_dir(std::string_view stage) const;

  void structure();
  void embed();
  void index();
  void retrieve();
  void rank_dataset();
  void recipe(RecipeTarget target);
  void splits();
  EvalReport eval(std::optional<int> split = std::nullopt);
  void golden();
  void sweep();
  void noise();

 private:
  class StageRun;

  std::vector<McqaItem> load_items() const;
  std::vector<Chunk> load_chunks() const;
  VectorIndex load_vector_index() const;
  std::unique_ptr<Embedder> query_embedder(const VectorIndex& index) const;

  PipelineConfig config_;
  std::string fingerprint_;
};

}  // namespace chunkpipe
