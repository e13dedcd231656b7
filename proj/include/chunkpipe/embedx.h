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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chunkpipe/corpus.h"

namespace chunkpipe {

struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

// Feature-hashing embedder: each lowercased default-tokenizer token adds
// +/-1 at fnv1a64(token) mod dim (sign from the top hash bit); the result is
// L2-normalized unless it is all zeros.
EmbeddingVector mock_embed(std::string_view text, int dim);

// Cosine similarity accumulated in f64; 0 when either side has zero norm.
double cosine(std::span<const float> a, std::span<const float> b);

struct IndexEntry {
  std::string chunk_id;
  EmbeddingVector vector;

  bool operator==(const IndexEntry&) const = default;
};

struct IndexMetadata {
  std::string embedder_id;
  std::string fingerprint;

  bool operator==(const IndexMetadata&) const = default;
};

// Exact cosine index. Immutable after build; safe for concurrent search.
struct VectorIndex {
  std::size_t dim = 0;
  std::vector<IndexEntry> entries;
  IndexMetadata metadata;

  std::size_t size() const { return entries.size(); }
  bool operator==(const VectorIndex&) const = default;
};

struct RetrievalHit {
  std::string chunk_id;
  float score = 0.0f;
  int rank = 0;

  bool operator==(const RetrievalHit&) const = default;
};

// Order-sensitive digest of chunk ids and rendered texts.
std::string corpus_fingerprint(const std::vector<Chunk>& chunks);

VectorIndex build_index(const std::vector<Chunk>& chunks, const std::vector<EmbeddingVector>& vectors,
                        IndexMetadata metadata);

// Top-k by cosine, ties broken by ascending chunk_id.
std::vector<RetrievalHit> search(const VectorIndex& index, const EmbeddingVector& query, int k);

// JSON-lines index file: a header line {dim, count, embedder_id,
// fingerprint, checksum} then one {chunk_id, values} line per entry. The
// checksum is the CRC-32 of the entry lines, hex encoded.
void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path);

std::string serialize_index(const VectorIndex& index);
VectorIndex parse_index(std::string_view text);

}  // namespace chunkpipe
