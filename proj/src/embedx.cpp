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

#include "chunkpipe/embedx.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "chunkpipe/error.h"
#include "chunkpipe/hashing.h"
#include "chunkpipe/tokenizer.h"

namespace chunkpipe {

EmbeddingVector mock_embed(std::string_view text, int dim) {
  if (dim < 1) throw Error(ErrorCode::kInvalidArgument, "embedding dim must be >= 1");
  const auto udim = static_cast<std::uint64_t>(dim);
  std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
  const std::string lowered = ascii_lower(text);
  for (const auto& span : default_tokenizer().spans(lowered)) {
    const std::uint64_t h = fnv1a64(std::string_view(lowered).substr(span.begin, span.end - span.begin));
    acc[h % udim] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  EmbeddingVector out;
  out.values.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out.values[i] = static_cast<float>(norm > 0.0 ? acc[i] / norm : 0.0);
  }
  return out;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimMismatch,
                "cosine of dims " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string corpus_fingerprint(const std::vector<Chunk>& chunks) {
  std::uint64_t h = kFnvOffset;
  for (const auto& c : chunks) {
    h = fnv1a64(c.chunk_id, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(render_chunk(c), h);
    h = fnv1a64(std::string_view("\x1e", 1), h);
  }
  return hex64(h);
}

VectorIndex build_index(const std::vector<Chunk>& chunks, const std::vector<EmbeddingVector>& vectors,
                        IndexMetadata metadata) {
  if (chunks.size() != vectors.size()) {
    throw Error(ErrorCode::kInvalidArgument, std::to_string(chunks.size()) + " chunks but " +
                                                 std::to_string(vectors.size()) + " vectors");
  }
  VectorIndex index;
  index.metadata = std::move(metadata);
  index.dim = vectors.empty() ? 0 : vectors.front().dim();
  std::unordered_set<std::string> ids;
  index.entries.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (vectors[i].dim() != index.dim) {
      throw Error(ErrorCode::kDimMismatch, "vector for '" + chunks[i].chunk_id + "' has dim " +
                                               std::to_string(vectors[i].dim()) + ", expected " +
                                               std::to_string(index.dim));
    }
    if (!ids.insert(chunks[i].chunk_id).second) {
      throw Error(ErrorCode::kDuplicateChunkId, chunks[i].chunk_id);
    }
    index.entries.push_back({chunks[i].chunk_id, vectors[i]});
  }
  return index;
}

std::vector<RetrievalHit> search(const VectorIndex& index, const EmbeddingVector& query, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (query.dim() != index.dim) {
    throw Error(ErrorCode::kDimMismatch, "query dim " + std::to_string(query.dim()) + " vs index dim " +
                                             std::to_string(index.dim));
  }
  struct Scored {
    double score;
    const std::string* id;
  };
  std::vector<Scored> scored;
  scored.reserve(index.size());
  for (const auto& e : index.entries) scored.push_back({cosine(query.values, e.vector.values), &e.chunk_id});

  const auto better = [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return *a.id < *b.id;
  };
  const std::size_t take = std::min(static_cast<std::size_t>(k), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);

  std::vector<RetrievalHit> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    hits.push_back({*scored[i].id, static_cast<float>(scored[i].score), static_cast<int>(i)});
  }
  return hits;
}

std::string serialize_index(const VectorIndex& index) {
  std::string body;
  for (const auto& e : index.entries) {
    Json values = Json::array();
    for (float v : e.vector.values) values.push_back(v);
    body += Json{{"chunk_id", e.chunk_id}, {"values", values}}.dump();
    body += '\n';
  }
  char checksum[9];
  std::snprintf(checksum, sizeof(checksum), "%08x", crc32(body));
  Json header{{"dim", index.dim},
              {"count", index.entries.size()},
              {"embedder_id", index.metadata.embedder_id},
              {"fingerprint", index.metadata.fingerprint},
              {"checksum", checksum}};
  return header.dump() + "\n" + body;
}

VectorIndex parse_index(std::string_view text) {
  const auto corrupt = [](const std::string& why) { return Error(ErrorCode::kCorruptIndex, why); };
  const std::size_t eol = text.find('\n');
  if (eol == std::string_view::npos) throw corrupt("missing header line");
  const std::string_view body = text.substr(eol + 1);

  VectorIndex index;
  std::size_t count = 0;
  std::string checksum;
  try {
    Json header = Json::parse(text.substr(0, eol));
    index.dim = header.at("dim").get<std::size_t>();
    count = header.at("count").get<std::size_t>();
    index.metadata.embedder_id = header.at("embedder_id").get<std::string>();
    index.metadata.fingerprint = header.at("fingerprint").get<std::string>();
    checksum = header.at("checksum").get<std::string>();
  } catch (const Json::exception& e) {
    throw corrupt(std::string("bad header: ") + e.what());
  }

  char actual[9];
  std::snprintf(actual, sizeof(actual), "%08x", crc32(body));
  if (checksum != actual) throw corrupt("checksum mismatch (header " + checksum + ", data " + actual + ")");

  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t end = body.find('\n', pos);
    if (end == std::string_view::npos) throw corrupt("unterminated entry line");
    try {
      Json row = Json::parse(body.substr(pos, end - pos));
      IndexEntry entry;
      entry.chunk_id = row.at("chunk_id").get<std::string>();
      for (const auto& v : row.at("values")) entry.vector.values.push_back(v.get<float>());
      if (entry.vector.dim() != index.dim) throw corrupt("entry '" + entry.chunk_id + "' has wrong dim");
      index.entries.push_back(std::move(entry));
    } catch (const Json::exception& e) {
      throw corrupt(std::string("bad entry: ") + e.what());
    }
    pos = end + 1;
  }
  if (index.entries.size() != count) {
    throw corrupt("header count " + std::to_string(count) + " but " + std::to_string(index.entries.size()) +
                  " entries");
  }
  return index;
}

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
  write_text_file(path, serialize_index(index));
}

VectorIndex load_index(const std::filesystem::path& path) { return parse_index(read_text_file(path)); }

}  // namespace chunkpipe
