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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chunkpipe/jsonio.h"
#include "chunkpipe/tokenizer.h"

namespace chunkpipe {

struct Section {
  std::string heading;
  int level = 1;
  std::string body;
  std::vector<Section> children;

  bool operator==(const Section&) const = default;
};

struct DocumentTree {
  std::string doc_id;
  std::string title;
  std::vector<Section> sections;

  bool operator==(const DocumentTree&) const = default;
};

enum class AssetKind { kTable, kFigure };

struct Asset {
  std::string asset_id;
  AssetKind kind = AssetKind::kTable;
  std::string source_section;  // dotted 1-based section path, e.g. "2.1"
  std::string raw;

  bool operator==(const Asset&) const = default;
};

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::vector<std::string> heading_chain;
  std::string header;
  std::string body;
  std::size_t token_count = 0;
  std::optional<std::string> parent_id;
  int seq = 0;

  bool operator==(const Chunk&) const = default;
};

inline constexpr int kDefaultWindow = 128;
inline constexpr int kDefaultStride = 64;

struct ChunkPolicy {
  int window = kDefaultWindow;
  int stride = kDefaultStride;
  std::string tokenizer_id{kDefaultTokenizerId};

  // Throws InvalidArgument unless 0 < stride <= window and the tokenizer exists.
  void validate() const;
};

inline constexpr std::string_view kPreambleHeading = "Preamble";

// Heading-markup parser. Lines "#".."######" followed by a space open a
// section at that level. An optional first non-blank line "% <title>" sets
// the document title (defaults to doc_id). Body text before the first
// heading lands in a synthetic level-1 "Preamble" section.
DocumentTree parse_document(std::string_view markup, std::string_view doc_id);

struct ExtractedDocument {
  DocumentTree tree;
  std::vector<Asset> assets;
};

// Removes pipe tables (>= 2 consecutive '|'-delimited lines) and figure
// markers ("[FIGURE]" or "![alt](target)" lines) from every section body.
ExtractedDocument extract_assets(DocumentTree tree);

// One chunk per section with a non-empty body, in document order, without
// any window splitting.
std::vector<Chunk> section_chunks(const DocumentTree& tree, const ChunkPolicy& policy);

// section_chunks with every chunk over policy.window replaced by its
// sliding-window sub-chunks.
std::vector<Chunk> make_chunks(const DocumentTree& tree, const ChunkPolicy& policy);

std::vector<Chunk> split_oversize(const Chunk& chunk, const ChunkPolicy& policy);

// Splits only the chunks that exceed the window; others pass through.
std::vector<Chunk> apply_window(const std::vector<Chunk>& chunks, const ChunkPolicy& policy);

// Drops chunks whose normalized body matches an earlier chunk's.
std::vector<Chunk> dedup_chunks(const std::vector<Chunk>& chunks);
std::string normalize_for_dedup(std::string_view body);

std::string render_header(const std::vector<std::string>& heading_chain);
// Header, blank line, body: the text that is embedded, scored and prompted.
std::string render_chunk(const Chunk& chunk);

std::string_view asset_kind_name(AssetKind kind);

void to_json(Json& j, const Chunk& c);
void from_json(const Json& j, Chunk& c);
void to_json(Json& j, const Asset& a);

std::vector<Chunk> read_chunks(const std::filesystem::path& path);
void write_chunks(const std::filesystem::path& path, const std::vector<Chunk>& chunks);

}  // namespace chunkpipe
