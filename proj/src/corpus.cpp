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

#include "chunkpipe/corpus.h"

#include <algorithm>
#include <cctype>
#include <regex>
#include <unordered_set>

#include "chunkpipe/error.h"

namespace chunkpipe {
namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = eol + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  std::size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

// Joins lines with '\n', dropping leading and trailing blank lines.
std::string join_body(const std::vector<std::string_view>& lines) {
  std::size_t b = 0, e = lines.size();
  while (b < e && is_blank(lines[b])) ++b;
  while (e > b && is_blank(lines[e - 1])) --e;
  std::string out;
  for (std::size_t i = b; i < e; ++i) {
    if (i > b) out += '\n';
    out += lines[i];
  }
  return out;
}

// Returns heading level 1..6, or 0 when the line is not a heading.
int heading_level(std::string_view line) {
  std::size_t n = 0;
  while (n < line.size() && line[n] == '#') ++n;
  if (n == 0 || n > 6 || n >= line.size() || line[n] != ' ') return 0;
  return static_cast<int>(n);
}

struct PendingSection {
  Section section;
  std::vector<std::string_view> body_lines;
};

bool is_table_line(std::string_view line) {
  std::string_view t = trim(line);
  return t.size() >= 2 && t.front() == '|' && t.back() == '|';
}

bool is_figure_marker(std::string_view line) {
  static const std::regex kImage(R"(!\[[^\]]*\]\([^)]*\))");
  std::string_view t = trim(line);
  if (t == "[FIGURE]") return true;
  return std::regex_match(t.begin(), t.end(), kImage);
}

std::string path_string(const std::vector<std::size_t>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(path[i] + 1);
  }
  return out;
}

struct AssetCollector {
  const std::string& doc_id;
  std::vector<Asset> assets;
  int tables = 0;
  int figures = 0;

  void add(AssetKind kind, const std::string& section_path, std::string raw) {
    int& counter = kind == AssetKind::kTable ? tables : figures;
    ++counter;
    assets.push_back(Asset{doc_id + ":" + std::string(asset_kind_name(kind)) + ":" +
                               std::to_string(counter),
                           kind, section_path, std::move(raw)});
  }
};

void extract_from(Section& section, std::vector<std::size_t>& path, AssetCollector& out) {
  const std::string section_path = path_string(path);
  auto lines = split_lines(section.body);
  std::vector<std::string_view> kept;
  for (std::size_t i = 0; i < lines.size();) {
    if (is_table_line(lines[i])) {
      std::size_t j = i;
      while (j < lines.size() && is_table_line(lines[j])) ++j;
      if (j - i >= 2) {
        std::string raw;
        for (std::size_t k = i; k < j; ++k) {
          if (k > i) raw += '\n';
          raw += lines[k];
        }
        out.add(AssetKind::kTable, section_path, std::move(raw));
      } else {
        kept.push_back(lines[i]);
      }
      i = j;
    } else if (is_figure_marker(lines[i])) {
      out.add(AssetKind::kFigure, section_path, std::string(trim(lines[i])));
      ++i;
    } else {
      kept.push_back(lines[i]);
      ++i;
    }
  }
  if (kept.size() != lines.size()) section.body = join_body(kept);
  for (std::size_t c = 0; c < section.children.size(); ++c) {
    path.push_back(c);
    extract_from(section.children[c], path, out);
    path.pop_back();
  }
}

void collect_chunks(const Section& section, std::vector<std::string>& chain,
                    std::vector<std::size_t>& path, const std::string& doc_id,
                    const Tokenizer& tok, std::vector<Chunk>& out) {
  chain.push_back(section.heading);
  std::size_t tokens = tok.count(section.body);
  if (tokens > 0) {
    Chunk c;
    c.chunk_id = doc_id + "#" + path_string(path) + "#0";
    c.doc_id = doc_id;
    c.heading_chain = chain;
    c.header = render_header(chain);
    c.body = section.body;
    c.token_count = tokens;
    out.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < section.children.size(); ++i) {
    path.push_back(i);
    collect_chunks(section.children[i], chain, path, doc_id, tok, out);
    path.pop_back();
  }
  chain.pop_back();
}

}  // namespace

void ChunkPolicy::validate() const {
  if (window <= 0) throw Error(ErrorCode::kInvalidArgument, "chunk window must be positive");
  if (stride <= 0 || stride > window)
    throw Error(ErrorCode::kInvalidArgument, "chunk stride must satisfy 0 < stride <= window");
  (void)tokenizer_for(tokenizer_id);
}

DocumentTree parse_document(std::string_view markup, std::string_view doc_id) {
  if (doc_id.empty()) throw Error(ErrorCode::kInvalidArgument, "doc_id must be non-empty");
  auto lines = split_lines(markup);

  DocumentTree tree;
  tree.doc_id = std::string(doc_id);
  tree.title = std::string(doc_id);

  std::size_t first = 0;
  while (first < lines.size() && is_blank(lines[first])) ++first;
  if (first == lines.size()) throw Error(ErrorCode::kEmptyDocument, "document '" + tree.doc_id + "' is empty");
  if (lines[first].starts_with("% ")) {
    std::string_view title = trim(lines[first].substr(2));
    if (!title.empty()) tree.title = std::string(title);
    ++first;
  }

  // Open sections from the root down; closed sections are moved into their
  // parent (or the root list) as soon as a heading at the same or a higher
  // level arrives.
  std::vector<PendingSection> open;
  std::vector<std::string_view> preamble;
  bool seen_heading = false;

  auto close_top = [&] {
    PendingSection done = std::move(open.back());
    open.pop_back();
    done.section.body = join_body(done.body_lines);
    if (open.empty()) {
      tree.sections.push_back(std::move(done.section));
    } else {
      open.back().section.children.push_back(std::move(done.section));
    }
  };

  for (std::size_t i = first; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    int level = heading_level(line);
    if (level == 0) {
      if (open.empty()) {
        preamble.push_back(line);
      } else {
        open.back().body_lines.push_back(line);
      }
      continue;
    }
    std::string_view heading = trim(line.substr(static_cast<std::size_t>(level)));
    if (heading.empty()) {
      throw Error(ErrorCode::kMalformedHeading,
                  tree.doc_id + ":" + std::to_string(i + 1) + ": heading has no text");
    }
    if (!seen_heading) {
      seen_heading = true;
      std::string pre = join_body(preamble);
      if (!pre.empty()) tree.sections.push_back(Section{std::string(kPreambleHeading), 1, pre, {}});
    }
    while (!open.empty() && open.back().section.level >= level) close_top();
    open.push_back(PendingSection{Section{std::string(heading), level, {}, {}}, {}});
  }
  while (!open.empty()) close_top();
  if (!seen_heading) {
    std::string pre = join_body(preamble);
    if (pre.empty()) throw Error(ErrorCode::kEmptyDocument, "document '" + tree.doc_id + "' is empty");
    tree.sections.push_back(Section{std::string(kPreambleHeading), 1, pre, {}});
  }
  return tree;
}

ExtractedDocument extract_assets(DocumentTree tree) {
  AssetCollector collector{tree.doc_id, {}};
  std::vector<std::size_t> path;
  for (std::size_t i = 0; i < tree.sections.size(); ++i) {
    path.push_back(i);
    extract_from(tree.sections[i], path, collector);
    path.pop_back();
  }
  return ExtractedDocument{std::move(tree), std::move(collector.assets)};
}

std::vector<Chunk> section_chunks(const DocumentTree& tree, const ChunkPolicy& policy) {
  policy.validate();
  const Tokenizer& tok = tokenizer_for(policy.tokenizer_id);
  std::vector<Chunk> out;
  std::vector<std::string> chain{tree.title};
  std::vector<std::size_t> path;
  for (std::size_t i = 0; i < tree.sections.size(); ++i) {
    path.push_back(i);
    collect_chunks(tree.sections[i], chain, path, tree.doc_id, tok, out);
    path.pop_back();
  }
  return out;
}

std::vector<Chunk> make_chunks(const DocumentTree& tree, const ChunkPolicy& policy) {
  return apply_window(section_chunks(tree, policy), policy);
}

std::vector<Chunk> split_oversize(const Chunk& chunk, const ChunkPolicy& policy) {
  policy.validate();
  const Tokenizer& tok = tokenizer_for(policy.tokenizer_id);
  const auto spans = tok.spans(chunk.body);
  const std::size_t n = spans.size();
  const auto window = static_cast<std::size_t>(policy.window);
  const auto stride = static_cast<std::size_t>(policy.stride);
  if (n <= window) {
    throw Error(ErrorCode::kInvalidArgument, "chunk '" + chunk.chunk_id + "' has " + std::to_string(n) +
                                                 " tokens, not above window " + std::to_string(window));
  }

  const auto cut = chunk.chunk_id.rfind('#');
  const std::string base = cut == std::string::npos ? chunk.chunk_id : chunk.chunk_id.substr(0, cut);

  std::vector<Chunk> out;
  std::size_t prev_end = 0;
  for (std::size_t start = 0; start < n; start += stride) {
    const std::size_t end = std::min(start + window, n);
    // Windows start in increasing order, so containment reduces to this.
    if (!out.empty() && end <= prev_end) continue;
    prev_end = end;

    Chunk sub;
    sub.seq = static_cast<int>(out.size());
    sub.chunk_id = base + "#" + std::to_string(sub.seq);
    sub.doc_id = chunk.doc_id;
    sub.heading_chain = chunk.heading_chain;
    sub.header = chunk.header;
    sub.body = chunk.body.substr(spans[start].begin, spans[end - 1].end - spans[start].begin);
    sub.token_count = end - start;
    sub.parent_id = chunk.chunk_id;
    out.push_back(std::move(sub));
  }
  return out;
}

std::vector<Chunk> apply_window(const std::vector<Chunk>& chunks, const ChunkPolicy& policy) {
  std::vector<Chunk> out;
  out.reserve(chunks.size());
  for (const auto& c : chunks) {
    if (c.token_count > static_cast<std::size_t>(policy.window)) {
      auto parts = split_oversize(c, policy);
      std::move(parts.begin(), parts.end(), std::back_inserter(out));
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string normalize_for_dedup(std::string_view body) {
  std::string out;
  out.reserve(body.size());
  bool pending_space = false;
  for (char ch : body) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

std::vector<Chunk> dedup_chunks(const std::vector<Chunk>& chunks) {
  std::unordered_set<std::string> seen;
  std::vector<Chunk> out;
  for (const auto& c : chunks) {
    if (seen.insert(normalize_for_dedup(c.body)).second) out.push_back(c);
  }
  return out;
}

std::string render_header(const std::vector<std::string>& heading_chain) {
  std::string out;
  for (std::size_t i = 0; i < heading_chain.size(); ++i) {
    if (i) out += " > ";
    out += heading_chain[i];
  }
  return out;
}

std::string render_chunk(const Chunk& chunk) { return chunk.header + "\n\n" + chunk.body; }

std::string_view asset_kind_name(AssetKind kind) {
  return kind == AssetKind::kTable ? "table" : "figure";
}

void to_json(Json& j, const Chunk& c) {
  j = Json{{"chunk_id", c.chunk_id},
           {"doc_id", c.doc_id},
           {"heading_chain", c.heading_chain},
           {"header", c.header},
           {"body", c.body},
           {"token_count", c.token_count},
           {"parent_id", c.parent_id ? Json(*c.parent_id) : Json(nullptr)},
           {"seq", c.seq}};
}

void from_json(const Json& j, Chunk& c) {
  try {
    j.at("chunk_id").get_to(c.chunk_id);
    j.at("doc_id").get_to(c.doc_id);
    j.at("heading_chain").get_to(c.heading_chain);
    j.at("header").get_to(c.header);
    j.at("body").get_to(c.body);
    j.at("token_count").get_to(c.token_count);
    const auto& parent = j.at("parent_id");
    c.parent_id = parent.is_null() ? std::nullopt : std::optional<std::string>(parent.get<std::string>());
    j.at("seq").get_to(c.seq);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("bad chunk record: ") + e.what());
  }
}

void to_json(Json& j, const Asset& a) {
  j = Json{{"asset_id", a.asset_id},
           {"kind", asset_kind_name(a.kind)},
           {"source_section", a.source_section},
           {"raw", a.raw}};
}

std::vector<Chunk> read_chunks(const std::filesystem::path& path) {
  std::vector<Chunk> out;
  for (const auto& row : read_jsonl(path)) out.push_back(row.get<Chunk>());
  return out;
}

void write_chunks(const std::filesystem::path& path, const std::vector<Chunk>& chunks) {
  std::vector<Json> rows(chunks.begin(), chunks.end());
  write_jsonl(path, rows);
}

}  // namespace chunkpipe
