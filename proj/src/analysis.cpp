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

#include "chunkpipe/analysis.h"

#include <algorithm>
#include <cstdio>
#include <unordered_set>

#include "chunkpipe/error.h"
#include "chunkpipe/random.h"

namespace chunkpipe {
namespace {

bool answers_correctly(Generator& generator, const McqaItem& item, std::string_view context,
                       const SymbolSet& symbols, int max_tokens) {
  return answer_item(generator, item, context, symbols, max_tokens).correct;
}

std::string join_rendered(const std::vector<const Chunk*>& chunks) {
  std::string out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (i) out += "\n\n";
    out += render_chunk(*chunks[i]);
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_accuracy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ';';
    out += ids[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> find_golden(Generator& generator, const McqaItem& item, const std::vector<Chunk>& candidates,
                                     const GoldenConfig& config) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, item.item_id + ": no candidate chunks");
  const SymbolSet& symbols = SymbolSet::get(config.symbols);

  std::optional<bool> correct_without;
  if (config.mode == GoldenMode::kNoContext) {
    correct_without = answers_correctly(generator, item, "", symbols, config.max_tokens);
  }

  std::vector<std::string> golden;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const bool alone = answers_correctly(generator, item, render_chunk(candidates[i]), symbols, config.max_tokens);
    bool without = false;
    if (correct_without) {
      without = *correct_without;
    } else {
      std::vector<const Chunk*> others;
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (j != i) others.push_back(&candidates[j]);
      }
      without = answers_correctly(generator, item, join_rendered(others), symbols, config.max_tokens);
    }
    if (alone && !without) golden.push_back(candidates[i].chunk_id);
  }
  return golden;
}

GoldenRecord golden_record(std::string item_id, std::vector<std::string> golden_ids,
                           const std::vector<std::string>& retrieved_ids) {
  GoldenRecord r{std::move(item_id), std::move(golden_ids), std::nullopt};
  for (std::size_t i = 0; i < retrieved_ids.size(); ++i) {
    if (std::find(r.golden_chunk_ids.begin(), r.golden_chunk_ids.end(), retrieved_ids[i]) !=
        r.golden_chunk_ids.end()) {
      r.position_in_retrieval = static_cast<int>(i + 1);
      break;
    }
  }
  return r;
}

std::size_t GoldenHistogram::total() const {
  std::size_t n = absent;
  for (auto c : counts) n += c;
  return n;
}

GoldenHistogram golden_histogram(const std::vector<GoldenRecord>& records, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "histogram k must be >= 1");
  GoldenHistogram h;
  h.counts.assign(static_cast<std::size_t>(k), 0);
  for (const auto& r : records) {
    if (!r.position_in_retrieval) {
      ++h.absent;
      continue;
    }
    const int p = *r.position_in_retrieval;
    if (p < 1 || p > k) {
      throw Error(ErrorCode::kInvalidArgument,
                  r.item_id + ": golden position " + std::to_string(p) + " outside 1.." + std::to_string(k));
    }
    ++h.counts[static_cast<std::size_t>(p - 1)];
  }
  return h;
}

std::vector<SweepRow> sweep_chunk_config(const std::vector<int>& sizes, const std::vector<int>& counts,
                                         const SizePreparer& prepare) {
  std::vector<SweepRow> rows;
  rows.reserve(sizes.size() * counts.size());
  for (int size : sizes) {
    CountEvaluator eval = prepare(size);
    for (int count : counts) rows.push_back({size, count, eval(count)});
  }
  return rows;
}

std::vector<const Chunk*> noise_context(const NoiseItem& item, const std::vector<Chunk>& pool, int n_random,
                                        std::uint64_t seed, std::size_t item_index) {
  if (n_random < 0) throw Error(ErrorCode::kInvalidArgument, "negative distractor count");
  std::unordered_set<std::string> excluded(item.excluded_ids.begin(), item.excluded_ids.end());
  excluded.insert(item.golden.chunk_id);
  std::vector<const Chunk*> candidates;
  for (const auto& c : pool) {
    if (!excluded.count(c.chunk_id)) candidates.push_back(&c);
  }
  const auto n = static_cast<std::size_t>(n_random);
  if (candidates.size() < n) {
    throw Error(ErrorCode::kInvalidArgument, item.item.item_id + ": only " + std::to_string(candidates.size()) +
                                                 " distractors available, " + std::to_string(n) + " requested");
  }
  Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(n_random)), item_index));
  for (std::size_t i = 0; i < n; ++i) std::swap(candidates[i], candidates[i + rng.below(candidates.size() - i)]);
  std::vector<const Chunk*> context(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n));
  const auto golden_at = static_cast<std::ptrdiff_t>(rng.below(n + 1));
  context.insert(context.begin() + golden_at, &item.golden);
  return context;
}

std::vector<NoiseRow> noise_experiment(Generator& generator, const std::vector<NoiseItem>& items,
                                       const std::vector<Chunk>& pool, const std::vector<int>& n_random,
                                       std::uint64_t seed, const NoiseConfig& config) {
  if (items.empty()) throw Error(ErrorCode::kEmptyEvalSet, "no items with a golden chunk");
  const SymbolSet& symbols = SymbolSet::get(config.symbols);
  std::vector<NoiseRow> rows;
  for (int n : n_random) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto ctx = noise_context(items[i], pool, n, seed, i);
      if (answers_correctly(generator, items[i].item, join_rendered(ctx), symbols, config.max_tokens)) ++correct;
    }
    rows.push_back({n, static_cast<double>(correct) / static_cast<double>(items.size()), items.size()});
  }
  return rows;
}

std::string golden_csv(const std::vector<GoldenRecord>& records) {
  std::string out = "item_id,golden_ids,position\n";
  for (const auto& r : records) {
    out += csv_field(r.item_id) + "," + csv_field(join_ids(r.golden_chunk_ids)) + ",";
    if (r.position_in_retrieval) out += std::to_string(*r.position_in_retrieval);
    out += "\n";
  }
  return out;
}

std::string histogram_csv(const GoldenHistogram& h) {
  std::string out = "position,count\n";
  for (std::size_t p = 0; p < h.counts.size(); ++p) out += std::to_string(p + 1) + "," + std::to_string(h.counts[p]) + "\n";
  out += "absent," + std::to_string(h.absent) + "\n";
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "chunk_size,n_chunks,accuracy\n";
  for (const auto& r : rows) {
    out += std::to_string(r.chunk_size) + "," + std::to_string(r.n_chunks) + "," + format_accuracy(r.accuracy) + "\n";
  }
  return out;
}

std::string noise_csv(const std::vector<NoiseRow>& rows) {
  std::string out = "n_random,accuracy\n";
  for (const auto& r : rows) out += std::to_string(r.n_random) + "," + format_accuracy(r.accuracy) + "\n";
  return out;
}

Json golden_json(const std::vector<GoldenRecord>& records) {
  Json out = Json::array();
  for (const auto& r : records) {
    out.push_back(Json{{"item_id", r.item_id},
                       {"golden_ids", r.golden_chunk_ids},
                       {"position", r.position_in_retrieval ? Json(*r.position_in_retrieval) : Json(nullptr)}});
  }
  return out;
}

std::vector<GoldenRecord> golden_from_json(const Json& j) {
  std::vector<GoldenRecord> out;
  try {
    for (const auto& row : j) {
      GoldenRecord r;
      r.item_id = row.at("item_id").get<std::string>();
      r.golden_chunk_ids = row.at("golden_ids").get<std::vector<std::string>>();
      if (!row.at("position").is_null()) r.position_in_retrieval = row["position"].get<int>();
      out.push_back(std::move(r));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("bad golden report: ") + e.what());
  }
  return out;
}

Json histogram_json(const GoldenHistogram& h) {
  Json positions = Json::array();
  for (std::size_t p = 0; p < h.counts.size(); ++p) positions.push_back(Json{{"position", p + 1}, {"count", h.counts[p]}});
  return Json{{"positions", positions}, {"absent", h.absent}, {"total", h.total()}};
}

Json sweep_json(const std::vector<SweepRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(Json{{"chunk_size", r.chunk_size}, {"n_chunks", r.n_chunks}, {"accuracy", r.accuracy}});
  return out;
}

Json noise_json(const std::vector<NoiseRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(Json{{"n_random", r.n_random}, {"accuracy", r.accuracy}, {"n_items", r.n_items}});
  return out;
}

}  // namespace chunkpipe
