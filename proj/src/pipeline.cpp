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

#include "chunkpipe/pipeline.h"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <set>
#include <spdlog/spdlog.h>

#include "chunkpipe/analysis.h"
#include "chunkpipe/error.h"
#include "chunkpipe/hashing.h"
#include "chunkpipe/random.h"

namespace chunkpipe {
namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string crc_hex(std::string_view bytes) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", crc32(bytes));
  return buf;
}

std::filesystem::path require_artifact(const std::filesystem::path& path, std::string_view producer) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kIo, "missing artifact '" + path.string() + "'; run the '" + std::string(producer) +
                                    "' stage first");
  }
  return path;
}

std::vector<Chunk> chunks_for_hits(const ChunkStore& store, const std::vector<RetrievalHit>& hits) {
  std::vector<Chunk> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(store.at(h.chunk_id));
  return out;
}

Json hits_json(const std::vector<RetrievalHit>& hits) {
  Json out = Json::array();
  for (const auto& h : hits) out.push_back(Json{{"chunk_id", h.chunk_id}, {"score", h.score}, {"rank", h.rank}});
  return out;
}

}  // namespace

class Pipeline::StageRun {
 public:
  StageRun(const Pipeline& pipeline, std::string stage)
      : pipeline_(pipeline), stage_(std::move(stage)), dir_(pipeline.stage_dir(stage_)), started_(utc_now()) {
    spdlog::info("stage {}: start", stage_);
  }

  void write(const std::string& name, std::string_view contents) {
    write_text_file(dir_ / name, contents);
    artifacts_[name] = crc_hex(contents);
  }
  void write_json(const std::string& name, const Json& value) { write(name, value.dump(2) + "\n"); }
  void write_jsonl(const std::string& name, const std::vector<Json>& rows) { write(name, dump_jsonl(rows)); }

  Json& extra() { return extra_; }

  void finish() {
    Json manifest{{"stage", stage_},
                  {"config_fingerprint", pipeline_.fingerprint_},
                  {"seed", pipeline_.config_.seed},
                  {"prng", kPrngId},
                  {"artifacts", artifacts_}};
    if (!extra_.is_null()) manifest["details"] = extra_;
    write_text_file(dir_ / "manifest.json", manifest.dump(2) + "\n");
    write_text_file(dir_ / "timing.json", Json{{"started_at", started_}, {"finished_at", utc_now()}}.dump(2) + "\n");
    spdlog::info("stage {}: wrote {} artifact(s) to {}", stage_, artifacts_.size(), dir_.string());
  }

 private:
  const Pipeline& pipeline_;
  std::string stage_;
  std::filesystem::path dir_;
  std::string started_;
  std::map<std::string, std::string> artifacts_;
  Json extra_;
};

StructuredCorpus structure_corpus(const std::vector<std::filesystem::path>& files, const ChunkPolicy& policy) {
  policy.validate();
  StructuredCorpus out;
  std::set<std::string> doc_ids;
  std::vector<Chunk> sections;
  for (const auto& file : files) {
    const std::string doc_id = file.stem().string();
    if (!doc_ids.insert(doc_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "two corpus files share the doc id '" + doc_id + "'");
    }
    auto extracted = extract_assets(parse_document(read_text_file(file), doc_id));
    auto chunks = section_chunks(extracted.tree, policy);
    sections.insert(sections.end(), std::make_move_iterator(chunks.begin()), std::make_move_iterator(chunks.end()));
    out.assets.insert(out.assets.end(), extracted.assets.begin(), extracted.assets.end());
  }
  out.chunks = apply_window(dedup_chunks(sections), policy);
  return out;
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)), fingerprint_(config_.fingerprint()) {}

std::filesystem::path Pipeline::stage_dir(std::string_view stage) const { return config_.output_dir / stage; }

std::vector<McqaItem> Pipeline::load_items() const {
  if (config_.mcqa_path.empty()) throw Error(ErrorCode::kConfig, "missing required field 'qa.path'");
  if (!std::filesystem::exists(config_.mcqa_path)) {
    throw Error(ErrorCode::kIo, "MC-QA file '" + config_.mcqa_path.string() + "' does not exist");
  }
  auto items = load_mcqa(config_.mcqa_path);
  if (config_.balance) items = balance_answers(std::move(items), config_.seed);
  return items;
}

std::vector<Chunk> Pipeline::load_chunks() const {
  return read_chunks(require_artifact(stage_dir("structure") / "chunks.jsonl", "structure"));
}

VectorIndex Pipeline::load_vector_index() const {
  return load_index(require_artifact(stage_dir("index") / "index.jsonl", "index"));
}

std::unique_ptr<Embedder> Pipeline::query_embedder(const VectorIndex& index) const {
  auto embedder = make_embedder(config_.embedder);
  if (!index.metadata.embedder_id.empty() && embedder->id() != index.metadata.embedder_id) {
    throw Error(ErrorCode::kConfig, "index was built with embedder '" + index.metadata.embedder_id +
                                        "' but the config selects '" + embedder->id() + "'");
  }
  return embedder;
}

void Pipeline::structure() {
  StageRun run(*this, "structure");
  auto corpus = structure_corpus(corpus_files(config_), config_.chunk_policy);
  std::vector<Json> chunk_rows(corpus.chunks.begin(), corpus.chunks.end());
  std::vector<Json> asset_rows(corpus.assets.begin(), corpus.assets.end());
  run.write_jsonl("chunks.jsonl", chunk_rows);
  run.write_jsonl("assets.jsonl", asset_rows);
  run.extra() = Json{{"chunks", corpus.chunks.size()}, {"assets", corpus.assets.size()}};
  run.finish();
}

void Pipeline::embed() {
  StageRun run(*this, "embed");
  const auto chunks = load_chunks();
  auto embedder = make_embedder(config_.embedder);
  const auto vectors = embed_chunks(*embedder, chunks);
  std::vector<Json> rows;
  rows.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    Json values = Json::array();
    for (float v : vectors[i].values) values.push_back(v);
    rows.push_back(Json{{"chunk_id", chunks[i].chunk_id}, {"values", values}});
  }
  run.write_jsonl("vectors.jsonl", rows);
  run.extra() = Json{{"embedder_id", embedder->id()}, {"corpus_fingerprint", corpus_fingerprint(chunks)}};
  run.finish();
}

void Pipeline::index() {
  StageRun run(*this, "index");
  const auto chunks = load_chunks();
  const auto manifest = read_json(require_artifact(stage_dir("embed") / "manifest.json", "embed"));
  const auto rows = read_jsonl(require_artifact(stage_dir("embed") / "vectors.jsonl", "embed"));
  const std::string fingerprint = corpus_fingerprint(chunks);
  if (manifest.value("details", Json::object()).value("corpus_fingerprint", "") != fingerprint) {
    throw Error(ErrorCode::kSchemaError, "embeddings are stale: re-run 'embed' after 'structure'");
  }
  if (rows.size() != chunks.size()) throw Error(ErrorCode::kSchemaError, "vector count differs from chunk count");
  std::vector<EmbeddingVector> vectors;
  vectors.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].at("chunk_id").get<std::string>() != chunks[i].chunk_id) {
      throw Error(ErrorCode::kSchemaError, "vector order differs from chunk order at " + std::to_string(i));
    }
    vectors.push_back(EmbeddingVector{rows[i].at("values").get<std::vector<float>>()});
  }
  const auto idx = build_index(chunks, vectors,
                               IndexMetadata{manifest["details"].value("embedder_id", ""), fingerprint});
  run.write("index.jsonl", serialize_index(idx));
  run.extra() = Json{{"dim", idx.dim}, {"count", idx.size()}};
  run.finish();
}

void Pipeline::retrieve() {
  StageRun run(*this, "retrieve");
  const auto items = load_items();
  const auto idx = load_vector_index();
  auto embedder = query_embedder(idx);
  std::vector<Json> rows;
  rows.reserve(items.size());
  for (const auto& item : items) {
    const auto hits = search(idx, embedder->embed_one(item.question), config_.k);
    rows.push_back(Json{{"item_id", item.item_id}, {"hits", hits_json(hits)}});
  }
  run.write_jsonl("hits.jsonl", rows);
  run.extra() = Json{{"k", config_.k}};
  run.finish();
}

void Pipeline::rank_dataset() {
  StageRun run(*this, "rank-dataset");
  const auto items = load_items();
  const auto chunks = load_chunks();
  const ChunkStore store(chunks);
  const auto idx = load_vector_index();
  auto embedder = query_embedder(idx);
  auto labeler = make_scorer(config_.scorer);
  std::vector<RankQuery> queries;
  queries.reserve(items.size());
  for (const auto& item : items) {
    const auto hits = search(idx, embedder->embed_one(item.question), config_.k);
    queries.push_back({item.question, chunks_for_hits(store, hits)});
  }
  const auto triplets = build_rank_dataset(queries, *labeler, config_.jobs);
  std::vector<Json> rows;
  rows.reserve(triplets.size());
  for (const auto& t : triplets) rows.push_back(Json{{"chunk_id", t.chunk_id}, {"question", t.question}, {"rank", t.rank}});
  run.write_jsonl("triplets.jsonl", rows);
  run.extra() = Json{{"labeler", labeler->id()}, {"triplets", triplets.size()}};
  run.finish();
}

void Pipeline::recipe(RecipeTarget target) {
  StageRun run(*this, "recipe");
  run.write_json(std::string(recipe_target_name(target)) + ".json", recipe_json(training_recipe(target)));
  run.finish();
}

void Pipeline::splits() {
  StageRun run(*this, "splits");
  const auto items = load_items();
  std::vector<std::string> ids;
  ids.reserve(items.size());
  std::map<std::string, const McqaItem*> by_id;
  for (const auto& item : items) {
    ids.push_back(item.item_id);
    by_id[item.item_id] = &item;
  }
  const auto plan = make_splits(ids, config_.n_splits, config_.eval_size, config_.seed);
  run.write_json("plan.json", split_plan_json(plan));
  for (std::size_t s = 0; s < plan.splits.size(); ++s) {
    const std::string dir = "split-" + std::to_string(s) + "/";
    auto rows = [&](const std::vector<std::string>& subset) {
      std::vector<Json> out;
      out.reserve(subset.size());
      for (const auto& id : subset) out.push_back(mcqa_record(*by_id.at(id)));
      return out;
    };
    run.write_jsonl(dir + "train.jsonl", rows(plan.splits[s].train_ids));
    run.write_jsonl(dir + "eval.jsonl", rows(plan.splits[s].eval_ids));
  }
  run.finish();
}

EvalReport Pipeline::eval(std::optional<int> split) {
  StageRun run(*this, "eval");
  auto items = load_items();
  if (split) {
    const auto plan = split_plan_from_json(read_json(require_artifact(stage_dir("splits") / "plan.json", "splits")));
    if (*split < 0 || static_cast<std::size_t>(*split) >= plan.splits.size()) {
      throw Error(ErrorCode::kConfig, "split " + std::to_string(*split) + " not in plan of " +
                                          std::to_string(plan.splits.size()));
    }
    const auto& keep = plan.splits[static_cast<std::size_t>(*split)].eval_ids;
    const std::set<std::string> wanted(keep.begin(), keep.end());
    std::erase_if(items, [&](const McqaItem& it) { return !wanted.count(it.item_id); });
  }

  EvalConfig cfg;
  cfg.source = config_.context_source;
  cfg.symbols = config_.symbols;
  cfg.budget_tokens = config_.budget_tokens;
  cfg.k = config_.k;
  cfg.max_tokens = config_.max_tokens;
  cfg.jobs = config_.jobs;

  auto generator = make_generator(config_.generator, items, config_.symbols);
  std::vector<Chunk> chunks;
  std::optional<ChunkStore> store;
  VectorIndex idx;
  std::unique_ptr<Embedder> embedder;
  std::unique_ptr<RelevanceScorer> scorer;
  RetrievalContext retrieval;
  if (cfg.source != ContextSource::kNone) {
    chunks = load_chunks();
    store.emplace(chunks);
    idx = load_vector_index();
    embedder = query_embedder(idx);
    retrieval = {&idx, embedder.get(), &*store, nullptr};
    if (cfg.source == ContextSource::kRetrievedCrr) {
      scorer = make_scorer(config_.scorer);
      retrieval.scorer = scorer.get();
    }
  }

  const std::string name = split ? "report-split-" + std::to_string(*split) + ".json" : "report.json";
  auto with_provenance = [&](const EvalReport& report) {
    Json j = eval_report_json(report);
    j["pipeline"] = Json{{"config_fingerprint", fingerprint_},
                         {"seed", config_.seed},
                         {"prng", kPrngId},
                         {"split", split ? Json(*split) : Json(nullptr)}};
    return j;
  };
  try {
    EvalReport report = evaluate(*generator, items, cfg, retrieval);
    run.write_json(name, with_provenance(report));
    run.extra() = Json{{"accuracy", report.accuracy}, {"n_items", report.n_items}};
    run.finish();
    return report;
  } catch (const EvalAborted& aborted) {
    Json partial = with_provenance(aborted.partial());
    partial["aborted"] = aborted.what();
    run.write_json("partial-" + name, partial);
    run.finish();
    throw;
  }
}

void Pipeline::golden() {
  StageRun run(*this, "golden");
  const auto items = load_items();
  const auto chunks = load_chunks();
  const ChunkStore store(chunks);
  const auto idx = load_vector_index();
  auto embedder = query_embedder(idx);
  auto generator = make_generator(config_.generator, items, config_.symbols);
  const GoldenConfig gcfg{config_.symbols, config_.max_tokens, config_.golden_mode};

  std::vector<GoldenRecord> records;
  records.reserve(items.size());
  for (const auto& item : items) {
    const auto hits = search(idx, embedder->embed_one(item.question), config_.k);
    std::vector<std::string> ids;
    for (const auto& h : hits) ids.push_back(h.chunk_id);
    auto golden = hits.empty() ? std::vector<std::string>{}
                               : find_golden(*generator, item, chunks_for_hits(store, hits), gcfg);
    records.push_back(golden_record(item.item_id, std::move(golden), ids));
  }
  const auto hist = golden_histogram(records, config_.k);
  run.write("golden.csv", golden_csv(records));
  run.write_json("golden.json", golden_json(records));
  run.write("histogram.csv", histogram_csv(hist));
  run.write_json("histogram.json", histogram_json(hist));
  run.finish();
}

void Pipeline::sweep() {
  StageRun run(*this, "sweep");
  const auto items = load_items();
  const auto files = corpus_files(config_);
  auto generator = make_generator(config_.generator, items, config_.symbols);
  auto embedder = make_embedder(config_.embedder);
  auto scorer = make_scorer(config_.scorer);

  // State for the size currently being evaluated.
  std::vector<Chunk> chunks;
  std::optional<ChunkStore> store;
  VectorIndex idx;

  auto prepare = [&](int size) -> CountEvaluator {
    ChunkPolicy policy = config_.chunk_policy;
    policy.window = size;
    policy.stride = std::min(policy.stride, size);
    chunks = structure_corpus(files, policy).chunks;
    store.emplace(chunks);
    idx = build_index(chunks, embed_chunks(*embedder, chunks), {embedder->id(), corpus_fingerprint(chunks)});
    return [&](int count) {
      EvalConfig cfg;
      cfg.source = config_.context_source == ContextSource::kNone ? ContextSource::kRetrieved : config_.context_source;
      cfg.symbols = config_.symbols;
      cfg.budget_tokens = config_.budget_tokens;
      cfg.k = count;
      cfg.max_tokens = config_.max_tokens;
      cfg.jobs = config_.jobs;
      RetrievalContext retrieval{&idx, embedder.get(), &*store, scorer.get()};
      return evaluate(*generator, items, cfg, retrieval).accuracy;
    };
  };
  const auto rows = sweep_chunk_config(config_.sweep_sizes, config_.sweep_counts, prepare);
  run.write("sweep.csv", sweep_csv(rows));
  run.write_json("sweep.json", sweep_json(rows));
  run.finish();
}

void Pipeline::noise() {
  StageRun run(*this, "noise");
  const auto items = load_items();
  const auto chunks = load_chunks();
  const ChunkStore store(chunks);
  const auto idx = load_vector_index();
  auto embedder = query_embedder(idx);
  auto generator = make_generator(config_.generator, items, config_.symbols);
  const auto records = golden_from_json(read_json(require_artifact(stage_dir("golden") / "golden.json", "golden")));

  std::map<std::string, const GoldenRecord*> golden_by_item;
  for (const auto& r : records) golden_by_item[r.item_id] = &r;

  std::vector<NoiseItem> noise_items;
  for (const auto& item : items) {
    auto it = golden_by_item.find(item.item_id);
    if (it == golden_by_item.end() || it->second->golden_chunk_ids.empty()) continue;
    NoiseItem n{item, store.at(it->second->golden_chunk_ids.front()), {}};
    for (const auto& h : search(idx, embedder->embed_one(item.question), config_.k)) n.excluded_ids.push_back(h.chunk_id);
    noise_items.push_back(std::move(n));
  }
  const auto rows = noise_experiment(*generator, noise_items, chunks, config_.noise_counts, config_.seed,
                                     NoiseConfig{config_.symbols, config_.max_tokens});
  run.write("noise.csv", noise_csv(rows));
  run.write_json("noise.json", noise_json(rows));
  run.extra() = Json{{"items_with_golden", noise_items.size()}};
  run.finish();
}

}  // namespace chunkpipe
