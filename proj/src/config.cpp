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

#include "chunkpipe/config.h"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "chunkpipe/error.h"
#include "chunkpipe/hashing.h"
#include "chunkpipe/random.h"

namespace chunkpipe {
namespace {

// Typed access to one JSON object with the field path kept for messages.
class Fields {
 public:
  Fields(const Json* obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {}

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  bool has(const std::string& key) const { return obj_ && obj_->contains(key) && !(*obj_)[key].is_null(); }

  template <typename T>
  std::optional<T> get(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    const Json& v = (*obj_)[key];
    bool ok = true;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v.is_boolean();
    } else if constexpr (std::is_integral_v<T>) {
      ok = v.is_number_integer();
    } else if constexpr (std::is_same_v<T, std::string>) {
      ok = v.is_string();
    }
    if (ok) {
      try {
        return v.get<T>();
      } catch (const Json::exception&) {
      }
    }
    throw Error(ErrorCode::kConfig, "field '" + path(key) + "': wrong type (" + std::string(v.type_name()) + ")");
  }

  template <typename T>
  T value_or(const std::string& key, T fallback) const {
    auto v = get<T>(key);
    return v ? *v : fallback;
  }

  Fields sub(const std::string& key) const {
    if (!has(key)) return Fields(nullptr, path(key));
    const Json& v = (*obj_)[key];
    if (!v.is_object()) throw Error(ErrorCode::kConfig, "field '" + path(key) + "': expected object");
    return Fields(&v, path(key));
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    if (!obj_) return;
    for (const auto& [k, _] : obj_->items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        throw Error(ErrorCode::kConfig, "unknown field '" + path(k) + "'");
      }
    }
  }

 private:
  const Json* obj_;
  std::string prefix_;
};

EndpointConfig parse_endpoint(const Fields& f) {
  EndpointConfig e;
  auto url = f.get<std::string>("url");
  if (!url) throw Error(ErrorCode::kConfig, "missing required field '" + f.path("url") + "'");
  e.base_url = *url;
  e.timeout_ms = f.value_or<int>("timeout_ms", e.timeout_ms);
  e.retries = f.value_or<int>("retries", e.retries);
  e.auth_token = f.get<std::string>("auth_token");
  if (e.timeout_ms <= 0) throw Error(ErrorCode::kConfig, "field '" + f.path("timeout_ms") + "' must be > 0");
  if (e.retries < 0) throw Error(ErrorCode::kConfig, "field '" + f.path("retries") + "' must be >= 0");
  return e;
}

ClientKind parse_client_kind(const Fields& f) {
  const auto kind = f.value_or<std::string>("kind", "mock");
  if (kind == "mock") return ClientKind::kMock;
  if (kind == "endpoint") return ClientKind::kEndpoint;
  throw Error(ErrorCode::kConfig, "field '" + f.path("kind") + "': expected \"mock\" or \"endpoint\"");
}

Json endpoint_json(const EndpointConfig& e) {
  return Json{{"url", e.base_url}, {"timeout_ms", e.timeout_ms}, {"retries", e.retries}};
}

template <typename Parse>
auto parse_enum(const Fields& f, const std::string& key, Parse parse, decltype(parse("")) fallback) {
  auto v = f.get<std::string>(key);
  if (!v) return fallback;
  try {
    return parse(*v);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, "field '" + f.path(key) + "': " + e.what());
  }
}

std::vector<int> positive_list(const Fields& f, const std::string& key, std::vector<int> fallback, bool allow_zero) {
  auto v = f.get<std::vector<int>>(key);
  if (!v) return fallback;
  for (int x : *v) {
    if (x < 0 || (x == 0 && !allow_zero)) throw Error(ErrorCode::kConfig, "field '" + f.path(key) + "': bad entry " + std::to_string(x));
  }
  return *v;
}

}  // namespace

PipelineConfig parse_config(const Json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  PipelineConfig c;
  c.base_dir = base_dir;
  Fields root(&doc, "");
  root.allow({"output_dir", "seed", "jobs", "corpus", "embedder", "retrieval", "crr", "context", "qa", "splits",
              "generator", "analysis"});

  auto out = root.get<std::string>("output_dir");
  if (!out) throw Error(ErrorCode::kConfig, "missing required field 'output_dir'");
  c.output_dir = base_dir / *out;
  c.seed = root.value_or<std::uint64_t>("seed", 0);
  const int jobs = root.value_or<int>("jobs", 1);
  if (jobs < 1) throw Error(ErrorCode::kConfig, "field 'jobs' must be >= 1");
  c.jobs = static_cast<std::size_t>(jobs);

  const Fields corpus = root.sub("corpus");
  corpus.allow({"paths", "window", "stride", "tokenizer"});
  c.corpus_spec = corpus.value_or<std::vector<std::string>>("paths", {});
  for (const auto& p : c.corpus_spec) c.corpus_paths.push_back(base_dir / p);
  c.chunk_policy.window = corpus.value_or<int>("window", kDefaultWindow);
  c.chunk_policy.stride = corpus.value_or<int>("stride", std::min(kDefaultStride, c.chunk_policy.window));
  c.chunk_policy.tokenizer_id = corpus.value_or<std::string>("tokenizer", std::string(kDefaultTokenizerId));
  try {
    c.chunk_policy.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, "field 'corpus': " + std::string(e.what()));
  }

  const Fields embedder = root.sub("embedder");
  embedder.allow({"kind", "dim", "url", "timeout_ms", "retries", "auth_token"});
  c.embedder.kind = parse_client_kind(embedder);
  c.embedder.dim = embedder.value_or<int>("dim", kDefaultEmbedDim);
  if (c.embedder.dim < 1) throw Error(ErrorCode::kConfig, "field 'embedder.dim' must be >= 1");
  if (c.embedder.kind == ClientKind::kEndpoint) c.embedder.endpoint = parse_endpoint(embedder);

  const Fields retrieval = root.sub("retrieval");
  retrieval.allow({"k"});
  c.k = retrieval.value_or<int>("k", kDefaultRetrievalDepth);
  if (c.k < 1) throw Error(ErrorCode::kConfig, "field 'retrieval.k' must be >= 1");

  const Fields crr = root.sub("crr");
  crr.allow({"enabled", "scorer"});
  c.crr_enabled = crr.value_or<bool>("enabled", true);
  const Fields scorer = crr.sub("scorer");
  scorer.allow({"kind", "url", "timeout_ms", "retries", "auth_token"});
  c.scorer.kind = parse_client_kind(scorer);
  if (c.scorer.kind == ClientKind::kEndpoint) c.scorer.endpoint = parse_endpoint(scorer);

  const Fields context = root.sub("context");
  context.allow({"source", "budget"});
  c.context_source = parse_enum(context, "source", parse_context_source,
                                c.crr_enabled ? ContextSource::kRetrievedCrr : ContextSource::kRetrieved);
  c.budget_tokens = context.value_or<int>("budget", kDefaultContextBudget);
  if (c.budget_tokens < 1) throw Error(ErrorCode::kConfig, "field 'context.budget' must be >= 1");

  const Fields qa = root.sub("qa");
  qa.allow({"path", "symbols", "balance", "max_tokens"});
  c.mcqa_spec = qa.value_or<std::string>("path", "");
  if (!c.mcqa_spec.empty()) c.mcqa_path = base_dir / c.mcqa_spec;
  c.symbols = parse_enum(qa, "symbols", parse_symbol_set, SymbolSetId::kAlpha);
  c.balance = qa.value_or<bool>("balance", false);
  c.max_tokens = qa.value_or<int>("max_tokens", 1);
  if (c.max_tokens < 1) throw Error(ErrorCode::kConfig, "field 'qa.max_tokens' must be >= 1");

  const Fields splits = root.sub("splits");
  splits.allow({"n_splits", "eval_size"});
  c.n_splits = splits.value_or<int>("n_splits", kDefaultSplits);
  c.eval_size = splits.value_or<int>("eval_size", kDefaultEvalSize);
  if (c.n_splits < 1) throw Error(ErrorCode::kConfig, "field 'splits.n_splits' must be >= 1");
  if (c.eval_size < 1) throw Error(ErrorCode::kConfig, "field 'splits.eval_size' must be >= 1");

  const Fields gen = root.sub("generator");
  gen.allow({"kind", "rules", "default_reply", "url", "timeout_ms", "retries", "auth_token"});
  const auto kind = gen.value_or<std::string>("kind", "lexical");
  if (kind == "oracle") {
    c.generator.kind = GeneratorKind::kOracle;
  } else if (kind == "scripted") {
    c.generator.kind = GeneratorKind::kScripted;
    c.generator.default_reply = gen.value_or<std::string>("default_reply", "");
    if (gen.has("rules")) {
      const Json& rules = doc["generator"]["rules"];
      if (!rules.is_array()) throw Error(ErrorCode::kConfig, "field 'generator.rules': expected array");
      for (std::size_t i = 0; i < rules.size(); ++i) {
        Fields r(&rules[i], "generator.rules[" + std::to_string(i) + "]");
        auto contains = r.get<std::string>("contains");
        auto reply = r.get<std::string>("reply");
        if (!contains) throw Error(ErrorCode::kConfig, "missing required field '" + r.path("contains") + "'");
        if (!reply) throw Error(ErrorCode::kConfig, "missing required field '" + r.path("reply") + "'");
        c.generator.rules.push_back({*contains, *reply});
      }
    }
  } else if (kind == "lexical") {
    c.generator.kind = GeneratorKind::kLexical;
  } else if (kind == "endpoint") {
    c.generator.kind = GeneratorKind::kEndpoint;
    c.generator.endpoint = parse_endpoint(gen);
  } else {
    throw Error(ErrorCode::kConfig, "field 'generator.kind': expected oracle, scripted, lexical or endpoint");
  }

  const Fields analysis = root.sub("analysis");
  analysis.allow({"sizes", "counts", "n_random", "golden_mode"});
  c.sweep_sizes = positive_list(analysis, "sizes", c.sweep_sizes, false);
  c.sweep_counts = positive_list(analysis, "counts", c.sweep_counts, false);
  c.noise_counts = positive_list(analysis, "n_random", c.noise_counts, true);
  const auto mode = analysis.value_or<std::string>("golden_mode", "no-context");
  if (mode == "no-context") {
    c.golden_mode = GoldenMode::kNoContext;
  } else if (mode == "without-chunk") {
    c.golden_mode = GoldenMode::kWithoutChunk;
  } else {
    throw Error(ErrorCode::kConfig, "field 'analysis.golden_mode': expected no-context or without-chunk");
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": invalid JSON (" + e.what() + ")");
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return parse_config(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

Json PipelineConfig::effective() const {
  auto client = [](ClientKind kind, const EndpointConfig& e) {
    return kind == ClientKind::kMock ? Json{{"kind", "mock"}} : Json{{"kind", "endpoint"}, {"endpoint", endpoint_json(e)}};
  };
  Json embed = client(embedder.kind, embedder.endpoint);
  if (embedder.kind == ClientKind::kMock) embed["dim"] = embedder.dim;

  Json gen;
  switch (generator.kind) {
    case GeneratorKind::kOracle:
      gen = Json{{"kind", "oracle"}};
      break;
    case GeneratorKind::kScripted: {
      Json rules = Json::array();
      for (const auto& r : generator.rules) rules.push_back(Json{{"contains", r.contains}, {"reply", r.reply}});
      gen = Json{{"kind", "scripted"}, {"rules", rules}, {"default_reply", generator.default_reply}};
      break;
    }
    case GeneratorKind::kLexical:
      gen = Json{{"kind", "lexical"}};
      break;
    case GeneratorKind::kEndpoint:
      gen = Json{{"kind", "endpoint"}, {"endpoint", endpoint_json(generator.endpoint)}};
      break;
  }

  return Json{
      {"seed", seed},
      {"prng", kPrngId},
      {"corpus",
       {{"paths", corpus_spec},
        {"window", chunk_policy.window},
        {"stride", chunk_policy.stride},
        {"tokenizer", chunk_policy.tokenizer_id}}},
      {"embedder", embed},
      {"retrieval", {{"k", k}}},
      {"crr", {{"enabled", crr_enabled}, {"scorer", client(scorer.kind, scorer.endpoint)}}},
      {"context", {{"source", context_source_name(context_source)}, {"budget", budget_tokens}}},
      {"qa",
       {{"path", mcqa_spec},
        {"symbols", symbol_set_name(symbols)},
        {"balance", balance},
        {"max_tokens", max_tokens}}},
      {"splits", {{"n_splits", n_splits}, {"eval_size", eval_size}}},
      {"generator", gen},
      {"analysis",
       {{"sizes", sweep_sizes},
        {"counts", sweep_counts},
        {"n_random", noise_counts},
        {"golden_mode", golden_mode == GoldenMode::kNoContext ? "no-context" : "without-chunk"}}},
  };
}

std::string PipelineConfig::fingerprint() const { return hex64(fnv1a64(effective().dump())); }

void apply_env_overrides(PipelineConfig& config) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  if (auto url = env("CHUNKPIPE_GEN_URL")) {
    config.generator.kind = GeneratorKind::kEndpoint;
    config.generator.endpoint.base_url = *url;
  }
  if (auto url = env("CHUNKPIPE_EMBED_URL")) {
    config.embedder.kind = ClientKind::kEndpoint;
    config.embedder.endpoint.base_url = *url;
  }
  if (auto url = env("CHUNKPIPE_SCORE_URL")) {
    config.scorer.kind = ClientKind::kEndpoint;
    config.scorer.endpoint.base_url = *url;
  }
}

std::vector<std::filesystem::path> corpus_files(const PipelineConfig& config) {
  if (config.corpus_paths.empty()) throw Error(ErrorCode::kConfig, "missing required field 'corpus.paths'");
  std::vector<std::filesystem::path> files;
  for (const auto& p : config.corpus_paths) {
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto& entry : std::filesystem::directory_iterator(p)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".md" || ext == ".txt")) found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (std::filesystem::is_regular_file(p)) {
      files.push_back(p);
    } else {
      throw Error(ErrorCode::kIo, "corpus path '" + p.string() + "' does not exist");
    }
  }
  return files;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderSettings& s) {
  if (s.kind == ClientKind::kEndpoint) return std::make_unique<HttpEmbedder>(s.endpoint);
  return std::make_unique<HashEmbedder>(s.dim);
}

std::unique_ptr<RelevanceScorer> make_scorer(const ScorerSettings& s) {
  if (s.kind == ClientKind::kEndpoint) return std::make_unique<HttpScorer>(s.endpoint);
  return std::make_unique<RubricScorer>();
}

std::unique_ptr<ScriptedGenerator> make_oracle_generator(const std::vector<McqaItem>& items, SymbolSetId symbols) {
  const SymbolSet& set = SymbolSet::get(symbols);
  std::vector<ScriptRule> rules;
  rules.reserve(items.size());
  for (const auto& item : items) {
    rules.push_back({"Question: " + item.question + "\n",
                     std::string(set.symbols[static_cast<std::size_t>(item.answer_index)])});
  }
  return std::make_unique<ScriptedGenerator>(std::move(rules), "?");
}

std::unique_ptr<Generator> make_generator(const GeneratorSettings& s, const std::vector<McqaItem>& items,
                                          SymbolSetId symbols) {
  switch (s.kind) {
    case GeneratorKind::kOracle:
      return make_oracle_generator(items, symbols);
    case GeneratorKind::kScripted:
      return std::make_unique<ScriptedGenerator>(s.rules, s.default_reply);
    case GeneratorKind::kLexical:
      return std::make_unique<LexicalGenerator>();
    case GeneratorKind::kEndpoint:
      return std::make_unique<HttpGenerator>(s.endpoint);
  }
  throw Error(ErrorCode::kConfig, "unknown generator kind");
}

}  // namespace chunkpipe
