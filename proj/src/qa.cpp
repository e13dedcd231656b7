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

#include "chunkpipe/qa.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <unordered_set>

#include "chunkpipe/hashing.h"
#include "chunkpipe/parallel.h"
#include "chunkpipe/random.h"

namespace chunkpipe {
namespace {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  std::size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::string option_key(std::size_t i) { return "option " + std::to_string(i + 1); }

bool is_endpoint_failure(ErrorCode code) {
  return code == ErrorCode::kModelUnavailable || code == ErrorCode::kTimeout ||
         code == ErrorCode::kScorerUnavailable;
}

}  // namespace

void McqaItem::validate() const {
  if (options.size() < kMinOptions || options.size() > kMaxOptions) {
    throw Error(ErrorCode::kSchemaError, item_id + ": " + std::to_string(options.size()) + " options, need 2..5");
  }
  std::unordered_set<std::string> seen;
  for (const auto& o : options) {
    if (trim(o).empty()) throw Error(ErrorCode::kSchemaError, item_id + ": empty option");
    if (!seen.insert(o).second) throw Error(ErrorCode::kSchemaError, item_id + ": repeated option '" + o + "'");
  }
  if (answer_index < 0 || static_cast<std::size_t>(answer_index) >= options.size()) {
    throw Error(ErrorCode::kAnswerOutOfRange, item_id + ": answer index " + std::to_string(answer_index));
  }
}

const SymbolSet& SymbolSet::numeric() {
  static const SymbolSet s{SymbolSetId::kNumeric, {"1", "2", "3", "4", "5"}, "number"};
  return s;
}

const SymbolSet& SymbolSet::alpha() {
  static const SymbolSet s{SymbolSetId::kAlpha, {"A", "B", "C", "D", "E"}, "letter"};
  return s;
}

const SymbolSet& SymbolSet::get(SymbolSetId id) { return id == SymbolSetId::kAlpha ? alpha() : numeric(); }

SymbolSetId parse_symbol_set(std::string_view name) {
  if (name == "numeric") return SymbolSetId::kNumeric;
  if (name == "alpha") return SymbolSetId::kAlpha;
  throw Error(ErrorCode::kInvalidArgument, "unknown symbol set '" + std::string(name) + "'");
}

std::string_view symbol_set_name(SymbolSetId id) { return id == SymbolSetId::kAlpha ? "alpha" : "numeric"; }

std::vector<McqaItem> parse_mcqa(std::string_view jsonl, const std::string& source) {
  static const std::regex kAnswer(R"(^option (\d+):\s*([\s\S]*)$)");
  std::vector<McqaItem> items;
  std::size_t record = 0;
  for (const auto& row : parse_jsonl(jsonl, source)) {
    ++record;
    const std::string where = source + " record " + std::to_string(record);
    McqaItem item;
    std::string answer;
    try {
      if (row.contains("id")) {
        item.item_id = row["id"].is_string() ? row["id"].get<std::string>() : row["id"].dump();
      } else {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "q%05zu", record);
        item.item_id = buf;
      }
      item.question = row.at("question").get<std::string>();
      const auto& opts = row.at("options");
      if (!opts.is_object()) throw Error(ErrorCode::kSchemaError, where + ": 'options' must be an object");
      for (std::size_t i = 0; i < kMaxOptions; ++i) {
        auto it = opts.find(option_key(i));
        if (it == opts.end()) break;
        item.options.push_back(it->get<std::string>());
      }
      if (item.options.size() != opts.size()) {
        throw Error(ErrorCode::kSchemaError, where + ": option keys must be 'option 1'..'option N' without gaps");
      }
      answer = row.at("answer").get<std::string>();
      if (row.contains("explanation") && !row["explanation"].is_null())
        item.explanation = row["explanation"].get<std::string>();
      if (row.contains("category") && !row["category"].is_null())
        item.category = row["category"].get<std::string>();
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kSchemaError, where + ": " + e.what());
    }
    if (trim(item.question).empty()) throw Error(ErrorCode::kSchemaError, where + ": empty question");

    std::smatch m;
    if (!std::regex_match(answer, m, kAnswer)) {
      throw Error(ErrorCode::kSchemaError, where + ": answer '" + answer + "' is not 'option N: <text>'");
    }
    const std::size_t n = std::stoul(m[1].str());
    if (n < 1 || n > item.options.size()) {
      throw Error(ErrorCode::kAnswerOutOfRange,
                  where + ": answer option " + m[1].str() + " of " + std::to_string(item.options.size()));
    }
    if (trim(m[2].str()) != trim(item.options[n - 1])) {
      throw Error(ErrorCode::kAnswerMismatch,
                  where + ": answer text '" + m[2].str() + "' differs from option " + m[1].str());
    }
    item.answer_index = static_cast<int>(n - 1);
    item.validate();
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<McqaItem> load_mcqa(const std::filesystem::path& path) {
  return parse_mcqa(read_text_file(path), path.string());
}

Json mcqa_record(const McqaItem& item) {
  Json options = Json::object();
  for (std::size_t i = 0; i < item.options.size(); ++i) options[option_key(i)] = item.options[i];
  Json j{{"id", item.item_id},
         {"question", item.question},
         {"options", options},
         {"answer", option_key(static_cast<std::size_t>(item.answer_index)) + ": " +
                        item.options[static_cast<std::size_t>(item.answer_index)]}};
  if (item.explanation) j["explanation"] = *item.explanation;
  if (item.category) j["category"] = *item.category;
  return j;
}

void save_mcqa(const std::filesystem::path& path, const std::vector<McqaItem>& items) {
  std::vector<Json> rows;
  rows.reserve(items.size());
  for (const auto& it : items) rows.push_back(mcqa_record(it));
  write_jsonl(path, rows);
}

std::vector<McqaItem> balance_answers(std::vector<McqaItem> items, std::uint64_t seed) {
  Rng rng(seed);
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < items.size(); ++i) groups[items[i].options.size()].push_back(i);

  std::vector<std::size_t> target(items.size(), 0);
  for (auto& [n_options, members] : groups) {
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t j = 0; j < members.size(); ++j) target[members[j]] = j % n_options;
  }

  for (std::size_t i = 0; i < items.size(); ++i) {
    McqaItem& item = items[i];
    const auto answer = static_cast<std::size_t>(item.answer_index);
    std::string correct = item.options[answer];
    std::vector<std::string> distractors;
    for (std::size_t o = 0; o < item.options.size(); ++o) {
      if (o != answer) distractors.push_back(item.options[o]);
    }
    rng.shuffle(std::span<std::string>(distractors));
    std::vector<std::string> reordered;
    reordered.reserve(item.options.size());
    auto next = distractors.begin();
    for (std::size_t o = 0; o < item.options.size(); ++o) {
      reordered.push_back(o == target[i] ? correct : std::move(*next++));
    }
    item.options = std::move(reordered);
    item.answer_index = static_cast<int>(target[i]);
  }
  return items;
}

SplitPlan make_splits(const std::vector<std::string>& item_ids, int n_splits, int eval_size, std::uint64_t seed) {
  if (n_splits < 1) throw Error(ErrorCode::kInvalidArgument, "n_splits must be >= 1");
  if (eval_size < 1) throw Error(ErrorCode::kInvalidArgument, "eval_size must be >= 1");
  if (static_cast<std::size_t>(eval_size) >= item_ids.size()) {
    throw Error(ErrorCode::kEvalTooLarge, "eval_size " + std::to_string(eval_size) + " leaves no training items out of " +
                                              std::to_string(item_ids.size()));
  }
  std::unordered_set<std::string> unique(item_ids.begin(), item_ids.end());
  if (unique.size() != item_ids.size()) throw Error(ErrorCode::kInvalidArgument, "duplicate item ids");

  SplitPlan plan{seed, n_splits, eval_size, {}};
  const std::size_t n = item_ids.size();
  for (int s = 0; s < n_splits; ++s) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    // Partial Fisher-Yates: the first eval_size slots are the sample.
    for (std::size_t i = 0; i < static_cast<std::size_t>(eval_size); ++i) {
      std::swap(order[i], order[i + rng.below(n - i)]);
    }
    std::vector<bool> in_eval(n, false);
    for (std::size_t i = 0; i < static_cast<std::size_t>(eval_size); ++i) in_eval[order[i]] = true;
    Split split;
    for (std::size_t i = 0; i < n; ++i) (in_eval[i] ? split.eval_ids : split.train_ids).push_back(item_ids[i]);
    plan.splits.push_back(std::move(split));
  }
  return plan;
}

Json split_plan_json(const SplitPlan& plan) {
  Json splits = Json::array();
  for (const auto& s : plan.splits) splits.push_back(Json{{"train_ids", s.train_ids}, {"eval_ids", s.eval_ids}});
  return Json{{"seed", plan.seed},
              {"prng", kPrngId},
              {"n_splits", plan.n_splits},
              {"eval_size", plan.eval_size},
              {"splits", splits}};
}

SplitPlan split_plan_from_json(const Json& j) {
  try {
    SplitPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.n_splits = j.at("n_splits").get<int>();
    plan.eval_size = j.at("eval_size").get<int>();
    for (const auto& s : j.at("splits")) {
      plan.splits.push_back(Split{s.at("train_ids").get<std::vector<std::string>>(),
                                  s.at("eval_ids").get<std::vector<std::string>>()});
    }
    return plan;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("bad split plan: ") + e.what());
  }
}

std::string build_prompt(const McqaItem& item, std::string_view context, const SymbolSet& symbols) {
  if (item.options.size() > symbols.symbols.size()) {
    throw Error(ErrorCode::kTooManyOptions,
                item.item_id + ": " + std::to_string(item.options.size()) + " options exceed the symbol set");
  }
  std::string p;
  if (!context.empty()) {
    p += "Context:\n";
    p += context;
    p += "\n\n";
  }
  p += "Question: ";
  p += item.question;
  p += "\n\nOptions:\n";
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    p += symbols.symbols[i];
    p += ") ";
    p += item.options[i];
    p += '\n';
  }
  p += "\nAnswer with only the ";
  p += symbols.word;
  p += " of the correct option.\nAnswer:";
  return p;
}

int parse_answer(std::string_view raw, const SymbolSet& symbols, std::size_t n_options) {
  std::size_t b = 0;
  while (b < raw.size() && (std::isspace(static_cast<unsigned char>(raw[b])) ||
                            std::ispunct(static_cast<unsigned char>(raw[b])))) {
    ++b;
  }
  const std::string_view rest = trim(raw.substr(b));
  const auto spans = default_tokenizer().spans(rest);
  if (spans.empty()) throw Error(ErrorCode::kUnparseable, "empty answer");
  const std::string_view first = rest.substr(spans[0].begin, spans[0].end - spans[0].begin);
  for (std::size_t i = 0; i < symbols.symbols.size(); ++i) {
    if (first != symbols.symbols[i]) continue;
    if (i >= n_options) {
      throw Error(ErrorCode::kOutOfRange,
                  "symbol '" + std::string(first) + "' beyond " + std::to_string(n_options) + " options");
    }
    return static_cast<int>(i);
  }
  throw Error(ErrorCode::kUnparseable, "'" + std::string(first) + "' is not an option symbol");
}

ContextSource parse_context_source(std::string_view name) {
  if (name == "none") return ContextSource::kNone;
  if (name == "retrieved") return ContextSource::kRetrieved;
  if (name == "retrieved+crr" || name == "crr") return ContextSource::kRetrievedCrr;
  throw Error(ErrorCode::kInvalidArgument, "unknown context source '" + std::string(name) + "'");
}

std::string_view context_source_name(ContextSource source) {
  switch (source) {
    case ContextSource::kNone:
      return "none";
    case ContextSource::kRetrieved:
      return "retrieved";
    case ContextSource::kRetrievedCrr:
      return "retrieved+crr";
  }
  return "none";
}

PreparedContext prepare_context(std::string_view question, ContextSource source, int k, int context_budget,
                                const RetrievalContext& retrieval) {
  PreparedContext out;
  if (source == ContextSource::kNone || context_budget <= 0) return out;
  if (!retrieval.index || !retrieval.embedder || !retrieval.chunks) {
    throw Error(ErrorCode::kInvalidArgument, "retrieved context requested without an index");
  }
  out.hits = search(*retrieval.index, retrieval.embedder->embed_one(std::string(question)), k);
  if (out.hits.empty()) return out;

  ContextSelection selection;
  if (source == ContextSource::kRetrievedCrr) {
    if (!retrieval.scorer) throw Error(ErrorCode::kInvalidArgument, "CRR filtering requested without a scorer");
    std::vector<ScoredHit> scored;
    scored.reserve(out.hits.size());
    for (const auto& h : out.hits) {
      scored.push_back({h, score_chunk(*retrieval.scorer, question, retrieval.chunks->at(h.chunk_id))});
    }
    selection = filter_and_order(scored);
  } else {
    for (const auto& h : out.hits) selection.chunk_ids.push_back(h.chunk_id);
  }
  out.used_fallback = selection.used_fallback;
  out.block = assemble_context(selection, *retrieval.chunks, context_budget);
  return out;
}

int context_budget_for(const McqaItem& item, const SymbolSet& symbols, int total_budget, int max_tokens) {
  // "Context" and ":" of the context label.
  constexpr int kLabelTokens = 2;
  const auto bare = static_cast<int>(default_tokenizer().count(build_prompt(item, "", symbols)));
  return std::max(0, total_budget - bare - kLabelTokens - max_tokens);
}

ItemTrace answer_item(Generator& generator, const McqaItem& item, std::string_view context,
                      const SymbolSet& symbols, int max_tokens) {
  ItemTrace t;
  t.item_id = item.item_id;
  t.gold_index = item.answer_index;
  t.prompt = build_prompt(item, context, symbols);
  t.raw_output = generator.generate(t.prompt, max_tokens);
  try {
    t.parsed_index = parse_answer(t.raw_output, symbols, item.options.size());
    t.correct = *t.parsed_index == item.answer_index;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUnparseable && e.code() != ErrorCode::kOutOfRange) throw;
    t.parse_error = e.what();
  }
  return t;
}

std::string eval_fingerprint(const EvalConfig& config, const Generator& generator, const RetrievalContext& retrieval) {
  Json j{{"source", context_source_name(config.source)},
         {"symbols", symbol_set_name(config.symbols)},
         {"budget_tokens", config.budget_tokens},
         {"k", config.k},
         {"max_tokens", config.max_tokens},
         {"generator", generator.id()}};
  if (config.source != ContextSource::kNone) {
    if (retrieval.embedder) j["embedder"] = retrieval.embedder->id();
    if (retrieval.index) j["index"] = retrieval.index->metadata.fingerprint;
    if (config.source == ContextSource::kRetrievedCrr && retrieval.scorer) j["scorer"] = retrieval.scorer->id();
  }
  return hex64(fnv1a64(j.dump()));
}

namespace {

EvalReport make_report(std::vector<ItemTrace> trace, std::string fingerprint) {
  std::sort(trace.begin(), trace.end(), [](const ItemTrace& a, const ItemTrace& b) { return a.item_id < b.item_id; });
  EvalReport r;
  r.n_items = trace.size();
  r.n_correct = static_cast<std::size_t>(std::count_if(trace.begin(), trace.end(), [](const ItemTrace& t) { return t.correct; }));
  r.accuracy = r.n_items ? static_cast<double>(r.n_correct) / static_cast<double>(r.n_items) : 0.0;
  r.trace = std::move(trace);
  r.config_fingerprint = std::move(fingerprint);
  return r;
}

}  // namespace

EvalReport evaluate(Generator& generator, const std::vector<McqaItem>& items, const EvalConfig& config,
                    const RetrievalContext& retrieval) {
  if (items.empty()) throw Error(ErrorCode::kEmptyEvalSet, "no items to evaluate");
  const SymbolSet& symbols = SymbolSet::get(config.symbols);
  const std::string fingerprint = eval_fingerprint(config, generator, retrieval);

  std::vector<std::optional<ItemTrace>> slots(items.size());
  try {
    parallel_for(items.size(), config.jobs, [&](std::size_t i) {
      const McqaItem& item = items[i];
      const int ctx_budget = context_budget_for(item, symbols, config.budget_tokens, config.max_tokens);
      PreparedContext ctx = prepare_context(item.question, config.source, config.k, ctx_budget, retrieval);
      ItemTrace t = answer_item(generator, item, ctx.block.text, symbols, config.max_tokens);
      t.context_ids = std::move(ctx.block.included_ids);
      slots[i] = std::move(t);
    });
  } catch (const Error& e) {
    if (!is_endpoint_failure(e.code())) throw;
    std::vector<ItemTrace> done;
    for (auto& s : slots) {
      if (s) done.push_back(std::move(*s));
    }
    throw EvalAborted(e, make_report(std::move(done), fingerprint));
  }
  std::vector<ItemTrace> trace;
  trace.reserve(slots.size());
  for (auto& s : slots) trace.push_back(std::move(*s));
  return make_report(std::move(trace), fingerprint);
}

Json eval_report_json(const EvalReport& report) {
  Json trace = Json::array();
  for (const auto& t : report.trace) {
    trace.push_back(Json{{"item_id", t.item_id},
                         {"context_ids", t.context_ids},
                         {"prompt", t.prompt},
                         {"raw_output", t.raw_output},
                         {"parsed_index", t.parsed_index ? Json(*t.parsed_index) : Json(nullptr)},
                         {"error", t.parse_error.empty() ? Json(nullptr) : Json(t.parse_error)},
                         {"gold_index", t.gold_index},
                         {"correct", t.correct}});
  }
  return Json{{"accuracy", report.accuracy},
              {"n_items", report.n_items},
              {"n_correct", report.n_correct},
              {"config_fingerprint", report.config_fingerprint},
              {"trace", trace}};
}

}  // namespace chunkpipe
