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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chunkpipe/clients.h"
#include "chunkpipe/error.h"
#include "chunkpipe/ranker.h"

namespace chunkpipe {

inline constexpr std::size_t kMinOptions = 2;
inline constexpr std::size_t kMaxOptions = 5;

struct McqaItem {
  std::string item_id;
  std::string question;
  std::vector<std::string> options;
  int answer_index = 0;  // 0-based; "option N" is 1-based on disk
  std::optional<std::string> explanation;
  std::optional<std::string> category;

  // Throws SchemaError when options are out of 2..5, empty or repeated, or
  // AnswerOutOfRange when answer_index does not address an option.
  void validate() const;
  bool operator==(const McqaItem&) const = default;
};

enum class SymbolSetId { kNumeric, kAlpha };

struct SymbolSet {
  SymbolSetId id;
  std::array<std::string_view, kMaxOptions> symbols;
  std::string_view word;  // "number" or "letter"

  static const SymbolSet& numeric();
  static const SymbolSet& alpha();
  static const SymbolSet& get(SymbolSetId id);
};

SymbolSetId parse_symbol_set(std::string_view name);  // "numeric" | "alpha"
std::string_view symbol_set_name(SymbolSetId id);

// --- MC-QA files ---

std::vector<McqaItem> parse_mcqa(std::string_view jsonl, const std::string& source);
std::vector<McqaItem> load_mcqa(const std::filesystem::path& path);
Json mcqa_record(const McqaItem& item);
void save_mcqa(const std::filesystem::path& path, const std::vector<McqaItem>& items);

// Assigns target answer positions round-robin over a seeded shuffle of each
// group of items with equal option count, then moves each correct option to
// its target with the distractors in seeded random order.
std::vector<McqaItem> balance_answers(std::vector<McqaItem> items, std::uint64_t seed);

// --- holdout splits ---

inline constexpr int kDefaultSplits = 7;
inline constexpr int kDefaultEvalSize = 336;

struct Split {
  std::vector<std::string> train_ids;
  std::vector<std::string> eval_ids;

  bool operator==(const Split&) const = default;
};

struct SplitPlan {
  std::uint64_t seed = 0;
  int n_splits = 0;
  int eval_size = 0;
  std::vector<Split> splits;

  bool operator==(const SplitPlan&) const = default;
};

// Independent seeded holdouts: each split samples eval_size ids without
// replacement; eval sets of different splits may overlap. Both id lists
// keep the input order.
SplitPlan make_splits(const std::vector<std::string>& item_ids, int n_splits, int eval_size, std::uint64_t seed);

Json split_plan_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const Json& j);

// --- prompting ---

std::string build_prompt(const McqaItem& item, std::string_view context, const SymbolSet& symbols);

// Strips surrounding whitespace and leading punctuation, then matches the
// first token against the first n_options symbols (case-sensitive).
// Throws Unparseable or OutOfRange.
int parse_answer(std::string_view raw, const SymbolSet& symbols, std::size_t n_options);

// --- evaluation ---

enum class ContextSource { kNone, kRetrieved, kRetrievedCrr };

ContextSource parse_context_source(std::string_view name);  // none | retrieved | retrieved+crr
std::string_view context_source_name(ContextSource source);

inline constexpr int kDefaultContextBudget = 2048;

struct EvalConfig {
  ContextSource source = ContextSource::kRetrievedCrr;
  SymbolSetId symbols = SymbolSetId::kAlpha;
  int budget_tokens = kDefaultContextBudget;  // whole prompt plus reply
  int k = kDefaultRetrievalDepth;
  int max_tokens = 1;
  std::size_t jobs = 1;
};

// Everything the retrieval side of the pipeline needs; unused (and may be
// null) when the context source is kNone. scorer is needed for kRetrievedCrr.
struct RetrievalContext {
  const VectorIndex* index = nullptr;
  Embedder* embedder = nullptr;
  const ChunkStore* chunks = nullptr;
  RelevanceScorer* scorer = nullptr;
};

struct PreparedContext {
  std::vector<RetrievalHit> hits;
  ContextBlock block;
  bool used_fallback = false;
};

// Retrieves k chunks for the question and, for kRetrievedCrr, re-scores and
// filters them; the block is assembled within context_budget tokens.
PreparedContext prepare_context(std::string_view question, ContextSource source, int k, int context_budget,
                                const RetrievalContext& retrieval);

// Tokens left for the context block once the context-free prompt, the
// "Context:" label and the reply are accounted for.
int context_budget_for(const McqaItem& item, const SymbolSet& symbols, int total_budget, int max_tokens);

struct ItemTrace {
  std::string item_id;
  std::vector<std::string> context_ids;
  std::string prompt;
  std::string raw_output;
  std::optional<int> parsed_index;
  std::string parse_error;
  int gold_index = 0;
  bool correct = false;
};

struct EvalReport {
  double accuracy = 0.0;
  std::size_t n_items = 0;
  std::size_t n_correct = 0;
  std::vector<ItemTrace> trace;  // sorted by item_id
  std::string config_fingerprint;
};

Json eval_report_json(const EvalReport& report);

// Thrown by evaluate when the model endpoint fails; carries the trace of
// every item that completed before the failure.
class EvalAborted : public Error {
 public:
  EvalAborted(const Error& cause, EvalReport partial)
      : Error(cause.code(), "evaluation aborted after " + std::to_string(partial.n_items) + " items (" +
                                cause.what() + ")"),
        partial_(std::move(partial)) {}
  const EvalReport& partial() const { return partial_; }

 private:
  EvalReport partial_;
};

std::string eval_fingerprint(const EvalConfig& config, const Generator& generator, const RetrievalContext& retrieval);

// Runs retrieve -> (CRR filter) -> assemble -> prompt -> generate -> parse for
// every item. Unparseable answers count as incorrect.
EvalReport evaluate(Generator& generator, const std::vector<McqaItem>& items, const EvalConfig& config,
                    const RetrievalContext& retrieval = {});

// Scores one item against a fixed context text. Used by the diagnostics.
ItemTrace answer_item(Generator& generator, const McqaItem& item, std::string_view context,
                      const SymbolSet& symbols, int max_tokens);

}  // namespace chunkpipe
