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

#include "chunkpipe/cli.h"

#include <CLI11.hpp>
#include <algorithm>
#include <iostream>
#include <optional>
#include <sstream>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "chunkpipe/config.h"
#include "chunkpipe/error.h"
#include "chunkpipe/merge.h"
#include "chunkpipe/pipeline.h"

namespace chunkpipe {
namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

struct EvalFlags {
  std::optional<std::string> context;
  std::optional<std::string> symbols;
  std::optional<int> split;
  std::optional<int> k;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "pipeline config (JSON)")->required();
  cmd->add_option("--out", flags.out, "output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "seed (overrides config)");
  cmd->add_option("--jobs", flags.jobs, "worker cap")->check(CLI::PositiveNumber);
}

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kBadWeights, "weight '" + field + "' is not a number");
    }
  }
  return out;
}

int run_merge(const std::string& out, const std::vector<std::string>& inputs, const std::optional<std::string>& weights) {
  std::vector<TensorBundle> bundles;
  bundles.reserve(inputs.size());
  for (const auto& path : inputs) bundles.push_back(load_bundle(path));
  std::optional<std::vector<double>> w;
  if (weights) w = parse_weights(*weights);
  save_bundle(merge_linear(bundles, w), out);
  spdlog::info("merged {} bundles into {}", bundles.size(), out);
  return 0;
}

PipelineConfig resolve_config(const CommonFlags& flags, const EvalFlags* eval) {
  PipelineConfig config = load_config(flags.config);
  if (flags.out) config.output_dir = *flags.out;
  if (flags.seed) config.seed = *flags.seed;
  if (flags.jobs) config.jobs = *flags.jobs;
  if (eval) {
    try {
      if (eval->context) config.context_source = parse_context_source(*eval->context);
      if (eval->symbols) config.symbols = parse_symbol_set(*eval->symbols);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, e.what());
    }
    if (eval->k) config.k = *eval->k;
  }
  apply_env_overrides(config);
  return config;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  static const bool logger_ready = [] {
    spdlog::set_default_logger(spdlog::stderr_color_mt("chunkpipe"));
    return true;
  }();
  (void)logger_ready;
  CLI::App app{"chunkpipe: structured-chunk RAG pipeline for multiple-choice QA", "chunkpipe"};
  app.require_subcommand(1);

  CommonFlags common;
  EvalFlags eval_flags;
  std::string target;
  std::string merge_out;
  std::vector<std::string> merge_in;
  std::optional<std::string> merge_weights;

  struct Stage {
    const char* name;
    const char* help;
  };
  static constexpr Stage kStages[] = {
      {"structure", "parse markup into chunks.jsonl and assets.jsonl"},
      {"embed", "embed every chunk"},
      {"index", "build the exact cosine index"},
      {"retrieve", "top-k hits for every MC-QA item"},
      {"rank-dataset", "label (question, chunk) pairs for CRR training"},
      {"recipe", "emit a training recipe"},
      {"splits", "seeded holdout splits"},
      {"eval", "MC-QA accuracy with the configured context source"},
      {"golden", "golden-chunk search over retrieved candidates"},
      {"sweep", "accuracy over chunk size and chunk count"},
      {"noise", "accuracy with golden chunk plus random chunks"},
  };
  for (const auto& stage : kStages) {
    auto* cmd = app.add_subcommand(stage.name, stage.help);
    add_common(cmd, common);
    if (std::string_view(stage.name) == "recipe") {
      cmd->add_option("--target", target, "crr | sft")->required()->check(CLI::IsMember({"crr", "sft"}));
    }
    if (std::string_view(stage.name) == "eval") {
      cmd->add_option("--context", eval_flags.context, "none | retrieved | retrieved+crr");
      cmd->add_option("--symbols", eval_flags.symbols, "alpha | numeric");
      cmd->add_option("--split", eval_flags.split, "evaluate only this split's eval items");
      cmd->add_option("--k", eval_flags.k, "retrieval depth")->check(CLI::PositiveNumber);
    }
  }
  auto* merge = app.add_subcommand("merge", "linear merge of NTB bundles");
  merge->add_option("--out", merge_out, "output bundle")->required();
  merge->add_option("--in", merge_in, "input bundles")->required()->expected(2, -1);
  merge->add_option("--weights", merge_weights, "comma-separated weights");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : 1;
  }

  try {
    if (merge->parsed()) return run_merge(merge_out, merge_in, merge_weights);

    const std::string name = app.get_subcommands().front()->get_name();
    Pipeline pipeline(resolve_config(common, name == "eval" ? &eval_flags : nullptr));
    if (name == "structure") pipeline.structure();
    else if (name == "embed") pipeline.embed();
    else if (name == "index") pipeline.index();
    else if (name == "retrieve") pipeline.retrieve();
    else if (name == "rank-dataset") pipeline.rank_dataset();
    else if (name == "recipe") pipeline.recipe(parse_recipe_target(target));
    else if (name == "splits") pipeline.splits();
    else if (name == "golden") pipeline.golden();
    else if (name == "sweep") pipeline.sweep();
    else if (name == "noise") pipeline.noise();
    else if (name == "eval") {
      const auto report = pipeline.eval(eval_flags.split);
      std::cout << "accuracy " << report.accuracy << " (" << report.n_correct << "/" << report.n_items << ")\n";
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_status(ErrorCode::kIo);
  }
}

}  // namespace chunkpipe
