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

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <spdlog/spdlog.h>
#include <sstream>

#include "chunkpipe/analysis.h"
#include "chunkpipe/cli.h"
#include "chunkpipe/clients.h"
#include "chunkpipe/corpus.h"
#include "chunkpipe/embedx.h"
#include "chunkpipe/jsonio.h"
#include "chunkpipe/merge.h"
#include "chunkpipe/qa.h"
#include "chunkpipe/ranker.h"
#include "test_support.h"

using namespace chunkpipe;
namespace fs = std::filesystem;

namespace {

// Collects the first few failure notes of a criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (notes_.size() < 3) notes_.push_back(what);
  }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    std::string s = std::to_string(failures_) + " failure(s)";
    for (const auto& n : notes_) s += "; " + n;
    return s;
  }

 private:
  std::size_t failures_ = 0;
  std::vector<std::string> notes_;
};

struct Criterion {
  int number;
  std::string name;
  double limit_s;  // 0: no runtime bound
  std::function<std::string(Check&)> body;  // returns a short detail line
};

// ---------------------------------------------------------------- 1 chunking

std::string random_markup(std::mt19937_64& gen, std::vector<std::string>& body_lines) {
  static const std::vector<std::string> vocab{"carrier", "band", "uplink", "downlink", "frame", "slot", "beam",
                                              "cell",    "UE",   "gNB",    "5G",       "NR",    "(",    ")",
                                              ",",       ".",    ";",      "-",        "RRC",   "paging"};
  auto sentence = [&](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += (gen() % 4 == 0) ? "" : " ";
      s += vocab[gen() % vocab.size()];
    }
    return s;
  };
  std::string md = "% Synthetic " + std::to_string(gen() % 1000) + "\n";
  std::vector<std::string> previous;
  const int sections = 1 + static_cast<int>(gen() % 8);
  for (int s = 0; s < sections; ++s) {
    md += std::string(1 + gen() % 3, '#') + " Heading " + std::to_string(s) + "\n";
    const int lines = static_cast<int>(gen() % 6);
    for (int l = 0; l < lines; ++l) {
      const auto roll = gen() % 10;
      if (roll == 0) {
        md += "| a | b |\n| 1 | 2 |\n";
      } else if (roll == 1) {
        md += "[FIGURE]\n";
      } else if (roll == 2 && !previous.empty()) {
        const std::string again = previous[gen() % previous.size()];  // cross-section duplicate
        md += again + "\n";
        body_lines.push_back(again);
      } else {
        const std::string line = sentence(1 + gen() % 60);
        md += line + "\n";
        body_lines.push_back(line);
        previous.push_back(line);
      }
    }
  }
  return md;
}

std::string criterion_chunking(Check& check) {
  const Tokenizer& tok = default_tokenizer();
  {
    Chunk c = testing::make_chunk("d#1#0", "t0 t1 t2 t3 t4 t5 t6 t7 t8 t9");
    const auto subs = split_oversize(c, ChunkPolicy{4, 2});
    std::vector<std::string> bodies;
    for (const auto& s : subs) bodies.push_back(s.body);
    check.expect(bodies == std::vector<std::string>{"t0 t1 t2 t3", "t2 t3 t4 t5", "t4 t5 t6 t7", "t6 t7 t8 t9"},
                 "(10, 4, 2) spans differ from [0,4),[2,6),[4,8),[6,10)");
  }

  std::mt19937_64 gen(2024);
  std::size_t total_chunks = 0, total_docs = 0;
  for (int doc = 0; doc < 50; ++doc) {
    std::vector<std::string> body_lines;
    const std::string md = random_markup(gen, body_lines);
    const int window = 4 + static_cast<int>(gen() % 29);
    const ChunkPolicy policy{window, 1 + static_cast<int>(gen() % static_cast<unsigned>(window))};
    const std::string doc_id = "doc" + std::to_string(doc);

    const auto extracted = extract_assets(parse_document(md, doc_id));
    const auto sections = section_chunks(extracted.tree, policy);
    const auto kept = dedup_chunks(sections);
    const auto chunks = apply_window(kept, policy);
    total_chunks += chunks.size();
    ++total_docs;

    // Budget.
    for (const auto& c : chunks) {
      check.expect(c.token_count <= static_cast<std::size_t>(window), doc_id + ": chunk over window");
      check.expect(tok.count(c.body) == c.token_count, doc_id + ": token_count disagrees with body");
    }
    // Reconstruction: overlap-removed concatenation of each section's windows.
    std::map<std::string, std::vector<const Chunk*>> by_parent;
    for (const auto& c : chunks) by_parent[c.parent_id.value_or(c.chunk_id)].push_back(&c);
    for (const auto& s : kept) {
      const auto& subs = by_parent[s.chunk_id];
      std::vector<std::string> rebuilt;
      for (std::size_t i = 0; i < subs.size(); ++i) {
        check.expect(subs[i]->seq == static_cast<int>(i), doc_id + ": seq not contiguous");
        const auto toks = tok.tokens(subs[i]->body);
        const std::size_t start = i * static_cast<std::size_t>(policy.stride);
        for (std::size_t t = 0; t < toks.size(); ++t) {
          if (start + t >= rebuilt.size()) rebuilt.push_back(toks[t]);
          else check.expect(rebuilt[start + t] == toks[t], doc_id + ": overlap tokens disagree");
        }
      }
      check.expect(rebuilt == tok.tokens(s.body), doc_id + ": reconstruction failed for " + s.chunk_id);
    }
    // Coverage: every body token of the markup occurs in some chunk.
    std::set<std::string> chunk_tokens;
    for (const auto& c : chunks)
      for (const auto& t : tok.tokens(c.body)) chunk_tokens.insert(ascii_lower(t));
    for (const auto& line : body_lines)
      for (const auto& t : tok.tokens(line))
        check.expect(chunk_tokens.count(ascii_lower(t)) == 1, doc_id + ": token '" + t + "' not covered");
    // Every dropped section duplicates a kept one.
    std::set<std::string> kept_norm;
    for (const auto& s : kept) kept_norm.insert(normalize_for_dedup(s.body));
    for (const auto& s : sections) check.expect(kept_norm.count(normalize_for_dedup(s.body)) == 1, doc_id + ": lost section");
    // Dedup idempotence and determinism.
    check.expect(dedup_chunks(kept) == kept, doc_id + ": dedup not idempotent");
    check.expect(dedup_chunks(chunks) == dedup_chunks(dedup_chunks(chunks)), doc_id + ": dedup not idempotent on windows");
    check.expect(make_chunks(parse_document(md, doc_id), policy) ==
                     make_chunks(parse_document(md, doc_id), policy),
                 doc_id + ": chunking not deterministic");
  }
  return std::to_string(total_docs) + " docs, " + std::to_string(total_chunks) + " chunks";
}

// --------------------------------------------------------------- 2 retrieval

std::string criterion_retrieval(Check& check) {
  std::mt19937_64 gen(77);
  std::size_t compared = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 1 + gen() % 200;
    const std::size_t dim = 1 + gen() % 32;
    const int k = 1 + static_cast<int>(gen() % 10);
    const bool coarse = inst % 3 == 0;  // small integer entries force exact ties
    std::normal_distribution<float> normal;
    auto draw = [&] {
      EmbeddingVector v;
      for (std::size_t d = 0; d < dim; ++d)
        v.values.push_back(coarse ? static_cast<float>(static_cast<int>(gen() % 3) - 1) : normal(gen));
      return v;
    };
    std::vector<Chunk> chunks;
    std::vector<EmbeddingVector> vecs;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), gen);  // ids not in index order
    for (std::size_t i = 0; i < n; ++i) {
      chunks.push_back(testing::make_chunk("c" + std::to_string(order[i]), "x"));
      vecs.push_back(draw());
    }
    const auto index = build_index(chunks, vecs, {});
    const EmbeddingVector q = draw();

    // Exhaustive scan.
    std::vector<std::pair<double, std::string>> scan;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0, na = 0, nb = 0;
      for (std::size_t d = 0; d < dim; ++d) {
        dot += static_cast<double>(q.values[d]) * vecs[i].values[d];
        na += static_cast<double>(q.values[d]) * q.values[d];
        nb += static_cast<double>(vecs[i].values[d]) * vecs[i].values[d];
      }
      const double s = (na == 0 || nb == 0) ? 0.0 : dot / (std::sqrt(na) * std::sqrt(nb));
      scan.emplace_back(s, chunks[i].chunk_id);
    }
    std::sort(scan.begin(), scan.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    const auto hits = search(index, q, k);
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), n);
    check.expect(hits.size() == want, "instance " + std::to_string(inst) + ": wrong hit count");
    for (std::size_t i = 0; i < std::min(want, hits.size()); ++i) {
      check.expect(hits[i].chunk_id == scan[i].second, "instance " + std::to_string(inst) + ": id/order mismatch");
      check.expect(hits[i].rank == static_cast<int>(i), "instance " + std::to_string(inst) + ": rank gap");
      ++compared;
    }
  }
  return "100 instances, " + std::to_string(compared) + " hits compared";
}

// ------------------------------------------------------------------ 3 filter

std::string criterion_filter(Check& check) {
  const std::vector<std::string> ids{"h0", "h1", "h2", "h3"};
  int cases = 0;
  for (int code = 0; code < 625; ++code) {
    int scores[4];
    for (int i = 0, c = code; i < 4; ++i, c /= 5) scores[i] = 1 + c % 5;
    std::vector<ScoredHit> in;
    for (int i = 0; i < 4; ++i) in.push_back({RetrievalHit{ids[i], 0.0f, i}, RelevanceScore(scores[i])});

    // Direct restatement: keep 4s and 5s (fives first, then fours, each in
    // retrieval order); with none kept, the first three in retrieval order.
    ContextSelection want;
    for (int s : {5, 4})
      for (int i = 0; i < 4; ++i)
        if (scores[i] == s) want.chunk_ids.push_back(ids[i]);
    if (want.chunk_ids.empty()) {
      want.chunk_ids = {ids[0], ids[1], ids[2]};
      want.used_fallback = true;
    }
    check.expect(filter_and_order(in) == want, "scores " + std::to_string(code) + " disagree");
    ++cases;
  }
  return std::to_string(cases) + " assignments";
}

// --------------------------------------------------------------- 4 balancing

std::string criterion_balance(Check& check) {
  std::mt19937_64 gen(4);
  std::vector<McqaItem> items;
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> opts;
    for (int o = 0; o < 5; ++o) opts.push_back("q" + std::to_string(i) + "-opt" + std::to_string(gen() % 1000) + "-" + std::to_string(o));
    items.push_back(testing::make_item("i" + std::to_string(i), "question " + std::to_string(i), opts,
                                       static_cast<int>(gen() % 2)));  // heavily skewed input
  }
  const auto out = balance_answers(items, 99);
  std::vector<int> hist(5, 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& a = items[i];
    const auto& b = out[i];
    ++hist[static_cast<std::size_t>(b.answer_index)];
    check.expect(a.question == b.question && a.item_id == b.item_id, "question changed");
    check.expect(a.options[static_cast<std::size_t>(a.answer_index)] == b.options[static_cast<std::size_t>(b.answer_index)],
                 "correct text changed");
    std::multiset<std::string> da, db;
    for (std::size_t o = 0; o < 5; ++o) {
      if (static_cast<int>(o) != a.answer_index) da.insert(a.options[o]);
      if (static_cast<int>(o) != b.answer_index) db.insert(b.options[o]);
    }
    check.expect(da == db, "distractor multiset changed");
  }
  const auto [lo, hi] = std::minmax_element(hist.begin(), hist.end());
  check.expect(*hi - *lo <= 1, "histogram spread " + std::to_string(*hi - *lo));
  std::ostringstream s;
  s << "positions";
  for (int h : hist) s << " " << h;
  return s.str();
}

// ------------------------------------------------------------------ 5 splits

std::string criterion_splits(Check& check) {
  std::vector<std::string> ids;
  for (int i = 0; i < 1461; ++i) ids.push_back("tq" + std::to_string(i));
  const auto plan = make_splits(ids, 7, 336, 2024);
  check.expect(plan.splits.size() == 7, "split count");
  const std::set<std::string> all(ids.begin(), ids.end());
  for (const auto& s : plan.splits) {
    check.expect(s.eval_ids.size() == 336, "eval size");
    check.expect(s.train_ids.size() == 1125, "train size");
    std::set<std::string> e(s.eval_ids.begin(), s.eval_ids.end()), t(s.train_ids.begin(), s.train_ids.end());
    check.expect(e.size() == 336 && t.size() == 1125, "duplicate ids inside a split");
    std::vector<std::string> both;
    std::set_intersection(e.begin(), e.end(), t.begin(), t.end(), std::back_inserter(both));
    check.expect(both.empty(), "train and eval overlap");
    std::set<std::string> uni = e;
    uni.insert(t.begin(), t.end());
    check.expect(uni == all, "split not exhaustive");
  }
  const auto again = make_splits(ids, 7, 336, 2024);
  check.expect(again == plan, "same seed gave a different plan");
  check.expect(split_plan_json(again).dump() == split_plan_json(plan).dump(), "serialized plans differ");
  return "7 x (336 eval + 1125 train)";
}

// ------------------------------------------------------------------- 6 merge

TensorBundle random_bundle(std::mt19937_64& gen, const std::vector<std::pair<std::string, std::vector<std::int64_t>>>& layout,
                           const std::string& source) {
  std::uniform_real_distribution<float> u(-4.0f, 4.0f);
  TensorBundle b;
  b.source = source;
  for (const auto& [name, shape] : layout) {
    Tensor t{shape, {}};
    const std::size_t n = t.numel();
    for (std::size_t i = 0; i < n; ++i) t.data.push_back(u(gen));
    b.tensors[name] = std::move(t);
  }
  return b;
}

std::vector<std::pair<std::string, std::vector<std::int64_t>>> random_layout(std::mt19937_64& gen) {
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> layout;
  const int n_tensors = static_cast<int>(gen() % 11);  // 0..10
  for (int t = 0; t < n_tensors; ++t) {
    std::vector<std::int64_t> shape;
    const int rank = static_cast<int>(gen() % 3);
    std::int64_t budget = 1000;
    for (int r = 0; r < rank; ++r) {
      const std::int64_t d = 1 + static_cast<std::int64_t>(gen() % static_cast<std::uint64_t>(std::min<std::int64_t>(budget, 40)));
      shape.push_back(d);
      budget /= d;
    }
    layout.emplace_back("layer" + std::to_string(t) + ".w", shape);
  }
  return layout;
}

std::string criterion_merge(Check& check) {
  std::mt19937_64 gen(6);
  double worst_rel = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto layout = random_layout(gen);
    std::vector<TensorBundle> in;
    for (int b = 0; b < 5; ++b) in.push_back(random_bundle(gen, layout, "model" + std::to_string(b)));
    const auto merged = merge_linear(in);

    for (const auto& [name, t] : merged.tensors) {
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        long double sum = 0;
        for (const auto& b : in) sum += b.tensors.at(name).data[i];
        const long double mean = sum / 5;
        const long double err = std::fabs(static_cast<long double>(t.data[i]) - mean);
        const long double rel = mean == 0 ? err : err / std::fabs(mean);
        worst_rel = std::max(worst_rel, static_cast<double>(rel));
        check.expect(rel <= 1e-7, name + ": relative error " + std::to_string(static_cast<double>(rel)));
      }
    }
    check.expect(merged.tensors.size() == layout.size(), "tensor count");

    // Commutativity over several argument orders.
    for (int p = 0; p < 6; ++p) {
      auto shuffled = in;
      std::shuffle(shuffled.begin(), shuffled.end(), gen);
      check.expect(bit_equal(merge_linear(shuffled), merged), "merge depends on argument order");
    }

    // Weights (1, 0) return the first input within one ulp.
    const std::vector<TensorBundle> pair{in[0], in[1]};
    const auto first = merge_linear(pair, std::vector<double>{1.0, 0.0});
    for (const auto& [name, t] : first.tensors) {
      const auto& want = in[0].tensors.at(name).data;
      for (std::size_t i = 0; i < want.size(); ++i) {
        const float lo = std::nextafter(want[i], -INFINITY), hi = std::nextafter(want[i], INFINITY);
        check.expect(t.data[i] >= lo && t.data[i] <= hi, name + ": weights (1,0) drifted");
      }
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "20 trials of 5 bundles, worst rel err %.2e", worst_rel);
  return buf;
}

// ------------------------------------------------------------------ 7 golden

std::string criterion_golden(Check& check) {
  std::size_t items_checked = 0;
  for (int item_no = 0; item_no < 10; ++item_no) {
    const std::string tag = "item" + std::to_string(item_no);
    const auto item = testing::make_item(tag, "Question " + tag + "?", {"w", "x", "y", "z"}, item_no % 4);
    const auto& sym = SymbolSet::alpha();
    const std::string gold(sym.symbols[static_cast<std::size_t>(item.answer_index)]);
    const std::string wrong(sym.symbols[static_cast<std::size_t>((item.answer_index + 1) % 4)]);

    std::vector<Chunk> candidates;
    const std::size_t n = 1 + static_cast<std::size_t>(item_no % 7);
    for (std::size_t c = 0; c < n; ++c) candidates.push_back(testing::make_chunk(tag + "#c" + std::to_string(c), "body " + std::to_string(c)));
    const Chunk& key = candidates[static_cast<std::size_t>(item_no) % n];

    ScriptedGenerator iff_chunk({{key.body, gold}}, wrong);
    ScriptedGenerator always({}, gold);
    ScriptedGenerator never({}, wrong);

    const auto g1 = find_golden(iff_chunk, item, candidates);
    const auto g2 = find_golden(always, item, candidates);
    const auto g3 = find_golden(never, item, candidates);
    check.expect(g1 == std::vector<std::string>{key.chunk_id}, tag + ": correct-iff-chunk did not return {c}");
    check.expect(g2.empty(), tag + ": always-correct returned a golden chunk");
    check.expect(g3.empty(), tag + ": never-correct returned a golden chunk");
    for (const Generator* g : {static_cast<Generator*>(&iff_chunk), static_cast<Generator*>(&always),
                               static_cast<Generator*>(&never)}) {
      check.expect(g->call_count() == n + 1, tag + ": expected " + std::to_string(n + 1) + " calls, saw " +
                                                  std::to_string(g->call_count()));
    }
    ++items_checked;
  }
  return std::to_string(items_checked) + " items x 3 scripts";
}

// --------------------------------------------------------------- 8 dry run

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "timing.json") {
      out[fs::relative(e.path(), root).string()] = read_text_file(e.path());
    }
  }
  return out;
}

std::string criterion_dry_run(Check& check) {
  const auto dir = testing::scratch_dir("acceptance-e2e");
  Json config{{"output_dir", "out"},
              {"seed", 8},
              {"corpus", {{"paths", {testing::fixture("corpus").string()}}}},
              {"embedder", {{"kind", "mock"}}},
              {"crr", {{"enabled", true}, {"scorer", {{"kind", "mock"}}}}},
              {"qa", {{"path", testing::fixture("mcqa.jsonl").string()}}},
              {"generator", {{"kind", "lexical"}}}};
  write_json(dir / "config.json", config);
  const std::string cfg = (dir / "config.json").string();

  std::string accuracy = "?";
  for (const char* run : {"run1", "run2"}) {
    for (const char* stage : {"structure", "embed", "index", "eval"}) {
      const int status = run_cli({stage, "--config", cfg, "--out", (dir / run).string()});
      check.expect(status == 0, std::string(stage) + " exited " + std::to_string(status));
    }
  }
  if (!check.ok()) return "pipeline failed";
  const auto a = read_tree(dir / "run1");
  const auto b = read_tree(dir / "run2");
  check.expect(a == b, "artifacts differ between runs");

  const auto chunks = read_jsonl(dir / "run1" / "structure" / "chunks.jsonl");
  std::set<std::string> docs;
  for (const auto& c : chunks) docs.insert(c.at("doc_id").get<std::string>());
  check.expect(docs.size() >= 3, "fewer than 3 documents");
  check.expect(chunks.size() >= 40, "fewer than 40 chunks");
  const auto report = read_json(dir / "run1" / "eval" / "report.json");
  check.expect(report.at("n_items") == 20, "report does not cover 20 items");
  check.expect(report.at("trace").size() == 20, "trace size");
  check.expect(a.count("eval/manifest.json") == 1, "eval manifest missing");
  accuracy = std::to_string(report.at("accuracy").get<double>());
  return std::to_string(docs.size()) + " docs, " + std::to_string(chunks.size()) + " chunks, 20 items, accuracy " +
         accuracy.substr(0, 6) + ", " + std::to_string(a.size()) + " artifacts identical";
}

// ------------------------------------------------------------------ 9 recipe

std::string criterion_recipe(Check& check) {
  const auto dir = testing::scratch_dir("acceptance-recipe");
  write_json(dir / "config.json", Json{{"output_dir", "out"}});
  for (const char* target : {"crr", "sft"}) {
    check.expect(run_cli({"recipe", "--config", (dir / "config.json").string(), "--target", target}) == 0,
                 std::string("recipe ") + target + " failed");
  }
  if (!check.ok()) return "emit failed";
  const auto crr = read_json(dir / "out" / "recipe" / "crr.json");
  const auto sft = read_json(dir / "out" / "recipe" / "sft.json");
  auto same = [&](const Json& j, int batch, double lr, const char* sched, int warmup, int epochs) {
    return j.at("batch_size") == batch && j.at("learning_rate").get<double>() == lr && j.at("scheduler") == sched &&
           j.at("warmup_steps") == warmup && j.at("epochs") == epochs && j.at("optimizer") == "adam";
  };
  check.expect(same(crr, 64, 5e-6, "constant", 70, 100), "crr recipe " + crr.dump());
  check.expect(same(sft, 16, 1e-5, "polynomial", 10, 3), "sft recipe " + sft.dump());
  return "crr {64, 5e-6, constant, 70, 100}; sft {16, 1e-5, polynomial, 10, 3}";
}

// --------------------------------------------------------------------- 10 NTB

std::vector<std::uint8_t> replace_manifest(const std::vector<std::uint8_t>& bytes, const std::string& manifest) {
  std::uint32_t old_len = 0;
  std::memcpy(&old_len, bytes.data() + 8, 4);
  std::vector<std::uint8_t> out(bytes.begin(), bytes.begin() + 8);
  const auto len = static_cast<std::uint32_t>(manifest.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), manifest.begin(), manifest.end());
  out.insert(out.end(), bytes.begin() + 12 + old_len, bytes.end());
  return out;
}

bool rejected(const std::vector<std::uint8_t>& bytes) {
  try {
    parse_bundle(bytes);
  } catch (const Error& e) {
    return e.code() == ErrorCode::kCorruptBundle;
  }
  return false;
}

std::string criterion_ntb(Check& check) {
  std::mt19937_64 gen(10);
  const auto dir = testing::scratch_dir("acceptance-ntb");
  std::size_t corruptions = 0;
  for (int i = 0; i < 100; ++i) {
    const auto bundle = random_bundle(gen, random_layout(gen), "bundle-" + std::to_string(i));
    const auto path = dir / ("b" + std::to_string(i) + ".ntb");
    save_bundle(bundle, path);
    const auto loaded = load_bundle(path);
    check.expect(bit_equal(loaded, bundle), "bundle " + std::to_string(i) + " changed on round trip");

    const auto bytes = serialize_bundle(bundle);
    std::uint32_t len = 0;
    std::memcpy(&len, bytes.data() + 8, 4);
    const Json manifest = Json::parse(std::string(bytes.begin() + 12, bytes.begin() + 12 + len));

    std::vector<std::vector<std::uint8_t>> bad;
    bad.push_back(replace_manifest(bytes, manifest.dump().substr(0, manifest.dump().size() / 2)));  // truncated JSON
    auto too_long = bytes;
    const std::uint32_t huge = len + 1000000;
    std::memcpy(too_long.data() + 8, &huge, 4);
    bad.push_back(too_long);  // manifest length past end of file
    if (!manifest.at("tensors").empty()) {
      Json m = manifest;
      m["tensors"][0]["nbytes"] = m["tensors"][0]["nbytes"].get<std::uint64_t>() + 4;
      bad.push_back(replace_manifest(bytes, m.dump()));
      m = manifest;
      m["tensors"][0]["dtype"] = "f16";
      bad.push_back(replace_manifest(bytes, m.dump()));
      m = manifest;
      m["tensors"][0]["offset"] = 1u << 30;
      bad.push_back(replace_manifest(bytes, m.dump()));
      m = manifest;
      m["tensors"][0]["shape"].push_back(3);
      bad.push_back(replace_manifest(bytes, m.dump()));
      m = manifest;
      m["tensors"].push_back(m["tensors"][0]);
      bad.push_back(replace_manifest(bytes, m.dump()));  // duplicate name
    }
    Json m = manifest;
    m.erase("tensors");
    bad.push_back(replace_manifest(bytes, m.dump()));
    for (const auto& b : bad) {
      check.expect(rejected(b), "bundle " + std::to_string(i) + ": corrupted manifest accepted");
      ++corruptions;
    }
  }
  return "100 round trips, " + std::to_string(corruptions) + " corrupted manifests rejected";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  const std::vector<Criterion> criteria{
      {1, "chunking suite", 5.0, criterion_chunking},
      {2, "retrieval oracle", 5.0, criterion_retrieval},
      {3, "filter rule", 0.0, criterion_filter},
      {4, "balancing", 0.0, criterion_balance},
      {5, "splits", 0.0, criterion_splits},
      {6, "merge oracle", 2.0, criterion_merge},
      {7, "golden-chunk logic", 0.0, criterion_golden},
      {8, "end-to-end dry run", 30.0, criterion_dry_run},
      {9, "recipe fidelity", 0.0, criterion_recipe},
      {10, "NTB round-trip", 5.0, criterion_ntb},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Check check;
    std::string detail;
    const auto start = std::chrono::steady_clock::now();
    try {
      detail = c.body(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0 && secs >= c.limit_s) {
      check.expect(false, "runtime " + std::to_string(secs) + " s over " + std::to_string(c.limit_s) + " s");
    }
    char timing[32];
    std::snprintf(timing, sizeof(timing), "%.2fs", secs);
    std::cout << (check.ok() ? "PASS" : "FAIL") << "  " << c.number << ". " << c.name << " [" << timing << "] "
              << (check.ok() ? detail : check.summary()) << "\n";
    failed += check.ok() ? 0 : 1;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criterion(s) failed\n" : "acceptance: all 10 criteria passed\n");
  return failed ? 1 : 0;
}
