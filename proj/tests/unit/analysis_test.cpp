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

#include <doctest.h>

#include "chunkpipe/analysis.h"
#include "chunkpipe/clients.h"
#include "chunkpipe/error.h"
#include "test_support.h"

using namespace chunkpipe;
using chunkpipe::testing::make_chunk;
using chunkpipe::testing::make_item;

namespace {

std::vector<Chunk> candidates() {
  return {make_chunk("c1", "filler one"), make_chunk("c2", "filler two"), make_chunk("c3", "marker-c3 text"),
          make_chunk("c4", "filler four")};
}

const McqaItem kItem = make_item("q1", "Which?", {"x", "y", "z"}, 1);

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("golden chunk when only c3 helps") {
    ScriptedGenerator gen({{"marker-c3", "B"}}, "A");
    CHECK(find_golden(gen, kItem, candidates()) == std::vector<std::string>{"c3"});
    CHECK(gen.call_count() == 5);
  }

  TEST_CASE("no golden chunk for always or never correct models") {
    ScriptedGenerator always({}, "B");
    CHECK(find_golden(always, kItem, candidates()).empty());
    CHECK(always.call_count() == 5);
    ScriptedGenerator never({}, "C");
    CHECK(find_golden(never, kItem, candidates()).empty());
    CHECK(never.call_count() == 5);
    CHECK_THROWS_AS(find_golden(never, kItem, {}), Error);
  }

  TEST_CASE("without-chunk mode compares against the other candidates") {
    // Correct only when c3 is present: c3 alone works, and the others without c3 fail.
    ScriptedGenerator gen({{"marker-c3", "B"}}, "A");
    GoldenConfig cfg;
    cfg.mode = GoldenMode::kWithoutChunk;
    CHECK(find_golden(gen, kItem, candidates(), cfg) == std::vector<std::string>{"c3"});
    CHECK(gen.call_count() == 8);
  }

  TEST_CASE("golden records and histogram") {
    const std::vector<std::string> retrieved{"a", "b", "c", "d", "e", "f", "g"};
    std::vector<GoldenRecord> records{golden_record("1", {"a"}, retrieved), golden_record("2", {"a"}, retrieved),
                                      golden_record("3", {"b"}, retrieved), golden_record("4", {"g"}, retrieved)};
    CHECK(records[3].position_in_retrieval == 7);
    const auto h = golden_histogram(records, 7);
    CHECK(h.counts == std::vector<std::size_t>{2, 1, 0, 0, 0, 0, 1});
    CHECK(h.absent == 0);
    CHECK(h.total() == records.size());

    CHECK(golden_histogram({}, 7).counts == std::vector<std::size_t>(7, 0));
    const auto absent = golden_histogram({golden_record("x", {}, retrieved)}, 7);
    CHECK(absent.absent == 1);
    CHECK(absent.total() == 1);

    CHECK(golden_from_json(golden_json(records)) == records);
    CHECK(histogram_csv(h) == "position,count\n1,2\n2,1\n3,0\n4,0\n5,0\n6,0\n7,1\nabsent,0\n");
    CHECK(golden_csv({records[0], golden_record("x", {"p", "q"}, retrieved)}) ==
          "item_id,golden_ids,position\n1,a,1\nx,p;q,\n");
  }

  TEST_CASE("sweep grid order") {
    std::vector<int> prepared;
    const auto rows = sweep_chunk_config({128, 192}, {1, 3, 7}, [&](int size) -> CountEvaluator {
      prepared.push_back(size);
      return [](int) { return 0.5; };
    });
    REQUIRE(rows.size() == 6);
    CHECK(prepared == std::vector<int>{128, 192});
    CHECK(rows[0] == SweepRow{128, 1, 0.5});
    CHECK(rows[2] == SweepRow{128, 7, 0.5});
    CHECK(rows[3] == SweepRow{192, 1, 0.5});
    CHECK(sweep_csv(rows).substr(0, 48) == "chunk_size,n_chunks,accuracy\n128,1,0.500000\n128,");
  }

  TEST_CASE("noise experiment") {
    std::vector<Chunk> pool;
    for (int i = 0; i < 30; ++i) pool.push_back(make_chunk("p" + std::to_string(i), "noise " + std::to_string(i)));
    std::vector<NoiseItem> items;
    std::vector<ScriptRule> rules;
    for (int i = 0; i < 40; ++i) {
      const std::string id = "n" + std::to_string(i);
      Chunk golden = make_chunk("g" + std::to_string(i), "gold " + std::to_string(i), {"Gold" + id, "S"});
      items.push_back({make_item(id, "Question " + id + "?", {"x", "y"}, 0), golden, {"p0"}});
      rules.push_back({"Context:\nGold" + id + " > S", "A"});
    }
    ScriptedGenerator gen(rules, "B");
    const auto rows = noise_experiment(gen, items, pool, {0, 1, 6}, 21);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].accuracy == 1.0);
    CHECK(rows[1].accuracy < 1.0);
    CHECK(rows[2].accuracy < rows[1].accuracy);
    CHECK(rows[2].n_items == 40);

    ScriptedGenerator again(rules, "B");
    CHECK(noise_experiment(again, items, pool, {0, 1, 6}, 21) == rows);
    const auto ctx = noise_context(items[0], pool, 6, 21, 0);
    CHECK(ctx.size() == 7);
    for (const Chunk* c : ctx) CHECK(c->chunk_id != "p0");
    CHECK(noise_experiment(again, items, pool, {0}, 21).size() == 1);
  }
}
