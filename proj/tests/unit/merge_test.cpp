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

#include <cstring>
#include <random>

#include "chunkpipe/error.h"
#include "chunkpipe/merge.h"
#include "test_support.h"

using namespace chunkpipe;

namespace {

TensorBundle bundle(std::vector<float> w, std::vector<float> b, std::string source) {
  TensorBundle out;
  out.tensors["w"] = Tensor{{1, static_cast<std::int64_t>(w.size())}, std::move(w)};
  out.tensors["b"] = Tensor{{static_cast<std::int64_t>(b.size())}, std::move(b)};
  out.source = std::move(source);
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

// Overwrites the u32 manifest length and the manifest text in place.
std::vector<std::uint8_t> with_manifest(const std::vector<std::uint8_t>& bytes, const std::string& manifest) {
  std::uint32_t old_len = 0;
  std::memcpy(&old_len, bytes.data() + 8, 4);
  std::vector<std::uint8_t> out(bytes.begin(), bytes.begin() + 8);
  const auto len = static_cast<std::uint32_t>(manifest.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), manifest.begin(), manifest.end());
  out.insert(out.end(), bytes.begin() + 12 + old_len, bytes.end());
  return out;
}

std::string manifest_of(const std::vector<std::uint8_t>& bytes) {
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 4);
  return std::string(bytes.begin() + 12, bytes.begin() + 12 + len);
}

}  // namespace

TEST_SUITE("merge") {
  TEST_CASE("compatible bundles") {
    const std::vector<TensorBundle> ok{bundle({1, 2, 3, 4}, {1, 2}, "a"), bundle({0, 0, 0, 0}, {0, 0}, "b")};
    CHECK_NOTHROW(validate_compatible(ok));

    auto wrong_shape = ok;
    wrong_shape[1].tensors["w"] = Tensor{{2, 3}, std::vector<float>(6)};
    CHECK(code_of([&] { validate_compatible(wrong_shape); }) == ErrorCode::kStructureMismatch);
    CHECK(message_of([&] { validate_compatible(wrong_shape); }).find("StructureMismatch: w:") != std::string::npos);

    auto missing = ok;
    missing[1].tensors.erase("b");
    CHECK(message_of([&] { validate_compatible(missing); }).find("StructureMismatch: b:") != std::string::npos);

    CHECK(code_of([&] { validate_compatible(std::span(ok).first(1)); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("uniform and weighted merges") {
    const std::vector<TensorBundle> in{bundle({1, 2}, {3}, "a"), bundle({3, 4}, {5}, "b")};
    const auto mean = merge_linear(in);
    CHECK(mean.tensors.at("w").data == std::vector<float>{2, 3});
    CHECK(mean.tensors.at("b").data == std::vector<float>{4});
    CHECK(mean.source == "merge(a,b)");

    const auto weighted = merge_linear(in, std::vector<double>{3, 1});
    CHECK(weighted.tensors.at("w").data == std::vector<float>{1.5f, 2.5f});
    CHECK(weighted.tensors.at("b").data == std::vector<float>{3.5f});

    const std::vector<TensorBundle> swapped{in[1], in[0]};
    CHECK(bit_equal(merge_linear(swapped), mean));
    CHECK(bit_equal(merge_linear(swapped, std::vector<double>{1, 3}), weighted));
  }

  TEST_CASE("bad weights") {
    const std::vector<TensorBundle> in{bundle({1}, {1}, "a"), bundle({2}, {2}, "b")};
    CHECK(code_of([&] { merge_linear(in, std::vector<double>{1}); }) == ErrorCode::kBadWeights);
    CHECK(code_of([&] { merge_linear(in, std::vector<double>{1, -1}); }) == ErrorCode::kBadWeights);
    CHECK(code_of([&] { merge_linear(in, std::vector<double>{0, 0}); }) == ErrorCode::kBadWeights);
  }

  TEST_CASE("identical inputs are a fixed point") {
    const auto a = bundle({0.1f, -3.7f, 1e-20f}, {12345.678f}, "a");
    const std::vector<TensorBundle> in{a, a, a};
    const auto out = merge_linear(in);
    CHECK(out.tensors.at("w").data == a.tensors.at("w").data);
    CHECK(out.tensors.at("b").data == a.tensors.at("b").data);
  }

  TEST_CASE("empty bundles merge to empty") {
    const std::vector<TensorBundle> in{TensorBundle{{}, "x"}, TensorBundle{{}, "y"}};
    CHECK(merge_linear(in).tensors.empty());
    CHECK(parse_bundle(serialize_bundle(TensorBundle{})).tensors.empty());
  }

  TEST_CASE("bundle round trip through a file") {
    std::mt19937 gen(3);
    std::uniform_real_distribution<float> u(-1, 1);
    TensorBundle b;
    b.source = "rt";
    for (auto [name, shape] : std::vector<std::pair<std::string, std::vector<std::int64_t>>>{
             {"emb", {4, 3}}, {"bias", {3}}, {"scalar", {}}}) {
      Tensor t{shape, {}};
      for (std::size_t i = 0; i < t.numel(); ++i) t.data.push_back(u(gen));
      b.tensors[name] = t;
    }
    const auto path = chunkpipe::testing::scratch_dir("ntb") / "b.ntb";
    save_bundle(b, path);
    CHECK(bit_equal(load_bundle(path), b));
  }

  TEST_CASE("corrupt bundles are rejected") {
    const auto bytes = serialize_bundle(bundle({1, 2}, {3}, "a"));
    std::string manifest = manifest_of(bytes);
    Json m = Json::parse(manifest);
    m["tensors"][0]["nbytes"] = 4096;
    CHECK(code_of([&] { parse_bundle(with_manifest(bytes, m.dump())); }) == ErrorCode::kCorruptBundle);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK(code_of([&] { parse_bundle(bad_magic); }) == ErrorCode::kCorruptBundle);

    auto flipped = bytes;
    flipped[bytes.size() - 6] ^= 0x40;
    CHECK(code_of([&] { parse_bundle(flipped); }) == ErrorCode::kCorruptBundle);

    CHECK(code_of([&] { parse_bundle(with_manifest(bytes, "{not json")); }) == ErrorCode::kCorruptBundle);
    const std::vector<std::uint8_t> tiny(bytes.begin(), bytes.begin() + 10);
    CHECK(code_of([&] { parse_bundle(tiny); }) == ErrorCode::kCorruptBundle);
  }
}
