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

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "chunkpipe/error.h"
#include "chunkpipe/hashing.h"
#include "chunkpipe/jsonio.h"
#include "chunkpipe/merge.h"

namespace chunkpipe {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

Error corrupt(const std::string& why) { return Error(ErrorCode::kCorruptBundle, why); }

}  // namespace

std::vector<std::uint8_t> serialize_bundle(const TensorBundle& bundle) {
  bundle.validate();
  Json tensors = Json::array();
  std::vector<std::uint8_t> payload;
  for (const auto& [name, t] : bundle.tensors) {
    const std::size_t offset = payload.size();
    for (float f : t.data) put_f32(payload, f);
    tensors.push_back(Json{{"name", name},
                           {"shape", t.shape},
                           {"dtype", "f32"},
                           {"offset", offset},
                           {"nbytes", payload.size() - offset}});
  }
  const std::string manifest = Json{{"tensors", tensors}, {"metadata", {{"source", bundle.source}}}}.dump();

  std::vector<std::uint8_t> out(kNtbMagic.begin(), kNtbMagic.end());
  put_u32(out, static_cast<std::uint32_t>(manifest.size()));
  out.insert(out.end(), manifest.begin(), manifest.end());
  out.insert(out.end(), payload.begin(), payload.end());
  put_u32(out, crc32(payload));
  return out;
}

TensorBundle parse_bundle(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kFixed = 8 + 4 + 4;  // magic, manifest length, CRC
  if (bytes.size() < kFixed) throw corrupt("file too short (" + std::to_string(bytes.size()) + " bytes)");
  if (!std::equal(kNtbMagic.begin(), kNtbMagic.end(), bytes.begin())) throw corrupt("bad magic");
  const std::size_t manifest_len = get_u32(bytes.data() + 8);
  if (manifest_len > bytes.size() - kFixed) throw corrupt("manifest length runs past end of file");

  const auto* manifest_begin = reinterpret_cast<const char*>(bytes.data() + 12);
  const std::span<const std::uint8_t> payload = bytes.subspan(12 + manifest_len, bytes.size() - kFixed - manifest_len);
  const std::uint32_t stored_crc = get_u32(bytes.data() + bytes.size() - 4);

  Json manifest;
  try {
    manifest = Json::parse(std::string_view(manifest_begin, manifest_len));
  } catch (const Json::parse_error& e) {
    throw corrupt(std::string("manifest is not JSON: ") + e.what());
  }

  TensorBundle bundle;
  std::vector<std::pair<std::size_t, std::size_t>> extents;
  try {
    const auto& meta = manifest.at("metadata");
    if (meta.contains("source")) bundle.source = meta["source"].get<std::string>();
    for (const auto& entry : manifest.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      if (entry.at("dtype").get<std::string>() != "f32") throw corrupt(name + ": unsupported dtype");
      Tensor t;
      t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      if (std::any_of(t.shape.begin(), t.shape.end(), [](std::int64_t d) { return d < 0; })) {
        throw corrupt(name + ": negative dimension");
      }
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto nbytes = entry.at("nbytes").get<std::size_t>();
      if (nbytes != t.numel() * sizeof(float)) throw corrupt(name + ": nbytes disagrees with shape");
      if (offset % sizeof(float) != 0) throw corrupt(name + ": misaligned offset");
      if (offset > payload.size() || nbytes > payload.size() - offset) {
        throw corrupt(name + ": [" + std::to_string(offset) + ", +" + std::to_string(nbytes) +
                      ") runs past payload of " + std::to_string(payload.size()) + " bytes");
      }
      t.data.resize(t.numel());
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        t.data[i] = std::bit_cast<float>(get_u32(payload.data() + offset + 4 * i));
      }
      if (!bundle.tensors.emplace(name, std::move(t)).second) throw corrupt("duplicate tensor '" + name + "'");
      extents.emplace_back(offset, nbytes);
    }
  } catch (const Json::exception& e) {
    throw corrupt(std::string("malformed manifest: ") + e.what());
  }

  std::sort(extents.begin(), extents.end());
  for (std::size_t i = 1; i < extents.size(); ++i) {
    if (extents[i - 1].first + extents[i - 1].second > extents[i].first) throw corrupt("overlapping tensors");
  }
  if (crc32(payload) != stored_crc) throw corrupt("payload checksum mismatch");
  return bundle;
}

void save_bundle(const TensorBundle& bundle, const std::filesystem::path& path) {
  const auto bytes = serialize_bundle(bundle);
  write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

TensorBundle load_bundle(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  return parse_bundle(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

}  // namespace chunkpipe
