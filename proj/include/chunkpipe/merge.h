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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chunkpipe {

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;  // row-major

  std::size_t numel() const;
};

struct TensorBundle {
  std::map<std::string, Tensor> tensors;
  std::string source;  // free-form label stored in the manifest metadata

  // Throws InvalidArgument if some tensor's shape does not match its data.
  void validate() const;
};

// Same names, same shapes, same source, and byte-identical f32 payloads.
bool bit_equal(const TensorBundle& a, const TensorBundle& b);

// Requires at least two bundles. Throws StructureMismatch naming the first
// tensor (in name order) that is missing somewhere or differs in shape.
void validate_compatible(std::span<const TensorBundle> bundles);

// Element-wise sum of w_i * x_i accumulated in f64 and rounded to f32 once.
// Weights default to uniform 1/n and are normalized to sum to 1. Inputs are
// summed in a canonical order (source label, weight, then payload bytes), so
// the result does not depend on argument order.
TensorBundle merge_linear(std::span<const TensorBundle> bundles,
                          const std::optional<std::vector<double>>& weights = std::nullopt);

// NTB container:
//   "NTBNDL01" | u32 LE manifest length | manifest JSON | f32 LE payload | u32 LE CRC-32(payload)
// manifest = {"tensors": [{name, shape, dtype: "f32", offset, nbytes}], "metadata": {"source"}}
// with offsets relative to the payload start.
inline constexpr std::string_view kNtbMagic = "NTBNDL01";

std::vector<std::uint8_t> serialize_bundle(const TensorBundle& bundle);
TensorBundle parse_bundle(std::span<const std::uint8_t> bytes);

void save_bundle(const TensorBundle& bundle, const std::filesystem::path& path);
TensorBundle load_bundle(const std::filesystem::path& path);

}  // namespace chunkpipe
