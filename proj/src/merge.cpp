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

#include "chunkpipe/merge.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include "chunkpipe/error.h"

namespace chunkpipe {
namespace {

std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

int compare_payload(const TensorBundle& a, const TensorBundle& b) {
  // Called only on compatible bundles: identical names and shapes.
  for (const auto& [name, ta] : a.tensors) {
    const Tensor& tb = b.tensors.at(name);
    int c = std::memcmp(ta.data.data(), tb.data.data(), ta.data.size() * sizeof(float));
    if (c != 0) return c;
  }
  return 0;
}

std::vector<double> normalized_weights(std::size_t n, const std::optional<std::vector<double>>& weights) {
  if (!weights) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (weights->size() != n) {
    throw Error(ErrorCode::kBadWeights,
                std::to_string(weights->size()) + " weights for " + std::to_string(n) + " bundles");
  }
  double sum = 0.0;
  for (double w : *weights) {
    if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::kBadWeights, "weights must be finite and >= 0");
    sum += w;
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::kBadWeights, "weights sum to zero");
  std::vector<double> out(*weights);
  for (double& w : out) w /= sum;
  return out;
}

}  // namespace

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

void TensorBundle::validate() const {
  for (const auto& [name, t] : tensors) {
    if (name.empty()) throw Error(ErrorCode::kInvalidArgument, "tensor with empty name");
    for (auto d : t.shape) {
      if (d < 0) throw Error(ErrorCode::kInvalidArgument, name + ": negative dimension");
    }
    if (t.numel() != t.data.size()) {
      throw Error(ErrorCode::kInvalidArgument, name + ": shape " + shape_string(t.shape) + " holds " +
                                                   std::to_string(t.numel()) + " elements, data has " +
                                                   std::to_string(t.data.size()));
    }
  }
}

bool bit_equal(const TensorBundle& a, const TensorBundle& b) {
  if (a.source != b.source || a.tensors.size() != b.tensors.size()) return false;
  for (const auto& [name, ta] : a.tensors) {
    auto it = b.tensors.find(name);
    if (it == b.tensors.end()) return false;
    const Tensor& tb = it->second;
    if (ta.shape != tb.shape || ta.data.size() != tb.data.size()) return false;
    if (std::memcmp(ta.data.data(), tb.data.data(), ta.data.size() * sizeof(float)) != 0) return false;
  }
  return true;
}

void validate_compatible(std::span<const TensorBundle> bundles) {
  if (bundles.size() < 2) throw Error(ErrorCode::kInvalidArgument, "merging needs at least two bundles");
  std::set<std::string> names;
  for (const auto& b : bundles) {
    b.validate();
    for (const auto& [name, _] : b.tensors) names.insert(name);
  }
  const TensorBundle& ref = bundles.front();
  for (const auto& name : names) {
    const auto ref_it = ref.tensors.find(name);
    for (std::size_t i = 0; i < bundles.size(); ++i) {
      const auto it = bundles[i].tensors.find(name);
      if (it == bundles[i].tensors.end() || ref_it == ref.tensors.end()) {
        throw Error(ErrorCode::kStructureMismatch, name + ": missing from bundle " +
                                                       std::to_string(it == bundles[i].tensors.end() ? i : 0));
      }
      if (it->second.shape != ref_it->second.shape) {
        throw Error(ErrorCode::kStructureMismatch, name + ": shape " + shape_string(it->second.shape) +
                                                       " in bundle " + std::to_string(i) + " vs " +
                                                       shape_string(ref_it->second.shape));
      }
    }
  }
}

TensorBundle merge_linear(std::span<const TensorBundle> bundles, const std::optional<std::vector<double>>& weights) {
  validate_compatible(bundles);
  const std::vector<double> w = normalized_weights(bundles.size(), weights);

  std::vector<std::size_t> order(bundles.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (bundles[a].source != bundles[b].source) return bundles[a].source < bundles[b].source;
    if (w[a] != w[b]) return w[a] < w[b];
    return compare_payload(bundles[a], bundles[b]) < 0;
  });

  TensorBundle out;
  out.source = "merge(";
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) out.source += ",";
    out.source += bundles[order[i]].source;
  }
  out.source += ")";

  std::vector<double> acc;
  for (const auto& [name, ref] : bundles.front().tensors) {
    acc.assign(ref.data.size(), 0.0);
    for (std::size_t idx : order) {
      const auto& x = bundles[idx].tensors.at(name).data;
      const double wi = w[idx];
      for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += wi * static_cast<double>(x[e]);
    }
    Tensor t;
    t.shape = ref.shape;
    t.data.resize(acc.size());
    for (std::size_t e = 0; e < acc.size(); ++e) t.data[e] = static_cast<float>(acc[e]);
    out.tensors.emplace(name, std::move(t));
  }
  return out;
}

}  // namespace chunkpipe
