/* Copyright 2026 The soupkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "soupkit/error.hpp"
#include "soupkit/io.hpp"

namespace soupkit {

using Shape = std::vector<std::size_t>;

inline constexpr const char* kCheckpointFormat = "soupkit-ckpt-v1";

inline std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

/// Dense row-major tensor of doubles.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  std::size_t size() const { return data.size(); }
  bool operator==(const Tensor&) const = default;
};

/// Named tensors plus free-form string metadata. std::map keeps names in
/// lexicographic order, which fixes iteration and serialization order.
struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> meta;

  const Tensor& at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) fail(ErrorKind::kSchemaMismatch, "missing tensor '" + name + "'");
    return it->second;
  }
  bool operator==(const Checkpoint&) const = default;
};

struct TensorSchema {
  std::map<std::string, Shape> entries;
  bool operator==(const TensorSchema&) const = default;
};

inline TensorSchema schema_of(const Checkpoint& cp) {
  TensorSchema schema;
  for (const auto& [name, tensor] : cp.tensors) schema.entries.emplace(name, tensor.shape);
  return schema;
}

/// Throws `kind` if any Tensor/Checkpoint invariant is violated.
inline void validate_checkpoint(const Checkpoint& cp, ErrorKind kind = ErrorKind::kInvalidArgument) {
  for (const auto& [name, tensor] : cp.tensors) {
    if (name.empty()) fail(kind, "tensor name must be nonempty");
    for (std::size_t d : tensor.shape) {
      if (d == 0) fail(kind, "tensor '" + name + "' has an empty dimension");
    }
    if (element_count(tensor.shape) != tensor.data.size()) {
      fail(kind, "tensor '" + name + "' declares shape " + shape_to_string(tensor.shape) +
                     " but carries " + std::to_string(tensor.data.size()) + " values");
    }
    for (double v : tensor.data) {
      if (!std::isfinite(v)) fail(kind, "tensor '" + name + "' contains a non-finite value");
    }
  }
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string serialize_checkpoint(const Checkpoint& cp) {
  validate_checkpoint(cp);
  using nlohmann::json;
  std::string out = "{\n  \"format\": \"";
  out += kCheckpointFormat;
  out += "\",\n  \"meta\": {";
  bool first = true;
  for (const auto& [key, value] : cp.meta) {
    if (!first) out += ", ";
    first = false;
    out += json(key).dump() + ": " + json(value).dump();
  }
  out += "},\n  \"tensors\": {";
  first = true;
  for (const auto& [name, tensor] : cp.tensors) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "    " + json(name).dump() + ": {\"shape\": [";
    for (std::size_t i = 0; i < tensor.shape.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(tensor.shape[i]);
    }
    out += "], \"data\": [";
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
      if (i) out += ", ";
      out += format_json_double(tensor.data[i]);
    }
    out += "]}";
  }
  out += first ? "}\n}\n" : "\n  }\n}\n";
  return out;
}

inline Checkpoint parse_checkpoint(const std::string& text, const std::string& origin = "<memory>") {
  using nlohmann::json;
  auto bad = [&](const std::string& why) -> void {
    fail(ErrorKind::kMalformedFile, origin + ": " + why);
  };
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("invalid JSON (") + e.what() + ")");
  }
  if (!doc.is_object()) bad("top level must be an object");
  if (!doc.contains("format") || doc["format"] != kCheckpointFormat) {
    bad(std::string("missing or unsupported \"format\" (expected \"") + kCheckpointFormat + "\")");
  }
  Checkpoint cp;
  if (doc.contains("meta")) {
    if (!doc["meta"].is_object()) bad("\"meta\" must be an object");
    for (const auto& [key, value] : doc["meta"].items()) {
      if (!value.is_string()) bad("meta value for '" + key + "' must be a string");
      cp.meta.emplace(key, value.get<std::string>());
    }
  }
  if (!doc.contains("tensors") || !doc["tensors"].is_object()) bad("\"tensors\" must be an object");
  for (const auto& [name, entry] : doc["tensors"].items()) {
    if (!entry.is_object() || !entry.contains("shape") || !entry.contains("data")) {
      bad("tensor '" + name + "' needs \"shape\" and \"data\"");
    }
    const json& shape = entry["shape"];
    const json& data = entry["data"];
    if (!shape.is_array() || !data.is_array()) bad("tensor '" + name + "' shape/data must be arrays");
    Tensor t;
    for (const json& d : shape) {
      if (!d.is_number_unsigned() || d.get<std::uint64_t>() == 0) {
        bad("tensor '" + name + "' shape entries must be positive integers");
      }
      t.shape.push_back(d.get<std::size_t>());
    }
    t.data.reserve(data.size());
    for (const json& v : data) {
      if (!v.is_number()) bad("tensor '" + name + "' data must be numeric");
      t.data.push_back(v.get<double>());
    }
    cp.tensors.emplace(name, std::move(t));
  }
  validate_checkpoint(cp, ErrorKind::kMalformedFile);
  return cp;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_text_file(path), path.string());
}

inline void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
  write_text_file(path, serialize_checkpoint(cp));
}

// ---------------------------------------------------------------------------
// Schema agreement and linear combination

/// Common schema of a nonempty checkpoint list. On disagreement the error
/// names the lexicographically first offending tensor.
inline TensorSchema schema_check(std::span<const Checkpoint* const> cps) {
  if (cps.empty()) fail(ErrorKind::kEmptyPool, "empty checkpoint list");
  TensorSchema reference = schema_of(*cps.front());
  for (const Checkpoint* cp : cps.subspan(1)) {
    TensorSchema other = schema_of(*cp);
    if (other == reference) continue;
    // Walk both sorted name lists together to find the first disagreement.
    auto a = reference.entries.begin();
    auto b = other.entries.begin();
    while (a != reference.entries.end() || b != other.entries.end()) {
      if (a == reference.entries.end()) fail(ErrorKind::kSchemaMismatch, b->first);
      if (b == other.entries.end()) fail(ErrorKind::kSchemaMismatch, a->first);
      if (a->first != b->first) fail(ErrorKind::kSchemaMismatch, std::min(a->first, b->first));
      if (a->second != b->second) fail(ErrorKind::kSchemaMismatch, a->first);
      ++a;
      ++b;
    }
  }
  return reference;
}

inline TensorSchema schema_check(std::span<const Checkpoint> cps) {
  std::vector<const Checkpoint*> ptrs;
  for (const Checkpoint& cp : cps) ptrs.push_back(&cp);
  return schema_check(std::span<const Checkpoint* const>(ptrs));
}

namespace detail {

// Error-free transformations (Knuth TwoSum, Dekker TwoProduct).
inline void two_sum(double a, double b, double& sum, double& err) {
  sum = a + b;
  const double bb = sum - a;
  err = (a - (sum - bb)) + (b - bb);
}

inline void split(double a, double& hi, double& lo) {
  constexpr double kSplitter = 134217729.0;  // 2^27 + 1
  const double c = kSplitter * a;
  hi = c - (c - a);
  lo = a - hi;
}

inline void two_product(double a, double b, double& prod, double& err) {
  prod = a * b;
  double ah, al, bh, bl;
  split(a, ah, al);
  split(b, bh, bl);
  err = al * bl - (((prod - ah * bh) - al * bh) - ah * bl);
}

}  // namespace detail

/// out[i] = sum_k weights[k] * cps[k][i], summed left to right over k with
/// compensated (double-double) accumulation, so that e.g. averaging copies of
/// one checkpoint with weights 1/n returns it unchanged.
inline Checkpoint linear_combine(std::span<const Checkpoint* const> cps, std::span<const double> weights) {
  if (cps.size() != weights.size()) {
    fail(ErrorKind::kLengthMismatch, std::to_string(cps.size()) + " checkpoints but " +
                                         std::to_string(weights.size()) + " weights");
  }
  schema_check(cps);
  for (double w : weights) {
    if (!std::isfinite(w)) fail(ErrorKind::kInvalidArgument, "non-finite combination weight");
  }
  Checkpoint out;
  for (const auto& [name, first] : cps.front()->tensors) {
    const std::size_t n = first.data.size();
    std::vector<const double*> sources;
    sources.reserve(cps.size());
    for (const Checkpoint* cp : cps) sources.push_back(cp->tensors.at(name).data.data());
    Tensor t{first.shape, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      double sum, comp;
      detail::two_product(weights[0], sources[0][i], sum, comp);
      for (std::size_t k = 1; k < sources.size(); ++k) {
        double prod, prod_err, sum_err;
        detail::two_product(weights[k], sources[k][i], prod, prod_err);
        detail::two_sum(sum, prod, sum, sum_err);
        comp += sum_err + prod_err;
      }
      t.data[i] = comp == 0.0 ? sum : sum + comp;
    }
    out.tensors.emplace(name, std::move(t));
  }
  return out;
}

inline Checkpoint linear_combine(std::span<const Checkpoint> cps, std::span<const double> weights) {
  std::vector<const Checkpoint*> ptrs;
  for (const Checkpoint& cp : cps) ptrs.push_back(&cp);
  return linear_combine(std::span<const Checkpoint* const>(ptrs), weights);
}

/// Equal-weight average, weights 1/n.
inline Checkpoint average(std::span<const Checkpoint* const> cps) {
  if (cps.empty()) fail(ErrorKind::kEmptyPool, "cannot average an empty checkpoint list");
  const std::vector<double> weights(cps.size(), 1.0 / static_cast<double>(cps.size()));
  return linear_combine(cps, weights);
}

}  // namespace soupkit
