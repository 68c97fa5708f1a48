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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "soupkit/error.hpp"
#include "soupkit/linalg.hpp"
#include "soupkit/parallel.hpp"
#include "soupkit/tensor_store.hpp"

namespace soupkit {

inline constexpr double kSimplexTolerance = 1e-9;

/// Feature matrix (N x F) with integer labels in [0, num_classes).
struct LabeledDataset {
  Matrix features;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return features.cols(); }

  void validate() const {
    if (labels.empty() || features.rows() == 0) fail(ErrorKind::kInvalidArgument, "dataset has no samples");
    if (features.cols() == 0) fail(ErrorKind::kInvalidArgument, "dataset has no feature columns");
    if (features.rows() != labels.size()) {
      fail(ErrorKind::kLengthMismatch, "feature rows and labels differ in count");
    }
    if (num_classes == 0) fail(ErrorKind::kInvalidArgument, "dataset needs at least one class");
    for (std::size_t y : labels) {
      if (y >= num_classes) {
        fail(ErrorKind::kInvalidArgument,
             "label " + std::to_string(y) + " out of range for " + std::to_string(num_classes) + " classes");
      }
    }
  }
};

/// N x C matrix whose rows lie on the probability simplex.
class PredictionMatrix {
 public:
  PredictionMatrix() = default;
  explicit PredictionMatrix(Matrix probs) : probs_(std::move(probs)) { validate(); }

  std::size_t rows() const { return probs_.rows(); }
  std::size_t classes() const { return probs_.cols(); }
  std::span<const double> row(std::size_t i) const { return probs_.row(i); }
  double operator()(std::size_t i, std::size_t c) const { return probs_(i, c); }
  const Matrix& matrix() const { return probs_; }

  bool operator==(const PredictionMatrix&) const = default;

 private:
  void validate() const {
    if (probs_.rows() == 0 || probs_.cols() == 0) fail(ErrorKind::kInvalidArgument, "empty prediction matrix");
    for (std::size_t i = 0; i < probs_.rows(); ++i) {
      double sum = 0.0;
      for (double p : probs_.row(i)) {
        if (!(p >= 0.0 && p <= 1.0)) {
          fail(ErrorKind::kNotOnSimplex, "row " + std::to_string(i) + " has an entry outside [0,1]");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kSimplexTolerance) {
        fail(ErrorKind::kNotOnSimplex, "row " + std::to_string(i) + " sums to " + format_double(sum));
      }
    }
  }

  Matrix probs_;
};

/// Lowest index wins ties.
inline std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

/// Numerically stable softmax (max subtracted before exponentiation).
inline void softmax_inplace(std::span<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

// ---------------------------------------------------------------------------
// Reference MLP

/// Fully connected network [F, h1, ..., C], ReLU between layers, softmax on
/// top. Layer i reads "layer{i}.weight" ([out, in]) and "layer{i}.bias" ([out]).
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;

  std::size_t layer_count() const { return layer_sizes.empty() ? 0 : layer_sizes.size() - 1; }
  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }

  static std::string weight_name(std::size_t i) { return "layer" + std::to_string(i) + ".weight"; }
  static std::string bias_name(std::size_t i) { return "layer" + std::to_string(i) + ".bias"; }

  void validate() const {
    if (layer_sizes.size() < 2) fail(ErrorKind::kInvalidArgument, "MLP spec needs at least input and output sizes");
    for (std::size_t s : layer_sizes) {
      if (s == 0) fail(ErrorKind::kInvalidArgument, "MLP layer sizes must be positive");
    }
  }

  TensorSchema schema() const {
    validate();
    TensorSchema schema;
    for (std::size_t i = 0; i < layer_count(); ++i) {
      schema.entries.emplace(weight_name(i), Shape{layer_sizes[i + 1], layer_sizes[i]});
      schema.entries.emplace(bias_name(i), Shape{layer_sizes[i + 1]});
    }
    return schema;
  }

  void check(const Checkpoint& cp) const {
    const TensorSchema expected = schema();
    const TensorSchema actual = schema_of(cp);
    if (expected == actual) return;
    for (const auto& [name, shape] : expected.entries) {
      auto it = actual.entries.find(name);
      if (it == actual.entries.end() || it->second != shape) fail(ErrorKind::kSchemaMismatch, name);
    }
    for (const auto& [name, shape] : actual.entries) {
      if (!expected.entries.contains(name)) fail(ErrorKind::kSchemaMismatch, name);
    }
  }

  nlohmann::json to_json() const { return {{"layer_sizes", layer_sizes}}; }

  static MlpSpec from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("layer_sizes") || !j["layer_sizes"].is_array()) {
      fail(ErrorKind::kMalformedFile, "MLP spec needs a \"layer_sizes\" array");
    }
    MlpSpec spec;
    for (const auto& s : j["layer_sizes"]) {
      if (!s.is_number_unsigned()) fail(ErrorKind::kMalformedFile, "layer sizes must be positive integers");
      spec.layer_sizes.push_back(s.get<std::size_t>());
    }
    try {
      spec.validate();
    } catch (const Error& e) {
      fail(ErrorKind::kMalformedFile, e.detail());
    }
    return spec;
  }
};

/// Pre-softmax outputs, one row per input row.
inline Matrix logits(const Checkpoint& cp, const MlpSpec& spec, const Matrix& features) {
  spec.check(cp);
  if (features.cols() != spec.input_size()) {
    fail(ErrorKind::kDimensionMismatch, "features have " + std::to_string(features.cols()) +
                                            " columns, spec expects " + std::to_string(spec.input_size()));
  }
  std::vector<const Tensor*> weights, biases;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    weights.push_back(&cp.at(MlpSpec::weight_name(l)));
    biases.push_back(&cp.at(MlpSpec::bias_name(l)));
  }
  Matrix out(features.rows(), spec.output_size());
  parallel_for(features.rows(), [&](std::size_t r) {
    std::vector<double> h(features.row(r).begin(), features.row(r).end());
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
      const std::size_t in = spec.layer_sizes[l];
      const std::size_t outs = spec.layer_sizes[l + 1];
      const double* w = weights[l]->data.data();
      std::vector<double> z(outs);
      for (std::size_t o = 0; o < outs; ++o) {
        double acc = biases[l]->data[o];
        for (std::size_t i = 0; i < in; ++i) acc += w[o * in + i] * h[i];
        z[o] = (l + 1 < spec.layer_count()) ? std::max(acc, 0.0) : acc;
      }
      h = std::move(z);
    }
    std::copy(h.begin(), h.end(), out.row(r).begin());
  });
  return out;
}

inline PredictionMatrix forward(const Checkpoint& cp, const MlpSpec& spec, const Matrix& features) {
  Matrix z = logits(cp, spec, features);
  for (std::size_t r = 0; r < z.rows(); ++r) softmax_inplace(z.row(r));
  return PredictionMatrix(std::move(z));
}

inline PredictionMatrix forward(const Checkpoint& cp, const MlpSpec& spec, const LabeledDataset& ds) {
  return forward(cp, spec, ds.features);
}

}  // namespace soupkit
