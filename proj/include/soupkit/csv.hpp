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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "soupkit/error.hpp"
#include "soupkit/inference.hpp"
#include "soupkit/io.hpp"

namespace soupkit {

// Dataset CSV: header "f1,...,fF,label", then one sample per row.

inline LabeledDataset parse_dataset_csv(std::string_view text, std::optional<std::size_t> num_classes = {},
                                        const std::string& origin = "<memory>") {
  auto bad = [&](const std::string& why) { fail(ErrorKind::kMalformedFile, origin + ": " + why); };
  const auto lines = lines_of(text);
  if (lines.empty()) bad("empty dataset file");
  const auto header = split(lines[0], ',');
  if (header.size() < 2 || header.back() != "label") bad("header must be f1,...,fF,label");
  const std::size_t width = header.size() - 1;
  for (std::size_t i = 0; i < width; ++i) {
    if (header[i] != "f" + std::to_string(i + 1)) bad("header column " + std::to_string(i + 1) + " must be f" +
                                                      std::to_string(i + 1));
  }
  if (lines.size() < 2) bad("dataset has no samples");
  LabeledDataset ds;
  ds.features = Matrix(lines.size() - 1, width);
  std::size_t max_label = 0;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split(lines[r], ',');
    if (fields.size() != width + 1) bad("line " + std::to_string(r + 1) + " has the wrong number of fields");
    for (std::size_t c = 0; c < width; ++c) {
      auto v = parse_double(fields[c]);
      if (!v || !std::isfinite(*v)) bad("line " + std::to_string(r + 1) + " has a bad feature value");
      ds.features(r - 1, c) = *v;
    }
    auto label = parse_integer(fields[width]);
    if (!label || *label < 0) bad("line " + std::to_string(r + 1) + " has a bad label");
    ds.labels.push_back(static_cast<std::size_t>(*label));
    max_label = std::max(max_label, static_cast<std::size_t>(*label));
  }
  ds.num_classes = num_classes.value_or(max_label + 1);
  try {
    ds.validate();
  } catch (const Error& e) {
    bad(e.detail());
  }
  return ds;
}

inline LabeledDataset load_dataset(const std::filesystem::path& path, std::optional<std::size_t> num_classes = {}) {
  return parse_dataset_csv(read_text_file(path), num_classes, path.string());
}

inline std::string dataset_to_csv(const LabeledDataset& ds) {
  std::string out;
  for (std::size_t c = 0; c < ds.feature_count(); ++c) out += "f" + std::to_string(c + 1) + ",";
  out += "label\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (double v : ds.features.row(r)) out += format_double(v) + ",";
    out += std::to_string(ds.labels[r]) + "\n";
  }
  return out;
}

inline void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
  write_text_file(path, dataset_to_csv(ds));
}

// Prediction CSV: header "p0,...,p{C-1}", one probability row per sample.

inline PredictionMatrix parse_predictions_csv(std::string_view text, const std::string& origin = "<memory>") {
  auto bad = [&](const std::string& why) { fail(ErrorKind::kMalformedFile, origin + ": " + why); };
  const auto lines = lines_of(text);
  if (lines.empty()) bad("empty prediction file");
  const auto header = split(lines[0], ',');
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != "p" + std::to_string(i)) bad("header must be p0,...,p{C-1}");
  }
  if (lines.size() < 2) bad("prediction file has no rows");
  Matrix m(lines.size() - 1, header.size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split(lines[r], ',');
    if (fields.size() != header.size()) bad("line " + std::to_string(r + 1) + " has the wrong number of fields");
    for (std::size_t c = 0; c < fields.size(); ++c) {
      auto v = parse_double(fields[c]);
      if (!v) bad("line " + std::to_string(r + 1) + " has a bad probability");
      m(r - 1, c) = *v;
    }
  }
  try {
    return PredictionMatrix(std::move(m));
  } catch (const Error& e) {
    fail(e.kind() == ErrorKind::kNotOnSimplex ? e.kind() : ErrorKind::kMalformedFile, origin + ": " + e.detail());
  }
}

inline PredictionMatrix load_predictions(const std::filesystem::path& path) {
  return parse_predictions_csv(read_text_file(path), path.string());
}

inline std::string predictions_to_csv(const PredictionMatrix& p) {
  std::string out;
  for (std::size_t c = 0; c < p.classes(); ++c) out += (c ? ",p" : "p") + std::to_string(c);
  out += "\n";
  for (std::size_t r = 0; r < p.rows(); ++r) {
    for (std::size_t c = 0; c < p.classes(); ++c) {
      if (c) out += ",";
      out += format_double(p(r, c));
    }
    out += "\n";
  }
  return out;
}

inline void save_predictions(const PredictionMatrix& p, const std::filesystem::path& path) {
  write_text_file(path, predictions_to_csv(p));
}

}  // namespace soupkit
