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

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "soupkit/error.hpp"
#include "soupkit/io.hpp"
#include "soupkit/soup.hpp"
#include "soupkit/tensor_store.hpp"

namespace soupkit {

/// One line of a pool manifest: a snapshot's validation metrics and the
/// checkpoint file holding its weights. `source` is set on filtered pools.
struct ManifestEntry {
  SnapshotMetrics metrics;
  std::string path;
  std::string source;
};

inline std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& origin = "<memory>") {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kMalformedFile, origin + ": invalid JSON (" + e.what() + ")");
  }
  if (!doc.is_array()) fail(ErrorKind::kMalformedFile, origin + ": manifest must be a JSON list");
  std::vector<ManifestEntry> entries;
  for (const json& e : doc) {
    try {
      ManifestEntry m;
      m.metrics.epoch = e.at("epoch").get<long long>();
      m.path = e.at("path").get<std::string>();
      m.metrics.loss = e.at("loss").get<double>();
      m.metrics.accuracy = e.at("accuracy").get<double>();
      m.metrics.f1 = e.at("f1").get<double>();
      if (e.contains("source")) m.source = e.at("source").get<std::string>();
      entries.push_back(std::move(m));
    } catch (const json::exception& ex) {
      fail(ErrorKind::kMalformedFile, origin + ": bad manifest entry (" + ex.what() + ")");
    }
  }
  return entries;
}

inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text_file(path), path.string());
}

inline std::string manifest_to_json(const std::vector<ManifestEntry>& entries) {
  nlohmann::json doc = nlohmann::json::array();
  for (const ManifestEntry& m : entries) {
    nlohmann::json e = {{"epoch", m.metrics.epoch},
                        {"path", m.path},
                        {"loss", m.metrics.loss},
                        {"accuracy", m.metrics.accuracy},
                        {"f1", m.metrics.f1}};
    if (!m.source.empty()) e["source"] = m.source;
    doc.push_back(e);
  }
  return doc.dump(2) + "\n";
}

/// Relative checkpoint paths are taken relative to the manifest's directory.
inline std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest, const std::string& entry) {
  const std::filesystem::path p(entry);
  return p.is_absolute() ? p : manifest.parent_path() / p;
}

inline std::vector<Snapshot> load_snapshots(const std::filesystem::path& manifest,
                                            const std::vector<ManifestEntry>& entries) {
  std::vector<Snapshot> out;
  for (const ManifestEntry& e : entries) out.push_back({e.metrics, load_checkpoint(resolve_entry_path(manifest, e.path))});
  return out;
}

/// Pool in manifest order; tags come from each entry's `source` field.
inline CandidatePool pool_from_manifest(const std::filesystem::path& manifest) {
  const auto entries = load_manifest(manifest);
  if (entries.empty()) fail(ErrorKind::kEmptyPool, "empty snapshot list");
  CandidatePool pool;
  for (const ManifestEntry& e : entries) {
    pool.checkpoints.push_back(load_checkpoint(resolve_entry_path(manifest, e.path)));
    pool.source_tags.push_back(e.source);
    pool.epoch_ids.push_back(e.metrics.epoch);
  }
  schema_check(pool.pointers());
  return pool;
}

}  // namespace soupkit
