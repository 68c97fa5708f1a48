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
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "soupkit/csv.hpp"
#include "soupkit/inference.hpp"
#include "soupkit/manifest.hpp"
#include "soupkit/metrics.hpp"
#include "soupkit/tensor_store.hpp"

namespace soupkit {

/// Seeded generator with platform-independent transforms (the standard
/// distributions are implementation-defined, which would break golden files).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Checkpoint random_mlp_checkpoint(const MlpSpec& spec, Rng& rng, double scale = 1.0) {
  Checkpoint cp;
  for (const auto& [name, shape] : spec.schema().entries) {
    Tensor t{shape, std::vector<double>(element_count(shape))};
    for (double& v : t.data) v = scale * rng.normal();
    cp.tensors.emplace(name, std::move(t));
  }
  return cp;
}

/// theta + sigma * noise, same schema.
inline Checkpoint perturb(const Checkpoint& base, Rng& rng, double sigma) {
  Checkpoint out = base;
  for (auto& [name, t] : out.tensors) {
    for (double& v : t.data) v += sigma * rng.normal();
  }
  return out;
}

/// Gaussian features labelled by a teacher network's argmax, with a fraction
/// of labels replaced uniformly at random.
inline LabeledDataset teacher_dataset(const Checkpoint& teacher, const MlpSpec& spec, std::size_t n, Rng& rng,
                                      double label_noise = 0.1) {
  LabeledDataset ds;
  ds.num_classes = spec.output_size();
  ds.features = Matrix(n, spec.input_size());
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : ds.features.row(i)) v = rng.normal();
  }
  const Matrix z = logits(teacher, spec, ds.features);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t y = argmax(z.row(i));
    if (rng.uniform() < label_noise) y = rng.below(ds.num_classes);
    ds.labels.push_back(y);
  }
  return ds;
}

/// Row-stochastic matrix; smaller `temperature` gives peakier rows.
inline PredictionMatrix random_predictions(std::size_t n, std::size_t c, Rng& rng, double temperature = 1.0) {
  Matrix m(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : m.row(i)) v = rng.normal() / temperature;
    softmax_inplace(m.row(i));
  }
  return PredictionMatrix(std::move(m));
}

/// Mean negative log-likelihood of the labels, probabilities clamped at 1e-12.
inline double mean_cross_entropy(const PredictionMatrix& preds, std::span<const std::size_t> labels) {
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) sum -= std::log(std::max(preds(i, labels[i]), 1e-12));
  return sum / static_cast<double>(labels.size());
}

inline SnapshotMetrics snapshot_metrics(long long epoch, const Checkpoint& cp, const MlpSpec& spec,
                                        const LabeledDataset& val) {
  const PredictionMatrix p = forward(cp, spec, val);
  const MetricsReport r = macro_metrics(p, val.labels, val.num_classes);
  return {epoch, mean_cross_entropy(p, val.labels), r.accuracy, r.macro_f1};
}

struct FixtureOptions {
  std::uint64_t seed = 20240917;
  std::vector<std::size_t> layer_sizes = {4, 8, 3};
  std::size_t epochs = 30;
  std::size_t val_size = 60;
  std::size_t test_size = 90;
  double label_noise = 0.1;
};

/// Writes a self-contained synthetic workload: spec.json, val.csv, test.csv,
/// snapshots/epoch_NN.ckpt.json and manifest.json. The snapshots imitate a
/// training trajectory that decays from a random start toward a teacher
/// network, with per-epoch jitter.
inline void write_fixture(const std::filesystem::path& dir, const FixtureOptions& opts = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "snapshots", ec);
  if (ec) fail(ErrorKind::kIoError, "cannot create '" + (dir / "snapshots").string() + "'");

  Rng rng(opts.seed);
  const MlpSpec spec{opts.layer_sizes};
  const Checkpoint teacher = random_mlp_checkpoint(spec, rng, 1.0);
  const Checkpoint start = random_mlp_checkpoint(spec, rng, 1.0);
  const LabeledDataset val = teacher_dataset(teacher, spec, opts.val_size, rng, opts.label_noise);
  const LabeledDataset test = teacher_dataset(teacher, spec, opts.test_size, rng, opts.label_noise);

  write_text_file(dir / "spec.json", spec.to_json().dump(2) + "\n");
  save_dataset(val, dir / "val.csv");
  save_dataset(test, dir / "test.csv");

  std::vector<ManifestEntry> manifest;
  for (std::size_t e = 0; e < opts.epochs; ++e) {
    const double progress = std::exp(-0.15 * static_cast<double>(e + 1));
    const std::vector<double> w{1.0 - progress, progress};
    const std::vector<const Checkpoint*> ends{&teacher, &start};
    Checkpoint cp = perturb(linear_combine(ends, w), rng, 0.35);
    const auto epoch = static_cast<long long>(e + 1);
    cp.meta["epoch"] = std::to_string(epoch);
    std::string name = std::to_string(epoch);
    if (name.size() < 2) name.insert(0, "0");
    const std::string rel = "snapshots/epoch_" + name + ".ckpt.json";
    save_checkpoint(cp, dir / rel);
    manifest.push_back({snapshot_metrics(epoch, cp, spec, val), rel, ""});
  }
  write_text_file(dir / "manifest.json", manifest_to_json(manifest));
}

}  // namespace soupkit
