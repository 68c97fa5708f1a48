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

#include <vector>

#include "soupkit/inference.hpp"
#include "soupkit/synthetic.hpp"

namespace soupkit::testing {

inline PredictionMatrix predictions(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return PredictionMatrix(std::move(m));
}

/// Rows built from small integer weights, so argmax ties and never-predicted
/// classes are common.
inline PredictionMatrix tied_predictions(std::size_t n, std::size_t c, Rng& rng) {
  Matrix m(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (double& v : m.row(i)) total += (v = static_cast<double>(rng.below(3)));
    if (total == 0.0) {
      m(i, rng.below(c)) = 1.0;
      total = 1.0;
    }
    for (double& v : m.row(i)) v /= total;
  }
  return PredictionMatrix(std::move(m));
}

inline std::vector<std::size_t> random_labels(std::size_t n, std::size_t c, Rng& rng) {
  std::vector<std::size_t> out(n);
  for (auto& y : out) y = rng.below(c);
  return out;
}

}  // namespace soupkit::testing
