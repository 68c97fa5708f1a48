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
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "soupkit/error.hpp"
#include "soupkit/inference.hpp"
#include "soupkit/io.hpp"
#include "soupkit/linalg.hpp"
#include "soupkit/metrics.hpp"
#include "soupkit/parallel.hpp"

namespace soupkit {

inline constexpr double kLogClamp = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Soft voting

/// Row-wise mean of the members' probabilities. Each cell sums its addends
/// in sorted order, so the result does not depend on the member order.
inline PredictionMatrix soft_vote(std::span<const PredictionMatrix> preds) {
  if (preds.empty()) fail(ErrorKind::kEmptyList, "soft voting needs at least one model");
  const std::size_t n = preds.front().rows();
  const std::size_t c = preds.front().classes();
  for (const PredictionMatrix& p : preds) {
    if (p.rows() != n || p.classes() != c) fail(ErrorKind::kShapeMismatch, "prediction matrices differ in shape");
  }
  const double m = static_cast<double>(preds.size());
  Matrix out(n, c);
  std::vector<double> cell(preds.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t k = 0; k < preds.size(); ++k) cell[k] = preds[k](i, j);
      std::sort(cell.begin(), cell.end());
      double sum = 0.0;
      for (double v : cell) sum += v;
      out(i, j) = sum / m;
    }
  }
  return PredictionMatrix(std::move(out));
}

// ---------------------------------------------------------------------------
// Symmetric cross-entropy

namespace detail {

// H(p, q) = -sum_j p_j log q_j, with q_j clamped to [kLogClamp, 1].
inline double cross_entropy(std::span<const double> p, std::span<const double> q) {
  double h = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double qj = std::clamp(q[j], kLogClamp, 1.0);
    h -= p[j] * std::log(qj);
  }
  return h;
}

inline double sym_cross_entropy_unchecked(std::span<const double> p, std::span<const double> q) {
  return cross_entropy(p, q) + cross_entropy(q, p);
}

inline void check_simplex(std::span<const double> p, const char* which) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::kNotOnSimplex, std::string(which) + " has an entry outside [0,1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) fail(ErrorKind::kNotOnSimplex, std::string(which) + " does not sum to 1");
}

}  // namespace detail

/// H(p,q) + H(q,p) in nats (no 1/2 factor).
inline double sym_cross_entropy(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) fail(ErrorKind::kShapeMismatch, "probability vectors differ in length");
  detail::check_simplex(p, "p");
  detail::check_simplex(q, "q");
  return detail::sym_cross_entropy_unchecked(p, q);
}

// ---------------------------------------------------------------------------
// Distance matrix

struct DistanceMatrix {
  std::vector<std::string> names;
  Matrix values;
  /// Mean self-distance 2*H(p) per model, before the diagonal was zeroed.
  std::vector<double> raw_diagonal;
  bool diagonal_zeroed = true;

  std::size_t size() const { return values.rows(); }
};

namespace detail {

inline void check_names(std::span<const std::string> names, std::size_t expected) {
  if (names.size() != expected) fail(ErrorKind::kLengthMismatch, "one name per model is required");
  std::set<std::string> seen;
  for (const std::string& n : names) {
    if (n.empty() || n.find_first_of(",\n\r\"") != std::string::npos) {
      fail(ErrorKind::kInvalidArgument, "model name '" + n + "' is empty or contains CSV separators");
    }
    if (!seen.insert(n).second) fail(ErrorKind::kInvalidArgument, "duplicate model name '" + n + "'");
  }
}

}  // namespace detail

/// Dist(f,g) = mean over samples of the symmetric cross-entropy between the
/// two models' probability rows. The diagonal is stored as 0.
inline DistanceMatrix distance_matrix(std::span<const PredictionMatrix> preds, std::span<const std::string> names) {
  if (preds.size() < 2) fail(ErrorKind::kTooFewModels, "need at least 2 models, got " + std::to_string(preds.size()));
  detail::check_names(names, preds.size());
  const std::size_t n = preds.front().rows();
  const std::size_t c = preds.front().classes();
  for (const PredictionMatrix& p : preds) {
    if (p.rows() != n || p.classes() != c) fail(ErrorKind::kShapeMismatch, "prediction matrices differ in shape");
  }

  const std::size_t m = preds.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> pair_values(pairs.size());
  parallel_for(
      pairs.size(),
      [&](std::size_t k) {
        const auto [f, g] = pairs[k];
        double sum = 0.0;
        for (std::size_t s = 0; s < n; ++s) sum += detail::sym_cross_entropy_unchecked(preds[f].row(s), preds[g].row(s));
        pair_values[k] = sum / static_cast<double>(n);
      },
      1);

  DistanceMatrix d;
  d.names.assign(names.begin(), names.end());
  d.values = Matrix(m, m);
  d.raw_diagonal.assign(m, 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [f, g] = pairs[k];
    if (f == g) {
      d.raw_diagonal[f] = pair_values[k];
    } else {
      d.values(f, g) = pair_values[k];
      d.values(g, f) = pair_values[k];
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Classical (Torgerson) MDS

struct Embedding {
  std::vector<std::string> names;
  Matrix coords;                  // n x d, column means 0
  std::vector<double> eigenvalues;  // retained, descending, clamped at 0
  std::vector<double> spectrum;     // every eigenvalue of B, descending, unclamped
  int sweeps = 0;
  bool converged = false;

  std::size_t dims() const { return coords.cols(); }
};

/// Double-centers the squared dissimilarities, B = -1/2 J (D o D) J, and
/// embeds with the top-d eigenvectors scaled by sqrt(max(lambda, 0)).
inline Embedding classical_mds(const Matrix& dissimilarities, std::size_t dims,
                               std::span<const std::string> names = {}) {
  const std::size_t n = dissimilarities.rows();
  if (dissimilarities.cols() != n) fail(ErrorKind::kAsymmetricInput, "distance matrix is not square");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(dissimilarities(i, i)) > kSymmetryTolerance) {
      fail(ErrorKind::kAsymmetricInput, "distance matrix diagonal must be zero");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = dissimilarities(i, j);
      const double b = dissimilarities(j, i);
      if (!std::isfinite(a) || !std::isfinite(b) || std::abs(a - b) > kSymmetryTolerance) {
        fail(ErrorKind::kAsymmetricInput, "distance matrix is not symmetric at (" + std::to_string(i) + "," +
                                              std::to_string(j) + ")");
      }
      if (a < 0.0 || b < 0.0) fail(ErrorKind::kInvalidArgument, "distances must be non-negative");
    }
  }
  if (dims == 0) fail(ErrorKind::kInvalidArgument, "target dimension must be positive");
  if (n < dims + 1) {
    fail(ErrorKind::kDimensionTooLarge, std::to_string(n) + " points cannot be embedded in " +
                                            std::to_string(dims) + " dimensions");
  }

  Matrix sq(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      // Read the upper triangle only so that B comes out exactly symmetric.
      const double v = i <= j ? dissimilarities(i, j) : dissimilarities(j, i);
      sq(i, j) = v * v;
    }
  }
  std::vector<double> row_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row_mean[i] += sq(i, j);
    grand += row_mean[i];
    row_mean[i] /= static_cast<double>(n);
  }
  grand /= static_cast<double>(n * n);
  Matrix b(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = -0.5 * (sq(i, j) - row_mean[i] - row_mean[j] + grand);
      b(i, j) = v;
      b(j, i) = v;
    }
  }

  const EigenDecomposition eig = jacobi_eigen(std::move(b));
  Embedding emb;
  if (names.empty()) {
    for (std::size_t i = 0; i < n; ++i) emb.names.push_back("m" + std::to_string(i));
  } else {
    detail::check_names(names, n);
    emb.names.assign(names.begin(), names.end());
  }
  emb.spectrum = eig.values;
  emb.sweeps = eig.sweeps;
  emb.converged = eig.converged;
  emb.coords = Matrix(n, dims);
  for (std::size_t k = 0; k < dims; ++k) {
    const double lambda = std::max(eig.values[k], 0.0);
    emb.eigenvalues.push_back(lambda);
    const double scale = std::sqrt(lambda);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      emb.coords(i, k) = eig.vectors(i, k) * scale;
      mean += emb.coords(i, k);
    }
    // Near-null eigenvectors can pick up a component along the all-ones
    // direction; remove it so every column is centered.
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) emb.coords(i, k) -= mean;
  }
  return emb;
}

inline Embedding classical_mds(const DistanceMatrix& d, std::size_t dims) {
  return classical_mds(d.values, dims, d.names);
}

inline double embedded_distance(const Matrix& coords, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < coords.cols(); ++k) {
    const double diff = coords(i, k) - coords(j, k);
    s += diff * diff;
  }
  return std::sqrt(s);
}

/// Kruskal stress-1 normalised by the input dissimilarities:
/// sqrt(sum_{i<j} (D_ij - dhat_ij)^2 / sum_{i<j} D_ij^2).
inline double stress(const Matrix& dissimilarities, const Matrix& coords) {
  const std::size_t n = dissimilarities.rows();
  if (dissimilarities.cols() != n || coords.rows() != n) {
    fail(ErrorKind::kShapeMismatch, "embedding and distance matrix sizes differ");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dij = dissimilarities(i, j);
      const double diff = dij - embedded_distance(coords, i, j);
      num += diff * diff;
      den += dij * dij;
    }
  }
  if (den == 0.0) fail(ErrorKind::kDegenerateDistances, "all input distances are zero");
  return std::sqrt(num / den);
}

inline double stress(const DistanceMatrix& d, const Embedding& emb) { return stress(d.values, emb.coords); }

// ---------------------------------------------------------------------------
// Diversity analysis bundle

struct ModelOutput {
  std::string name;
  std::string role;  // "ingredient", "soup", "soft_vote"
  PredictionMatrix predictions;
  std::optional<double> accuracy;
};

struct DiversityReport {
  std::vector<std::string> roles;
  std::vector<std::optional<double>> accuracies;
  DistanceMatrix distances;
  Embedding embedding;
  std::optional<double> stress;  // absent when every distance is zero
};

inline DiversityReport diversity_report(std::span<const ModelOutput> models, std::size_t dims = 2) {
  std::vector<PredictionMatrix> preds;
  std::vector<std::string> names;
  DiversityReport r;
  for (const ModelOutput& m : models) {
    preds.push_back(m.predictions);
    names.push_back(m.name);
    r.roles.push_back(m.role);
    r.accuracies.push_back(m.accuracy);
  }
  r.distances = distance_matrix(preds, names);
  r.embedding = classical_mds(r.distances, std::min(dims, models.size() - 1));
  if (r.embedding.dims() < dims) {
    // Too few models for the requested dimension: pad with zero axes.
    Matrix padded(r.embedding.coords.rows(), dims);
    for (std::size_t i = 0; i < padded.rows(); ++i) {
      for (std::size_t k = 0; k < r.embedding.dims(); ++k) padded(i, k) = r.embedding.coords(i, k);
    }
    r.embedding.coords = std::move(padded);
    r.embedding.eigenvalues.resize(dims, 0.0);
  }
  try {
    r.stress = stress(r.distances, r.embedding);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kDegenerateDistances) throw;
  }
  return r;
}

inline std::string distances_to_csv(const DistanceMatrix& d) {
  std::string out = "model";
  for (const std::string& n : d.names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    out += d.names[i];
    for (std::size_t j = 0; j < d.size(); ++j) out += "," + format_double(d.values(i, j));
    out += "\n";
  }
  return out;
}

inline DistanceMatrix parse_distances_csv(std::string_view text, const std::string& origin = "<memory>") {
  auto bad = [&](const std::string& why) { fail(ErrorKind::kMalformedFile, origin + ": " + why); };
  const auto lines = lines_of(text);
  if (lines.empty()) bad("empty distance file");
  const auto header = split(lines[0], ',');
  if (header.empty() || header[0] != "model") bad("header must start with 'model'");
  const std::size_t m = header.size() - 1;
  if (lines.size() != m + 1) bad("distance matrix must be square");
  DistanceMatrix d;
  d.values = Matrix(m, m);
  d.raw_diagonal.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    d.names.emplace_back(header[i + 1]);
    const auto fields = split(lines[i + 1], ',');
    if (fields.size() != m + 1 || fields[0] != header[i + 1]) bad("row " + std::to_string(i + 1) + " is malformed");
    for (std::size_t j = 0; j < m; ++j) {
      auto v = parse_double(fields[j + 1]);
      if (!v) bad("bad distance value");
      d.values(i, j) = *v;
    }
  }
  return d;
}

inline std::string embedding_to_csv(const Embedding& emb, std::span<const std::optional<double>> accuracies) {
  std::string out = "name";
  if (emb.dims() == 2) {
    out += ",x,y";
  } else {
    for (std::size_t k = 0; k < emb.dims(); ++k) out += ",x" + std::to_string(k + 1);
  }
  out += ",val_accuracy\n";
  for (std::size_t i = 0; i < emb.coords.rows(); ++i) {
    out += emb.names[i];
    for (std::size_t k = 0; k < emb.dims(); ++k) out += "," + format_double(emb.coords(i, k));
    out += ",";
    if (i < accuracies.size() && accuracies[i]) out += format_double(*accuracies[i]);
    out += "\n";
  }
  return out;
}

struct EmbeddingRow {
  std::string name;
  std::vector<double> coords;
  std::optional<double> accuracy;
};

inline std::vector<EmbeddingRow> parse_embedding_csv(std::string_view text, const std::string& origin = "<memory>") {
  auto bad = [&](const std::string& why) { fail(ErrorKind::kMalformedFile, origin + ": " + why); };
  const auto lines = lines_of(text);
  if (lines.empty()) bad("empty embedding file");
  const auto header = split(lines[0], ',');
  if (header.size() < 3 || header.front() != "name" || header.back() != "val_accuracy") {
    bad("header must be name,<coords...>,val_accuracy");
  }
  const std::size_t dims = header.size() - 2;
  std::vector<EmbeddingRow> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split(lines[r], ',');
    if (fields.size() != dims + 2) bad("line " + std::to_string(r + 1) + " has the wrong number of fields");
    EmbeddingRow row{std::string(fields[0]), {}, std::nullopt};
    for (std::size_t k = 0; k < dims; ++k) {
      auto v = parse_double(fields[k + 1]);
      if (!v) bad("bad coordinate");
      row.coords.push_back(*v);
    }
    if (!fields.back().empty()) {
      auto v = parse_double(fields.back());
      if (!v) bad("bad accuracy");
      row.accuracy = *v;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json diagnostics_json(const DiversityReport& r) {
  using nlohmann::json;
  json models = json::array();
  for (std::size_t i = 0; i < r.distances.names.size(); ++i) {
    json m = {{"name", r.distances.names[i]},
              {"role", r.roles[i]},
              {"raw_self_distance", r.distances.raw_diagonal[i]},
              {"val_accuracy", nullptr}};
    if (r.accuracies[i]) m["val_accuracy"] = *r.accuracies[i];
    models.push_back(m);
  }
  json out = {{"format_version", kReportFormatVersion},
              {"distance", "mean symmetric cross-entropy, natural log, clamp 1e-12"},
              {"diagonal_policy", r.distances.diagonal_zeroed ? "zeroed" : "raw"},
              {"models", models},
              {"dims", r.embedding.dims()},
              {"eigenvalues", r.embedding.eigenvalues},
              {"spectrum", r.embedding.spectrum},
              {"jacobi_sweeps", r.embedding.sweeps},
              {"jacobi_converged", r.embedding.converged},
              {"stress", nullptr}};
  if (r.stress) out["stress"] = *r.stress;
  return out;
}

}  // namespace soupkit
