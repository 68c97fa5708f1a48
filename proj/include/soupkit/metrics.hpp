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
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "soupkit/error.hpp"
#include "soupkit/inference.hpp"

namespace soupkit {

inline constexpr int kReportFormatVersion = 1;

namespace detail {

inline void check_labels(const PredictionMatrix& preds, std::span<const std::size_t> labels) {
  if (preds.rows() != labels.size()) {
    fail(ErrorKind::kLengthMismatch, std::to_string(preds.rows()) + " prediction rows but " +
                                         std::to_string(labels.size()) + " labels");
  }
}

}  // namespace detail

/// Fraction of rows whose argmax equals the label.
inline double accuracy(const PredictionMatrix& preds, std::span<const std::size_t> labels) {
  detail::check_labels(preds, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (argmax(preds.row(i)) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

/// counts(true, predicted).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::size_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * classes_ + pred]; }
  std::size_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * classes_ + pred]; }

  std::size_t true_positives(std::size_t c) const { return at(c, c); }
  std::size_t support(std::size_t c) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < classes_; ++p) s += at(c, p);
    return s;
  }
  std::size_t predicted(std::size_t c) const {
    std::size_t s = 0;
    for (std::size_t t = 0; t < classes_; ++t) s += at(t, c);
    return s;
  }
  std::size_t false_positives(std::size_t c) const { return predicted(c) - at(c, c); }
  std::size_t false_negatives(std::size_t c) const { return support(c) - at(c, c); }
  std::size_t trace() const {
    std::size_t s = 0;
    for (std::size_t c = 0; c < classes_; ++c) s += at(c, c);
    return s;
  }
  std::size_t total() const {
    std::size_t s = 0;
    for (std::size_t v : counts_) s += v;
    return s;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

inline ConfusionMatrix confusion_matrix(const PredictionMatrix& preds, std::span<const std::size_t> labels,
                                        std::size_t num_classes) {
  detail::check_labels(preds, labels);
  if (preds.classes() != num_classes) {
    fail(ErrorKind::kDimensionMismatch, "predictions have " + std::to_string(preds.classes()) +
                                            " columns for " + std::to_string(num_classes) + " classes");
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) fail(ErrorKind::kInvalidArgument, "label out of range");
    ++cm.at(labels[i], argmax(preds.row(i)));
  }
  return cm;
}

struct ClassMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const ClassMetrics&) const = default;
};

struct MetricsReport {
  std::size_t num_samples = 0;
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  ConfusionMatrix confusion;

  bool operator==(const MetricsReport&) const = default;
};

namespace detail {

inline double ratio_or_zero(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace detail

/// Accuracy plus per-class and macro-averaged precision, recall and F1. A
/// ratio with a zero denominator counts as 0, and every one of the C classes
/// enters the macro mean, including classes absent from the labels.
inline MetricsReport macro_metrics(const PredictionMatrix& preds, std::span<const std::size_t> labels,
                                   std::size_t num_classes) {
  MetricsReport r;
  r.confusion = confusion_matrix(preds, labels, num_classes);
  r.num_samples = labels.size();
  r.accuracy = static_cast<double>(r.confusion.trace()) / static_cast<double>(labels.size());
  double sp = 0.0, sr = 0.0, sf = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    ClassMetrics m;
    m.tp = r.confusion.true_positives(c);
    m.fp = r.confusion.false_positives(c);
    m.fn = r.confusion.false_negatives(c);
    m.support = r.confusion.support(c);
    m.precision = detail::ratio_or_zero(m.tp, m.tp + m.fp);
    m.recall = detail::ratio_or_zero(m.tp, m.tp + m.fn);
    m.f1 = detail::ratio_or_zero(2 * m.tp, 2 * m.tp + m.fp + m.fn);
    sp += m.precision;
    sr += m.recall;
    sf += m.f1;
    r.per_class.push_back(m);
  }
  const double classes = static_cast<double>(num_classes);
  r.macro_precision = sp / classes;
  r.macro_recall = sr / classes;
  r.macro_f1 = sf / classes;
  return r;
}

/// Highest macro F1; exact F1 ties go to higher accuracy, then lower index.
inline std::size_t select_best_checkpoint(std::span<const MetricsReport> reports) {
  if (reports.empty()) fail(ErrorKind::kEmptyList, "no reports to choose from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const MetricsReport& a = reports[i];
    const MetricsReport& b = reports[best];
    if (a.macro_f1 > b.macro_f1 || (a.macro_f1 == b.macro_f1 && a.accuracy > b.accuracy)) best = i;
  }
  return best;
}

/// Evaluator backed by the reference MLP: validation accuracy of a checkpoint.
struct MlpAccuracyEvaluator {
  MlpSpec spec;

  double operator()(const Checkpoint& cp, const LabeledDataset& ds) const {
    return accuracy(forward(cp, spec, ds), ds.labels);
  }
};

// ---------------------------------------------------------------------------
// Reporting

/// Signed difference of two percentages as displayed with two decimals,
/// e.g. (71.43, 72.36) -> "+0.93". Both values are rounded to hundredths
/// first so the delta agrees with the rendered figures.
inline std::string format_delta(double baseline_percent, double current_percent) {
  const long long base = std::llround(baseline_percent * 100.0);
  const long long cur = std::llround(current_percent * 100.0);
  const long long diff = cur - base;
  const long long mag = std::llabs(diff);
  std::string frac = std::to_string(mag % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::string(diff < 0 ? "-" : "+") + std::to_string(mag / 100) + "." + frac;
}

/// Two-decimal percentage text, as in results tables.
inline std::string format_percent(double fraction) {
  const long long hundredths = std::llround(fraction * 10000.0);
  std::string frac = std::to_string(std::llabs(hundredths) % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return (hundredths < 0 ? "-" : "") + std::to_string(std::llabs(hundredths) / 100) + "." + frac;
}

/// Signed per-metric deltas in percentage points, keyed like the report.
inline nlohmann::json baseline_delta(const MetricsReport& current, const MetricsReport& baseline) {
  return {{"accuracy", format_delta(100.0 * baseline.accuracy, 100.0 * current.accuracy)},
          {"macro_precision", format_delta(100.0 * baseline.macro_precision, 100.0 * current.macro_precision)},
          {"macro_recall", format_delta(100.0 * baseline.macro_recall, 100.0 * current.macro_recall)},
          {"macro_f1", format_delta(100.0 * baseline.macro_f1, 100.0 * current.macro_f1)}};
}

/// Human-readable summary; with a baseline each line ends in its delta,
/// e.g. "accuracy         72.36  +0.93".
inline std::string render_metrics_text(const MetricsReport& r, const MetricsReport* baseline = nullptr) {
  const std::pair<const char*, double MetricsReport::*> rows[] = {
      {"accuracy", &MetricsReport::accuracy},
      {"macro_precision", &MetricsReport::macro_precision},
      {"macro_recall", &MetricsReport::macro_recall},
      {"macro_f1", &MetricsReport::macro_f1},
  };
  std::string out;
  for (const auto& [label, field] : rows) {
    std::string line = label;
    line.resize(17, ' ');
    line += format_percent(r.*field);
    if (baseline != nullptr) line += "  " + format_delta(100.0 * (baseline->*field), 100.0 * (r.*field));
    out += line + "\n";
  }
  return out;
}

inline nlohmann::json to_json(const MetricsReport& r) {
  using nlohmann::json;
  json per_class = json::array();
  json table = json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const ClassMetrics& m = r.per_class[c];
    per_class.push_back({{"class", c},
                         {"tp", m.tp},
                         {"fp", m.fp},
                         {"fn", m.fn},
                         {"support", m.support},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1}});
    // Per-class table row; the "accuracy" column of such tables is recall.
    table.push_back({{"class", c},
                     {"accuracy_as_recall", format_percent(m.recall)},
                     {"precision", format_percent(m.precision)},
                     {"recall", format_percent(m.recall)},
                     {"f1", format_percent(m.f1)}});
  }
  json confusion = json::array();
  for (std::size_t t = 0; t < r.confusion.classes(); ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < r.confusion.classes(); ++p) row.push_back(r.confusion.at(t, p));
    confusion.push_back(row);
  }
  return {{"format_version", kReportFormatVersion},
          {"num_samples", r.num_samples},
          {"num_classes", r.per_class.size()},
          {"accuracy", r.accuracy},
          {"macro_precision", r.macro_precision},
          {"macro_recall", r.macro_recall},
          {"macro_f1", r.macro_f1},
          {"per_class", per_class},
          {"per_class_table", table},
          {"confusion_matrix", confusion}};
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.num_samples = j.at("num_samples").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_precision = j.at("macro_precision").get<double>();
    r.macro_recall = j.at("macro_recall").get<double>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    for (const auto& m : j.at("per_class")) {
      r.per_class.push_back({m.at("tp").get<std::size_t>(), m.at("fp").get<std::size_t>(),
                             m.at("fn").get<std::size_t>(), m.at("support").get<std::size_t>(),
                             m.at("precision").get<double>(), m.at("recall").get<double>(),
                             m.at("f1").get<double>()});
    }
    const auto& cm = j.at("confusion_matrix");
    r.confusion = ConfusionMatrix(cm.size());
    for (std::size_t t = 0; t < cm.size(); ++t) {
      if (cm[t].size() != cm.size()) fail(ErrorKind::kMalformedFile, "confusion matrix must be square");
      for (std::size_t p = 0; p < cm.size(); ++p) r.confusion.at(t, p) = cm[t][p].get<std::size_t>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedFile, std::string("metrics report: ") + e.what());
  }
}

}  // namespace soupkit
