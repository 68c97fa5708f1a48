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

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "soupkit/soupkit.hpp"
#include "test_util.hpp"

namespace soupkit {
namespace {

using testing::kind_of;
using testing::predictions;
using testing::random_labels;
using testing::tied_predictions;

Checkpoint identity_head() {
  Checkpoint cp;
  cp.tensors.emplace("layer0.weight", Tensor{{2, 2}, {1.0, 0.0, 0.0, 1.0}});
  cp.tensors.emplace("layer0.bias", Tensor{{2}, {0.0, 0.0}});
  return cp;
}


Matrix features(const std::vector<std::vector<double>>& r) {
  Matrix m(r.size(), r.front().size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < r[i].size(); ++j) m(i, j) = r[i][j];
  }
  return m;
}

// --- forward ---------------------------------------------------------------

TEST(Forward, ZeroInputGivesUniformRow) {
  const PredictionMatrix p = forward(identity_head(), MlpSpec{{2, 2}}, features({{0.0, 0.0}}));
  EXPECT_EQ(p(0, 0), 0.5);
  EXPECT_EQ(p(0, 1), 0.5);
}

TEST(Forward, HandSoftmax) {
  const PredictionMatrix p = forward(identity_head(), MlpSpec{{2, 2}}, features({{std::log(3.0), 0.0}}));
  EXPECT_NEAR(p(0, 0), 0.75, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.25, 1e-15);
}

TEST(Forward, RowsSumToOne) {
  Rng rng(3);
  const MlpSpec spec{{4, 7, 5, 3}};
  const Checkpoint cp = random_mlp_checkpoint(spec, rng, 3.0);
  Matrix x(50, 4);
  for (std::size_t i = 0; i < 50; ++i) {
    for (double& v : x.row(i)) v = rng.normal() * 5.0;
  }
  const PredictionMatrix p = forward(cp, spec, x);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0.0;
    for (double v : p.row(i)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Forward, HiddenLayerUsesRelu) {
  // [1] -> [1] -> [1]: hidden unit w=-1 clamps positive inputs to 0.
  Checkpoint cp;
  cp.tensors.emplace("layer0.weight", Tensor{{1, 1}, {-1.0}});
  cp.tensors.emplace("layer0.bias", Tensor{{1}, {0.0}});
  cp.tensors.emplace("layer1.weight", Tensor{{2, 1}, {1.0, 0.0}});
  cp.tensors.emplace("layer1.bias", Tensor{{2}, {0.0, 0.0}});
  const Matrix z = logits(cp, MlpSpec{{1, 1, 2}}, features({{5.0}, {-2.0}}));
  EXPECT_EQ(z(0, 0), 0.0);
  EXPECT_EQ(z(1, 0), 2.0);
}

TEST(Forward, StableForLargeInputs) {
  const MlpSpec spec{{2, 2}};
  const PredictionMatrix p = forward(identity_head(), spec, features({{1e6, -1e6}, {-1e6, 1e6}, {1e6, 1e6}}));
  for (std::size_t i = 0; i < p.rows(); ++i) {
    for (double v : p.row(i)) EXPECT_FALSE(std::isnan(v));
  }
  EXPECT_EQ(p(0, 0), 1.0);
  EXPECT_EQ(p(1, 1), 1.0);
  EXPECT_EQ(p(2, 0), 0.5);
}

TEST(Forward, LogitsOfAveragedLinearHeadAreAveragedLogits) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const MlpSpec spec{{1 + rng.below(6), 2 + rng.below(4)}};
    const Checkpoint a = random_mlp_checkpoint(spec, rng);
    const Checkpoint b = random_mlp_checkpoint(spec, rng);
    Matrix x(8, spec.input_size());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (double& v : x.row(i)) v = rng.normal();
    }
    const Matrix za = logits(a, spec, x);
    const Matrix zb = logits(b, spec, x);
    const Matrix zm = logits(linear_combine(std::vector<Checkpoint>{a, b}, std::vector<double>{0.5, 0.5}), spec, x);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t c = 0; c < spec.output_size(); ++c) {
        ASSERT_NEAR(zm(i, c), 0.5 * za(i, c) + 0.5 * zb(i, c), 1e-12);
      }
    }
  }
}

TEST(Forward, Errors) {
  Checkpoint cp = identity_head();
  EXPECT_EQ(kind_of([&] { forward(cp, MlpSpec{{3, 2}}, features({{0, 0, 0}})); }), ErrorKind::kSchemaMismatch);
  EXPECT_EQ(kind_of([&] { forward(cp, MlpSpec{{2, 2}}, features({{0, 0, 0}})); }), ErrorKind::kDimensionMismatch);
  cp.tensors.erase("layer0.bias");
  try {
    forward(cp, MlpSpec{{2, 2}}, features({{0, 0}}));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchemaMismatch);
    EXPECT_EQ(e.detail(), "layer0.bias");
  }
}

TEST(MlpSpec, JsonRoundTrip) {
  const MlpSpec spec{{4, 8, 3}};
  EXPECT_EQ(MlpSpec::from_json(spec.to_json()).layer_sizes, spec.layer_sizes);
  EXPECT_EQ(kind_of([] { MlpSpec::from_json(nlohmann::json::parse(R"({"layer_sizes": [4]})")); }),
            ErrorKind::kMalformedFile);
  EXPECT_EQ(kind_of([] { MlpSpec::from_json(nlohmann::json::parse(R"({"layer_sizes": [4, -1]})")); }),
            ErrorKind::kMalformedFile);
}

// --- predictions -----------------------------------------------------------

TEST(PredictionMatrix, RejectsRowsOffTheSimplex) {
  EXPECT_EQ(kind_of([] { predictions({{0.6, 0.6}}); }), ErrorKind::kNotOnSimplex);
  EXPECT_EQ(kind_of([] { predictions({{1.5, -0.5}}); }), ErrorKind::kNotOnSimplex);
  EXPECT_EQ(kind_of([] { predictions({{std::nan(""), 1.0}}); }), ErrorKind::kNotOnSimplex);
  EXPECT_NO_THROW(predictions({{0.5, 0.5 + 1e-10}}));
}

// --- accuracy --------------------------------------------------------------

TEST(Accuracy, OneHotExtremes) {
  const auto p = predictions({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  EXPECT_EQ(accuracy(p, std::vector<std::size_t>{0, 1, 2}), 1.0);
  EXPECT_EQ(accuracy(p, std::vector<std::size_t>{1, 2, 0}), 0.0);
}

TEST(Accuracy, FourOfSix) {
  const auto p = predictions({{0.9, 0.1}, {0.2, 0.8}, {0.6, 0.4}, {0.3, 0.7}, {0.5, 0.5}, {0.4, 0.6}});
  // argmax: 0 1 0 1 0 (tie) 1
  EXPECT_NEAR(accuracy(p, std::vector<std::size_t>{0, 1, 1, 1, 0, 0}), 0.6667, 1e-4);
  EXPECT_EQ(accuracy(p, std::vector<std::size_t>{0, 1, 1, 1, 0, 0}), 4.0 / 6.0);
}

TEST(Accuracy, TiesGoToLowestClass) {
  EXPECT_EQ(argmax(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 0u);
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.45, 0.45}), 1u);
}

TEST(Accuracy, LengthMismatch) {
  EXPECT_EQ(kind_of([] { accuracy(predictions({{1, 0}}), std::vector<std::size_t>{0, 1}); }),
            ErrorKind::kLengthMismatch);
  EXPECT_EQ(kind_of([] { macro_metrics(predictions({{1, 0}}), std::vector<std::size_t>{0, 1}, 2); }),
            ErrorKind::kLengthMismatch);
}

TEST(Accuracy, EqualsTraceOverN) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(50), c = 1 + rng.below(5);
    const PredictionMatrix p = tied_predictions(n, c, rng);
    const auto y = random_labels(n, c, rng);
    const ConfusionMatrix cm = confusion_matrix(p, y, c);
    ASSERT_EQ(accuracy(p, y), static_cast<double>(cm.trace()) / static_cast<double>(n));
  }
}

// --- confusion matrix ------------------------------------------------------

TEST(ConfusionMatrix, AllCorrectIsDiagonalSupports) {
  const auto p = predictions({{1, 0, 0}, {0, 1, 0}, {0, 1, 0}, {0, 0, 1}});
  const ConfusionMatrix cm = confusion_matrix(p, std::vector<std::size_t>{0, 1, 1, 2}, 3);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t q = 0; q < 3; ++q) EXPECT_EQ(cm.at(t, q), t == q ? (t == 1 ? 2u : 1u) : 0u);
  }
}

TEST(ConfusionMatrix, SingleMiss) {
  const ConfusionMatrix cm = confusion_matrix(predictions({{0.2, 0.8}}), std::vector<std::size_t>{0}, 2);
  EXPECT_EQ(cm.at(0, 1), 1u);
  EXPECT_EQ(cm.total(), 1u);
  EXPECT_EQ(cm.false_negatives(0), 1u);
  EXPECT_EQ(cm.false_positives(1), 1u);
}

TEST(ConfusionMatrix, CountsAreConserved) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(50), c = 1 + rng.below(5);
    const auto y = random_labels(n, c, rng);
    const ConfusionMatrix cm = confusion_matrix(tied_predictions(n, c, rng), y, c);
    ASSERT_EQ(cm.total(), n);
    for (std::size_t k = 0; k < c; ++k) {
      ASSERT_EQ(cm.support(k), static_cast<std::size_t>(std::count(y.begin(), y.end(), k)));
    }
  }
}

TEST(ConfusionMatrix, ClassCountMustMatchColumns) {
  EXPECT_EQ(kind_of([] { confusion_matrix(predictions({{1, 0}}), std::vector<std::size_t>{0}, 3); }),
            ErrorKind::kDimensionMismatch);
}

// --- macro metrics ---------------------------------------------------------

TEST(MacroMetrics, Perfect) {
  const auto r = macro_metrics(predictions({{1, 0}, {0, 1}}), std::vector<std::size_t>{0, 1}, 2);
  EXPECT_EQ(r.macro_precision, 1.0);
  EXPECT_EQ(r.macro_recall, 1.0);
  EXPECT_EQ(r.macro_f1, 1.0);
}

TEST(MacroMetrics, HandConfusion) {
  // class0 TP=1 FP=1 FN=0, class1 TP=1 FP=0 FN=1
  const auto r = macro_metrics(predictions({{1, 0}, {1, 0}, {0, 1}}), std::vector<std::size_t>{0, 1, 1}, 2);
  EXPECT_EQ(r.per_class[0].tp, 1u);
  EXPECT_EQ(r.per_class[0].fp, 1u);
  EXPECT_EQ(r.per_class[0].fn, 0u);
  EXPECT_EQ(r.per_class[1].tp, 1u);
  EXPECT_EQ(r.per_class[1].fp, 0u);
  EXPECT_EQ(r.per_class[1].fn, 1u);
  EXPECT_DOUBLE_EQ(r.macro_precision, 0.75);
  EXPECT_DOUBLE_EQ(r.macro_recall, 0.75);
  EXPECT_NEAR(r.macro_f1, 0.6667, 1e-4);
  EXPECT_DOUBLE_EQ(r.macro_f1, 2.0 / 3.0);
}

TEST(MacroMetrics, AbsentClassCountsAsZero) {
  // Class 2 never occurs and is never predicted; the macro mean still divides by 3.
  const auto r = macro_metrics(predictions({{1, 0, 0}, {0, 1, 0}}), std::vector<std::size_t>{0, 1}, 3);
  EXPECT_EQ(r.per_class[2].precision, 0.0);
  EXPECT_EQ(r.per_class[2].recall, 0.0);
  EXPECT_EQ(r.per_class[2].f1, 0.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 2.0 / 3.0);
}

TEST(MacroMetrics, MatchesLiteralOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(50), c = 1 + rng.below(5);
    const PredictionMatrix p = trial % 2 ? tied_predictions(n, c, rng) : random_predictions(n, c, rng);
    const auto y = random_labels(n, c, rng);
    const MetricsReport r = macro_metrics(p, y, c);
    const auto lit = oracle::literal_macro(oracle::rows_of(p), y, c);
    ASSERT_NEAR(r.accuracy, lit.accuracy, 1e-12);
    ASSERT_NEAR(r.macro_precision, lit.precision, 1e-12);
    ASSERT_NEAR(r.macro_recall, lit.recall, 1e-12);
    ASSERT_NEAR(r.macro_f1, lit.f1, 1e-12);
    std::size_t tp = 0;
    double mean_f1 = 0.0;
    for (const auto& m : r.per_class) {
      tp += m.tp;
      mean_f1 += m.f1;
    }
    ASSERT_EQ(static_cast<double>(tp) / static_cast<double>(n), r.accuracy);
    ASSERT_NEAR(mean_f1 / static_cast<double>(c), r.macro_f1, 1e-15);
  }
}

TEST(MacroMetrics, JsonRoundTrip) {
  Rng rng(12);
  const MetricsReport r = macro_metrics(random_predictions(30, 4, rng), random_labels(30, 4, rng), 4);
  const auto j = nlohmann::json::parse(to_json(r).dump());
  EXPECT_EQ(metrics_from_json(j), r);
  EXPECT_EQ(j["format_version"], 1);
  ASSERT_EQ(j["per_class_table"].size(), 4u);
  EXPECT_EQ(j["per_class_table"][0]["accuracy_as_recall"], j["per_class_table"][0]["recall"]);
}

// --- best checkpoint -------------------------------------------------------

MetricsReport report(double f1, double acc) {
  MetricsReport r;
  r.macro_f1 = f1;
  r.accuracy = acc;
  return r;
}

TEST(SelectBest, Examples) {
  EXPECT_EQ(select_best_checkpoint(std::vector<MetricsReport>{report(0.3, 0.4)}), 0u);
  EXPECT_EQ(select_best_checkpoint(std::vector<MetricsReport>{report(0.6, 0.9), report(0.7, 0.70),
                                                              report(0.7, 0.72)}),
            2u);
  EXPECT_EQ(select_best_checkpoint(std::vector<MetricsReport>(4, report(0.5, 0.5))), 0u);
  EXPECT_EQ(kind_of([] { select_best_checkpoint(std::vector<MetricsReport>{}); }), ErrorKind::kEmptyList);
}

TEST(SelectBest, MatchesLexicographicSort) {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<MetricsReport> reports;
    std::vector<std::pair<double, double>> keys;
    const std::size_t n = 1 + rng.below(12);
    for (std::size_t i = 0; i < n; ++i) {
      const double f1 = static_cast<double>(rng.below(4)) / 4.0;
      const double acc = static_cast<double>(rng.below(4)) / 4.0;
      reports.push_back(report(f1, acc));
      keys.emplace_back(f1, acc);
    }
    ASSERT_EQ(select_best_checkpoint(reports), oracle::lexicographic_best(keys));
  }
}

// --- formatting ------------------------------------------------------------

TEST(Formatting, SignedDelta) {
  EXPECT_EQ(format_delta(71.43, 72.36), "+0.93");
  EXPECT_EQ(format_delta(72.36, 71.43), "-0.93");
  EXPECT_EQ(format_delta(50.0, 50.0), "+0.00");
  EXPECT_EQ(format_delta(10.0, 22.5), "+12.50");
  EXPECT_EQ(format_percent(0.7236), "72.36");
}

TEST(Formatting, RenderedReportCarriesDelta) {
  MetricsReport base = report(0.70, 0.7143);
  MetricsReport cur = report(0.6928, 0.7236);
  const std::string text = render_metrics_text(cur, &base);
  EXPECT_NE(text.find("accuracy         72.36  +0.93\n"), std::string::npos) << text;
  EXPECT_EQ(baseline_delta(cur, base)["accuracy"], "+0.93");
}

// --- csv -------------------------------------------------------------------

TEST(DatasetCsv, RoundTrip) {
  const LabeledDataset ds = parse_dataset_csv("f1,f2,label\n0.5,-1,2\n3,4e-3,0\n");
  EXPECT_EQ(ds.num_classes, 3u);
  EXPECT_EQ(ds.labels, (std::vector<std::size_t>{2, 0}));
  EXPECT_EQ(ds.features(1, 1), 4e-3);
  const LabeledDataset again = parse_dataset_csv(dataset_to_csv(ds));
  EXPECT_EQ(again.features, ds.features);
  EXPECT_EQ(again.labels, ds.labels);
}

TEST(DatasetCsv, Errors) {
  EXPECT_EQ(kind_of([] { parse_dataset_csv("a,b,label\n1,2,0\n"); }), ErrorKind::kMalformedFile);
  EXPECT_EQ(kind_of([] { parse_dataset_csv("f1,label\n1,2,0\n"); }), ErrorKind::kMalformedFile);
  EXPECT_EQ(kind_of([] { parse_dataset_csv("f1,label\nx,0\n"); }), ErrorKind::kMalformedFile);
  EXPECT_EQ(kind_of([] { parse_dataset_csv("f1,label\n1,-1\n"); }), ErrorKind::kMalformedFile);
  EXPECT_EQ(kind_of([] { parse_dataset_csv("f1,label\n1,5\n", 3); }), ErrorKind::kMalformedFile);
  EXPECT_EQ(kind_of([] { parse_dataset_csv("f1,label\n"); }), ErrorKind::kMalformedFile);
}

TEST(PredictionCsv, RoundTripIsExact) {
  Rng rng(14);
  const PredictionMatrix p = random_predictions(20, 3, rng);
  EXPECT_EQ(parse_predictions_csv(predictions_to_csv(p)), p);
}

TEST(PredictionCsv, Errors) {
  EXPECT_EQ(kind_of([] { parse_predictions_csv("p1,p0\n0.5,0.5\n"); }), ErrorKind::kMalformedFile);
  EXPECT_EQ(kind_of([] { parse_predictions_csv("p0,p1\n0.5\n"); }), ErrorKind::kMalformedFile);
  EXPECT_EQ(kind_of([] { parse_predictions_csv("p0,p1\n0.7,0.7\n"); }), ErrorKind::kNotOnSimplex);
}

}  // namespace
}  // namespace soupkit
