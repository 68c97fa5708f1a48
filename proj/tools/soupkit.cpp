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

// soupkit: pool -> soup -> eval -> analyze, plus softvote and fixture
// generation. Exit status: 0 success, 2 bad input or usage, 1 internal error.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "soupkit/soupkit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* flag) {
  if (!fs::is_regular_file(path)) {
    throw soupkit::Error(soupkit::ErrorKind::kIoError, std::string(flag) + ": no such file '" + path + "'");
  }
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw soupkit::Error(soupkit::ErrorKind::kIoError, "cannot create output directory '" + dir + "'");
  }
  return fs::path(dir);
}

void write_json(const fs::path& path, const json& j) { soupkit::write_text_file(path, j.dump(2) + "\n"); }

soupkit::MlpSpec load_spec(const std::string& path) {
  require_file(path, "--spec");
  json j;
  try {
    j = json::parse(soupkit::read_text_file(path));
  } catch (const json::exception& e) {
    throw soupkit::Error(soupkit::ErrorKind::kMalformedFile, path + ": " + e.what());
  }
  return soupkit::MlpSpec::from_json(j);
}

soupkit::LabeledDataset load_labeled(const std::string& path, const char* flag,
                                     std::optional<std::size_t> classes = std::nullopt) {
  require_file(path, flag);
  return soupkit::load_dataset(path, classes);
}

/// Display name: file name without ".ckpt.json", ".json" or ".csv".
std::string stem_name(const std::string& path) {
  std::string name = fs::path(path).filename().string();
  for (const char* ext : {".ckpt.json", ".json", ".csv"}) {
    const std::string e(ext);
    if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0) {
      return name.substr(0, name.size() - e.size());
    }
  }
  return name;
}

soupkit::GreedyOrder parse_mode(const std::string& mode) {
  return mode == "greedy-sorted" ? soupkit::GreedyOrder::kSorted : soupkit::GreedyOrder::kAsPrinted;
}

// ---------------------------------------------------------------------------

struct PoolArgs {
  std::string manifest;
  std::size_t k = 8;
  std::string out_dir = ".";
};

int run_pool(const PoolArgs& a) {
  require_file(a.manifest, "--manifest");
  const auto entries = soupkit::load_manifest(a.manifest);
  if (entries.empty()) throw soupkit::Error(soupkit::ErrorKind::kEmptyPool, "empty snapshot list");
  std::vector<soupkit::Snapshot> snapshots = soupkit::load_snapshots(a.manifest, entries);
  std::vector<soupkit::SnapshotMetrics> metrics;
  for (const auto& s : snapshots) metrics.push_back(s.metrics);
  // Validates schemas and metric values; the selected entries come from the
  // same ranking.
  (void)soupkit::build_candidate_pool(snapshots, a.k);
  const auto selection = soupkit::select_pool_entries(metrics, a.k);

  const fs::path out = prepare_out_dir(a.out_dir);
  const fs::path out_abs = fs::absolute(out).lexically_normal();
  std::vector<soupkit::ManifestEntry> filtered;
  json summary_entries = json::array();
  for (const auto& e : selection) {
    soupkit::ManifestEntry m = entries[e.snapshot];
    const fs::path src = fs::absolute(soupkit::resolve_entry_path(a.manifest, m.path)).lexically_normal();
    m.path = src.lexically_relative(out_abs).generic_string();
    m.source = e.tag;
    summary_entries.push_back({{"epoch", m.metrics.epoch}, {"source", e.tag}});
    filtered.push_back(std::move(m));
  }
  soupkit::write_text_file(out / "pool.json", soupkit::manifest_to_json(filtered));
  write_json(out / "pool_summary.json", {{"format_version", soupkit::kReportFormatVersion},
                                         {"snapshots", entries.size()},
                                         {"k", a.k},
                                         {"pool_size", filtered.size()},
                                         {"entries", summary_entries}});
  std::cout << "pool: " << filtered.size() << " of " << entries.size() << " snapshots (k=" << a.k << ")\n";
  for (const auto& m : filtered) std::cout << "  epoch " << m.metrics.epoch << "  " << m.source << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SoupArgs {
  std::string manifest;
  std::string mode = "uniform";
  std::string val;
  std::string spec;
  std::string out_dir = ".";
};

int run_soup(const SoupArgs& a) {
  const bool greedy = a.mode != "uniform";
  if (greedy && (a.val.empty() || a.spec.empty())) {
    throw UsageError("--mode " + a.mode + " requires --val and --spec");
  }
  require_file(a.manifest, "--manifest");
  const soupkit::CandidatePool pool = soupkit::pool_from_manifest(a.manifest);
  const fs::path out = prepare_out_dir(a.out_dir);

  soupkit::SoupSelection selection;
  soupkit::Checkpoint soup;
  std::optional<double> soup_accuracy;
  if (greedy) {
    const soupkit::MlpSpec spec = load_spec(a.spec);
    const soupkit::LabeledDataset val = load_labeled(a.val, "--val", spec.output_size());
    auto result = soupkit::greedy_soup(pool, soupkit::MlpAccuracyEvaluator{spec}, val, parse_mode(a.mode));
    selection = std::move(result.selection);
    soup = std::move(result.soup);
    soup_accuracy = result.accuracy;
  } else {
    selection = soupkit::uniform_selection(pool);
    soup = soupkit::uniform_soup(pool);
    if (!a.val.empty() && !a.spec.empty()) {
      const soupkit::MlpSpec spec = load_spec(a.spec);
      const soupkit::LabeledDataset val = load_labeled(a.val, "--val", spec.output_size());
      soup_accuracy = soupkit::MlpAccuracyEvaluator{spec}(soup, val);
    }
  }
  soup.meta["soup_mode"] = a.mode;
  soup.meta["soup_size"] = std::to_string(selection.selected.size());
  soupkit::save_checkpoint(soup, out / "soup.ckpt.json");
  const json report = soupkit::soup_report(selection, pool, a.mode, soup_accuracy);
  write_json(out / "selection.json", report);

  std::size_t rejected = 0;
  for (const auto& e : selection.trace) rejected += e.accepted ? 0 : 1;
  std::cout << "soup (" << a.mode << "): " << selection.selected.size() << " of " << pool.size()
            << " candidates, " << rejected << " rejected";
  if (soup_accuracy) std::cout << ", val accuracy " << soupkit::format_percent(*soup_accuracy);
  std::cout << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string spec;
  std::string test;
  std::string baseline;
  std::string out_dir = ".";
};

soupkit::MetricsReport load_baseline(const std::string& path) {
  require_file(path, "--baseline");
  json j;
  try {
    j = json::parse(soupkit::read_text_file(path));
  } catch (const json::exception& e) {
    throw soupkit::Error(soupkit::ErrorKind::kMalformedFile, path + ": " + e.what());
  }
  // Either a bare report or a soupkit eval output (use its winner).
  if (j.contains("reports")) {
    const std::size_t best = j.value("best_index", std::size_t{0});
    if (!j["reports"].is_array() || best >= j["reports"].size()) {
      throw soupkit::Error(soupkit::ErrorKind::kMalformedFile, path + ": bad reports list");
    }
    return soupkit::metrics_from_json(j["reports"][best]);
  }
  return soupkit::metrics_from_json(j);
}

int run_eval(const EvalArgs& a) {
  const soupkit::MlpSpec spec = load_spec(a.spec);
  const soupkit::LabeledDataset test = load_labeled(a.test, "--test", spec.output_size());
  std::optional<soupkit::MetricsReport> baseline;
  if (!a.baseline.empty()) baseline = load_baseline(a.baseline);

  std::vector<soupkit::MetricsReport> reports;
  json report_list = json::array();
  for (const std::string& path : a.checkpoints) {
    require_file(path, "--checkpoint");
    const soupkit::Checkpoint cp = soupkit::load_checkpoint(path);
    const soupkit::PredictionMatrix preds = soupkit::forward(cp, spec, test);
    reports.push_back(soupkit::macro_metrics(preds, test.labels, test.num_classes));
    json r = soupkit::to_json(reports.back());
    r["checkpoint"] = fs::path(path).filename().string();
    report_list.push_back(r);
  }
  const std::size_t best = soupkit::select_best_checkpoint(reports);
  json out = {{"format_version", soupkit::kReportFormatVersion},
              {"reports", report_list},
              {"best_index", best},
              {"best_checkpoint", fs::path(a.checkpoints[best]).filename().string()},
              {"delta_vs_baseline", nullptr}};
  if (baseline) out["delta_vs_baseline"] = soupkit::baseline_delta(reports[best], *baseline);
  write_json(prepare_out_dir(a.out_dir) / "metrics.json", out);

  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::cout << (i == best && reports.size() > 1 ? "* " : "") << fs::path(a.checkpoints[i]).filename().string()
              << "\n";
    std::cout << soupkit::render_metrics_text(reports[i], i == best && baseline ? &*baseline : nullptr);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::vector<std::string> preds;
  std::vector<std::string> checkpoints;
  std::string manifest;
  std::vector<std::string> soups;
  std::vector<std::string> names;
  std::string spec;
  std::string val;
  bool softvote = false;
  std::size_t dims = 2;
  std::string out_dir = ".";
};

int run_analyze(const AnalyzeArgs& args) {
  AnalyzeArgs a = args;
  if (!a.manifest.empty()) {
    require_file(a.manifest, "--manifest");
    for (const auto& e : soupkit::load_manifest(a.manifest)) {
      a.checkpoints.push_back(soupkit::resolve_entry_path(a.manifest, e.path).string());
    }
    if (a.checkpoints.empty()) throw soupkit::Error(soupkit::ErrorKind::kEmptyPool, "empty snapshot list");
  }
  const bool from_checkpoints = !a.checkpoints.empty();
  if (from_checkpoints == !a.preds.empty()) throw UsageError("give either --pred files or --checkpoint files");
  if (from_checkpoints && (a.spec.empty() || a.val.empty())) {
    throw UsageError("--checkpoint requires --spec and --val");
  }
  const std::vector<std::string>& ingredients = from_checkpoints ? a.checkpoints : a.preds;
  if (!a.names.empty() && a.names.size() != ingredients.size() + a.soups.size()) {
    throw UsageError("--name must be given once per ingredient and soup");
  }

  std::optional<soupkit::MlpSpec> spec;
  if (!a.spec.empty()) spec = load_spec(a.spec);
  std::optional<soupkit::LabeledDataset> val;
  if (!a.val.empty()) {
    val = load_labeled(a.val, "--val", spec ? std::optional<std::size_t>(spec->output_size()) : std::nullopt);
  }

  auto predictions_of = [&](const std::string& path) {
    if (from_checkpoints) {
      require_file(path, "--checkpoint");
      return soupkit::forward(soupkit::load_checkpoint(path), *spec, *val);
    }
    require_file(path, "--pred");
    return soupkit::load_predictions(path);
  };
  auto accuracy_of = [&](const soupkit::PredictionMatrix& p) -> std::optional<double> {
    if (!val) return std::nullopt;
    return soupkit::accuracy(p, val->labels);
  };

  std::vector<soupkit::ModelOutput> models;
  std::vector<soupkit::PredictionMatrix> ingredient_preds;
  std::size_t name_index = 0;
  auto add = [&](const std::string& path, const char* role) {
    soupkit::PredictionMatrix p = predictions_of(path);
    std::string name = a.names.empty() ? stem_name(path) : a.names[name_index];
    ++name_index;
    models.push_back({std::move(name), role, p, accuracy_of(p)});
    return p;
  };
  for (const std::string& path : ingredients) ingredient_preds.push_back(add(path, "ingredient"));
  for (const std::string& path : a.soups) add(path, "soup");
  if (a.softvote) {
    soupkit::PredictionMatrix p = soupkit::soft_vote(ingredient_preds);
    models.push_back({"soft_vote", "soft_vote", p, accuracy_of(p)});
  }
  if (models.size() < 2) {
    throw soupkit::Error(soupkit::ErrorKind::kTooFewModels, "need at least 2 models, got " +
                                                                 std::to_string(models.size()));
  }

  const soupkit::DiversityReport report = soupkit::diversity_report(models, a.dims);
  const fs::path out = prepare_out_dir(a.out_dir);
  soupkit::write_text_file(out / "distances.csv", soupkit::distances_to_csv(report.distances));
  soupkit::write_text_file(out / "embedding.csv", soupkit::embedding_to_csv(report.embedding, report.accuracies));
  write_json(out / "diagnostics.json", soupkit::diagnostics_json(report));
  std::cout << "analyze: " << models.size() << " models, stress "
            << (report.stress ? soupkit::format_double(*report.stress) : std::string("n/a")) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SoftvoteArgs {
  std::vector<std::string> preds;
  std::string val;
  std::string out_dir = ".";
};

int run_softvote(const SoftvoteArgs& a) {
  std::vector<soupkit::PredictionMatrix> preds;
  for (const std::string& path : a.preds) {
    require_file(path, "--pred");
    preds.push_back(soupkit::load_predictions(path));
  }
  const soupkit::PredictionMatrix vote = soupkit::soft_vote(preds);
  const fs::path out = prepare_out_dir(a.out_dir);
  soupkit::save_predictions(vote, out / "softvote.csv");
  if (!a.val.empty()) {
    const soupkit::LabeledDataset ds = load_labeled(a.val, "--val", vote.classes());
    const soupkit::MetricsReport r = soupkit::macro_metrics(vote, ds.labels, ds.num_classes);
    write_json(out / "metrics.json", soupkit::to_json(r));
    std::cout << soupkit::render_metrics_text(r);
  }
  std::cout << "softvote: averaged " << preds.size() << " models\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string out_dir;
  soupkit::FixtureOptions fixture;
};

int run_generate(const GenerateArgs& a) {
  soupkit::write_fixture(prepare_out_dir(a.out_dir), a.fixture);
  std::cout << "generate: wrote fixture (seed " << a.fixture.seed << ") to " << a.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soupkit: weight-space checkpoint ensembling and ensemble diversity analysis"};
  app.require_subcommand(1);
  app.footer("Environment: SOUPKIT_THREADS caps internal parallelism (0 = auto).\n"
             "Exit status: 0 success, 2 invalid input or usage, 1 internal error.");

  std::function<int()> command;

  PoolArgs pool;
  auto* pool_cmd = app.add_subcommand("pool", "Build the candidate pool from a snapshot manifest (top-k per metric)");
  pool_cmd->add_option("--manifest", pool.manifest, "Snapshot manifest JSON (epoch, path, loss, accuracy, f1)")
      ->required();
  pool_cmd->add_option("--k", pool.k, "Snapshots retained per metric")->capture_default_str()->check(CLI::PositiveNumber);
  pool_cmd->add_option("--out-dir", pool.out_dir, "Directory for pool.json and pool_summary.json")
      ->capture_default_str();
  pool_cmd->callback([&] { command = [&] { return run_pool(pool); }; });

  SoupArgs soup;
  auto* soup_cmd = app.add_subcommand("soup", "Average a candidate pool into a single checkpoint");
  soup_cmd->add_option("--manifest", soup.manifest, "Pool manifest JSON (as written by 'pool')")->required();
  soup_cmd->add_option("--mode", soup.mode, "uniform, greedy (index order) or greedy-sorted (by accuracy)")
      ->capture_default_str()
      ->check(CLI::IsMember({"uniform", "greedy", "greedy-sorted"}));
  soup_cmd->add_option("--val", soup.val, "Validation dataset CSV (required for greedy modes)");
  soup_cmd->add_option("--spec", soup.spec, "MLP spec JSON (required for greedy modes)");
  soup_cmd->add_option("--out-dir", soup.out_dir, "Directory for soup.ckpt.json and selection.json")
      ->capture_default_str();
  soup_cmd->callback([&] { command = [&] { return run_soup(soup); }; });

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy and macro precision/recall/F1 of checkpoints on a test set");
  eval_cmd->add_option("--checkpoint", eval.checkpoints, "Checkpoint file; repeat to compare and pick the best")
      ->required();
  eval_cmd->add_option("--spec", eval.spec, "MLP spec JSON")->required();
  eval_cmd->add_option("--test", eval.test, "Test dataset CSV")->required();
  eval_cmd->add_option("--baseline", eval.baseline, "Earlier metrics JSON; adds signed deltas to the report");
  eval_cmd->add_option("--out-dir", eval.out_dir, "Directory for metrics.json")->capture_default_str();
  eval_cmd->callback([&] { command = [&] { return run_eval(eval); }; });

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Cross-entropy distances and MDS embedding of several models");
  analyze_cmd->add_option("--pred", analyze.preds, "Prediction CSV of an ingredient model (repeatable)");
  analyze_cmd->add_option("--checkpoint", analyze.checkpoints, "Ingredient checkpoint (repeatable; needs --spec, --val)");
  analyze_cmd->add_option("--manifest", analyze.manifest, "Pool manifest whose checkpoints are ingredients");
  analyze_cmd->add_option("--soup", analyze.soups, "Soup model, same file kind as the ingredients (repeatable)");
  analyze_cmd->add_option("--name", analyze.names, "Model names, ingredients first then soups (repeatable)");
  analyze_cmd->add_option("--spec", analyze.spec, "MLP spec JSON");
  analyze_cmd->add_option("--val", analyze.val, "Labelled dataset CSV; enables accuracy annotation");
  analyze_cmd->add_flag("--softvote", analyze.softvote, "Add the soft-voting ensemble of the ingredients");
  analyze_cmd->add_option("--dim", analyze.dims, "Embedding dimension")->capture_default_str()->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--out-dir", analyze.out_dir, "Directory for distances.csv, embedding.csv, diagnostics.json")
      ->capture_default_str();
  analyze_cmd->callback([&] { command = [&] { return run_analyze(analyze); }; });

  SoftvoteArgs softvote;
  auto* softvote_cmd = app.add_subcommand("softvote", "Average prediction CSVs (soft voting)");
  softvote_cmd->add_option("--pred", softvote.preds, "Prediction CSV (repeatable)")->required();
  softvote_cmd->add_option("--val", softvote.val, "Labelled dataset CSV; writes metrics.json");
  softvote_cmd->add_option("--out-dir", softvote.out_dir, "Directory for softvote.csv")->capture_default_str();
  softvote_cmd->callback([&] { command = [&] { return run_softvote(softvote); }; });

  GenerateArgs generate;
  auto* generate_cmd = app.add_subcommand("generate", "Write a seeded synthetic workload (datasets, snapshots, manifest)");
  generate_cmd->add_option("--out-dir", generate.out_dir, "Destination directory")->required();
  generate_cmd->add_option("--seed", generate.fixture.seed, "RNG seed")->capture_default_str();
  generate_cmd->add_option("--epochs", generate.fixture.epochs, "Number of snapshots")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  generate_cmd->add_option("--layers", generate.fixture.layer_sizes, "MLP layer sizes, input first")
      ->capture_default_str()
      ->expected(2, -1);
  generate_cmd->add_option("--val-size", generate.fixture.val_size, "Validation samples")->capture_default_str();
  generate_cmd->add_option("--test-size", generate.fixture.test_size, "Test samples")->capture_default_str();
  generate_cmd->callback([&] { command = [&] { return run_generate(generate); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    return command();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitInput;
  } catch (const soupkit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_input_error() ? kExitInput : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
