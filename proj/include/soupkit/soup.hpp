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
#include <concepts>
#include <cstddef>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "soupkit/error.hpp"
#include "soupkit/inference.hpp"
#include "soupkit/tensor_store.hpp"

namespace soupkit {

/// Validation-time record of one training epoch.
struct SnapshotMetrics {
  long long epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

struct Snapshot {
  SnapshotMetrics metrics;
  Checkpoint checkpoint;
};

/// T candidate checkpoints with the metric(s) that retained each one.
struct CandidatePool {
  std::vector<Checkpoint> checkpoints;
  std::vector<std::string> source_tags;
  std::vector<long long> epoch_ids;

  std::size_t size() const { return checkpoints.size(); }
  bool empty() const { return checkpoints.empty(); }

  std::vector<const Checkpoint*> pointers() const {
    std::vector<const Checkpoint*> out;
    for (const Checkpoint& cp : checkpoints) out.push_back(&cp);
    return out;
  }
};

struct PoolEntry {
  std::size_t snapshot = 0;  // index into the snapshot list
  std::string tag;           // e.g. "loss+f1"
};

/// Union of the k lowest-loss, k highest-accuracy and k highest-F1 snapshots,
/// one entry per epoch, sorted by epoch. Metric ties keep input order.
inline std::vector<PoolEntry> select_pool_entries(std::span<const SnapshotMetrics> snapshots, std::size_t k) {
  if (snapshots.empty()) fail(ErrorKind::kEmptyPool, "empty snapshot list");
  if (k == 0) fail(ErrorKind::kInvalidArgument, "k must be at least 1");
  std::set<long long> seen;
  for (const SnapshotMetrics& s : snapshots) {
    if (!std::isfinite(s.loss) || !std::isfinite(s.accuracy) || !std::isfinite(s.f1)) {
      fail(ErrorKind::kInvalidArgument, "non-finite metric at epoch " + std::to_string(s.epoch));
    }
    if (!seen.insert(s.epoch).second) {
      fail(ErrorKind::kInvalidArgument, "duplicate epoch " + std::to_string(s.epoch) + " in snapshot list");
    }
  }

  const std::size_t n = snapshots.size();
  std::vector<unsigned> mask(n, 0);
  auto take_top = [&](auto better, unsigned bit) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), better);
    for (std::size_t i = 0; i < std::min(k, n); ++i) mask[order[i]] |= bit;
  };
  take_top([&](std::size_t a, std::size_t b) { return snapshots[a].loss < snapshots[b].loss; }, 1u);
  take_top([&](std::size_t a, std::size_t b) { return snapshots[a].accuracy > snapshots[b].accuracy; }, 2u);
  take_top([&](std::size_t a, std::size_t b) { return snapshots[a].f1 > snapshots[b].f1; }, 4u);

  std::vector<PoolEntry> entries;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] == 0) continue;
    std::string tag;
    for (auto [bit, name] : {std::pair{1u, "loss"}, std::pair{2u, "accuracy"}, std::pair{4u, "f1"}}) {
      if (mask[i] & bit) tag += (tag.empty() ? "" : "+") + std::string(name);
    }
    entries.push_back({i, tag});
  }
  std::sort(entries.begin(), entries.end(), [&](const PoolEntry& a, const PoolEntry& b) {
    return snapshots[a.snapshot].epoch < snapshots[b.snapshot].epoch;
  });
  return entries;
}

inline CandidatePool build_candidate_pool(std::span<const Snapshot> snapshots, std::size_t k) {
  if (snapshots.empty()) fail(ErrorKind::kEmptyPool, "empty snapshot list");
  std::vector<SnapshotMetrics> metrics;
  std::vector<const Checkpoint*> cps;
  for (const Snapshot& s : snapshots) {
    metrics.push_back(s.metrics);
    cps.push_back(&s.checkpoint);
  }
  schema_check(cps);
  CandidatePool pool;
  for (const PoolEntry& e : select_pool_entries(metrics, k)) {
    pool.checkpoints.push_back(snapshots[e.snapshot].checkpoint);
    pool.source_tags.push_back(e.tag);
    pool.epoch_ids.push_back(snapshots[e.snapshot].metrics.epoch);
  }
  return pool;
}

/// Equal-weight average over every candidate in the pool.
inline Checkpoint uniform_soup(const CandidatePool& pool) {
  if (pool.empty()) fail(ErrorKind::kEmptyPool, "empty candidate pool");
  const auto ptrs = pool.pointers();
  return average(ptrs);
}

// ---------------------------------------------------------------------------
// Greedy selection

template <typename E>
concept Evaluator = std::invocable<const E&, const Checkpoint&, const LabeledDataset&> &&
                    std::convertible_to<std::invoke_result_t<const E&, const Checkpoint&, const LabeledDataset&>, double>;

enum class GreedyOrder {
  kAsPrinted,  // candidates visited in pool index order
  kSorted,     // visited by descending individual accuracy (ties: lower index)
};

struct TraceEntry {
  std::size_t candidate = 0;
  double accuracy = 0.0;  // accuracy of the tentative soup with this candidate
  bool accepted = false;

  bool operator==(const TraceEntry&) const = default;
};

struct SoupSelection {
  std::vector<std::size_t> selected;        // acceptance order; front is the best single candidate
  std::vector<TraceEntry> trace;            // one entry per candidate considered
  std::vector<double> individual_accuracy;  // per pool index; empty for uniform soups

  bool operator==(const SoupSelection&) const = default;
};

struct GreedySoup {
  SoupSelection selection;
  Checkpoint soup;
  double accuracy = 0.0;  // validation accuracy of `soup`
};

namespace detail {

template <Evaluator E>
double evaluate_checked(const E& eval, const Checkpoint& cp, const LabeledDataset& val) {
  double acc = 0.0;
  try {
    acc = static_cast<double>(eval(cp, val));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorKind::kEvaluatorFailure, e.what());
  }
  if (!(acc >= 0.0 && acc <= 1.0)) {
    fail(ErrorKind::kEvaluatorFailure, "evaluator returned accuracy outside [0,1]: " + format_double(acc));
  }
  return acc;
}

}  // namespace detail

/// Greedy soup: start from the candidate with the best validation accuracy,
/// then visit the others once and keep each whose addition does not lower
/// the validation accuracy of the running average (ties are accepted).
///
/// Tentative soups are averaged over the current selection in acceptance
/// order followed by the candidate; the final soup uses the same order, so
/// it is bitwise the last accepted tentative soup and its accuracy is the
/// cached running accuracy.
template <Evaluator E>
GreedySoup greedy_soup(const CandidatePool& pool, const E& eval, const LabeledDataset& val,
                       GreedyOrder order = GreedyOrder::kAsPrinted) {
  if (pool.empty()) fail(ErrorKind::kEmptyPool, "empty candidate pool");
  const auto all = pool.pointers();
  schema_check(all);
  const std::size_t t = pool.size();

  GreedySoup result;
  SoupSelection& sel = result.selection;
  sel.individual_accuracy.reserve(t);
  for (const Checkpoint& cp : pool.checkpoints) sel.individual_accuracy.push_back(detail::evaluate_checked(eval, cp, val));

  const auto& ind = sel.individual_accuracy;
  const std::size_t best = static_cast<std::size_t>(std::max_element(ind.begin(), ind.end()) - ind.begin());
  sel.selected.push_back(best);
  sel.trace.push_back({best, ind[best], true});
  double current = ind[best];

  std::vector<std::size_t> visit(t);
  std::iota(visit.begin(), visit.end(), 0);
  if (order == GreedyOrder::kSorted) {
    std::stable_sort(visit.begin(), visit.end(), [&](std::size_t a, std::size_t b) { return ind[a] > ind[b]; });
  }

  std::vector<bool> in_soup(t, false);
  in_soup[best] = true;
  std::vector<const Checkpoint*> members{all[best]};
  for (std::size_t k : visit) {
    if (in_soup[k]) continue;
    members.push_back(all[k]);
    const double tried = detail::evaluate_checked(eval, average(members), val);
    const bool accept = tried >= current;
    sel.trace.push_back({k, tried, accept});
    if (accept) {
      current = tried;
      in_soup[k] = true;
      sel.selected.push_back(k);
    } else {
      members.pop_back();
    }
  }

  result.soup = average(members);
  result.accuracy = current;
  return result;
}

/// Selection record for a uniform soup: every candidate, no trace.
inline SoupSelection uniform_selection(const CandidatePool& pool) {
  SoupSelection sel;
  sel.selected.resize(pool.size());
  std::iota(sel.selected.begin(), sel.selected.end(), 0);
  return sel;
}

// ---------------------------------------------------------------------------
// Reporting

inline nlohmann::json soup_report(const SoupSelection& sel, const CandidatePool& pool, const std::string& mode,
                                  std::optional<double> soup_accuracy = std::nullopt) {
  using nlohmann::json;
  const std::size_t t = pool.size();
  auto check = [&](std::size_t i) {
    if (i >= t) fail(ErrorKind::kIndexOutOfRange, "candidate index " + std::to_string(i) + " >= pool size " +
                                                      std::to_string(t));
  };
  for (std::size_t i : sel.selected) check(i);
  for (const TraceEntry& e : sel.trace) check(e.candidate);
  if (!sel.individual_accuracy.empty() && sel.individual_accuracy.size() != t) {
    fail(ErrorKind::kLengthMismatch, "individual accuracies do not cover the pool");
  }

  std::vector<bool> accepted(t, false);
  for (std::size_t i : sel.selected) accepted[i] = true;
  std::vector<std::optional<double>> tried(t);
  for (const TraceEntry& e : sel.trace) tried[e.candidate] = e.accuracy;

  json candidates = json::array();
  for (std::size_t i = 0; i < t; ++i) {
    json row = {{"index", i},
                {"epoch", pool.epoch_ids.at(i)},
                {"source", pool.source_tags.at(i)},
                {"individual_accuracy", nullptr},
                {"tried_accuracy", nullptr},
                {"accepted", static_cast<bool>(accepted[i])}};
    if (!sel.individual_accuracy.empty()) row["individual_accuracy"] = sel.individual_accuracy[i];
    if (tried[i]) row["tried_accuracy"] = *tried[i];
    candidates.push_back(row);
  }
  json trace = json::array();
  for (const TraceEntry& e : sel.trace) {
    trace.push_back({{"candidate", e.candidate}, {"accuracy", e.accuracy}, {"accepted", e.accepted}});
  }
  json report = {{"format_version", 1},
                 {"mode", mode},
                 {"pool_size", t},
                 {"selected", sel.selected},
                 {"selected_count", sel.selected.size()},
                 {"candidates", candidates},
                 {"trace", trace},
                 {"soup_accuracy", nullptr}};
  if (soup_accuracy) report["soup_accuracy"] = *soup_accuracy;
  return report;
}

inline SoupSelection selection_from_json(const nlohmann::json& j) {
  try {
    SoupSelection sel;
    sel.selected = j.at("selected").get<std::vector<std::size_t>>();
    for (const auto& e : j.at("trace")) {
      sel.trace.push_back({e.at("candidate").get<std::size_t>(), e.at("accuracy").get<double>(),
                           e.at("accepted").get<bool>()});
    }
    const auto& candidates = j.at("candidates");
    if (!candidates.empty() && !candidates.front().at("individual_accuracy").is_null()) {
      for (const auto& c : candidates) sel.individual_accuracy.push_back(c.at("individual_accuracy").get<double>());
    }
    return sel;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedFile, std::string("selection report: ") + e.what());
  }
}

}  // namespace soupkit
