#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "alsent/annotate/annotator.hpp"
#include "alsent/orchestrator/prepare.hpp"
#include "alsent/orchestrator/run_record.hpp"

namespace alsent::orchestrator {

// Metadata shared by baseline and AL records for a prepared dataset.
RunRecord new_record(const std::string& run_id, RunKind kind, const PreparedData& data,
                     const models::ModelSpec& spec, const models::TrainConfig& train, std::uint64_t seed);

// "baseline-<dataset>-<arch>-s<seed>" / "al-<source>-<dataset>-<arch>-s<seed>".
std::string baseline_run_id(const std::string& dataset, models::Arch arch, std::uint64_t seed);
std::string al_run_id(const std::string& dataset, annotate::Source source, models::Arch arch, std::uint64_t seed);

// Trains on the full training split and evaluates on test. The record
// holds a single cycle numbered 0 whose label_count is the training size.
// Persists to `store` when given.
RunRecord run_baseline(const PreparedData& data, const models::ModelSpec& spec, const models::TrainConfig& train,
                       std::uint64_t seed, const std::string& run_id, const RunStore* store = nullptr);

struct LabeledEntry {
  std::size_t index = 0;  // into PreparedData::train
  int label = 0;
  std::string source;  // "seed", an annotation source, or "fallback"
};

struct PoolState {
  std::vector<LabeledEntry> labeled;
  // Ascending indices into PreparedData::train.
  std::vector<std::size_t> unlabeled;
  int cycle = 0;  // completed cycles
};

// seed_size uniformly drawn training samples with gold labels; the rest
// form the pool. Throws DatasetTooSmall.
PoolState init_al(const PreparedData& data, const StoppingRule& rule, std::uint64_t seed);

struct CycleOutcome {
  PoolState state;
  CycleRecord record;
};

// One transactional cycle: train a fresh model (seeded from seed and the
// cycle number) on the labeled set, score the pool by entropy, label the
// top min(batch_size, pool) via `annotator`, absorb them and evaluate the
// trained model on test. Requests that fail after the annotator's retries
// get the labeled set's majority class and are flagged. Whole-call
// annotator errors propagate; `state` is never modified.
CycleOutcome run_cycle(const PreparedData& data, const PoolState& state, const models::ModelSpec& spec,
                       const models::TrainConfig& train, const StoppingRule& rule, annotate::Annotator& annotator,
                       std::uint64_t seed);

// Rebuilds the pool state a record describes (seed set plus every cycle's
// selections). Throws RecordError when the record does not fit `data`.
PoolState replay_state(const PreparedData& data, const RunRecord& record);

using CycleCallback = std::function<void(const RunRecord&)>;

// Runs cycles until max_cycles or until a cycle starts with an empty pool,
// continuing after any cycles already in `record`. The record is saved
// after every cycle, before the annotator's labels are committed.
// chosen_cycle follows rule.target_accuracy.
RunRecord run_active_learning(const PreparedData& data, RunRecord record, annotate::Annotator& annotator,
                              const RunStore* store = nullptr, const CycleCallback& on_cycle = {});

// Fresh AL record for `data`; seed_set is filled from init_al.
RunRecord new_al_record(const std::string& run_id, const PreparedData& data, const models::ModelSpec& spec,
                        const models::TrainConfig& train, const StoppingRule& rule, std::uint64_t seed,
                        annotate::Source source, const std::string& annotator_name);

// Throws Error("TestSetMismatch") unless the two runs share dataset and test split.
void check_same_test_set(const RunRecord& baseline, const RunRecord& run);

}  // namespace alsent::orchestrator
