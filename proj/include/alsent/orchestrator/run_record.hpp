#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "alsent/models/metrics.hpp"
#include "alsent/models/spec.hpp"
#include "alsent/models/split.hpp"

namespace alsent::orchestrator {

inline constexpr int kRunSchemaVersion = 1;

enum class RunKind { kBaseline, kAlHuman, kAlLlm, kAlOracle };
// "baseline", "al_human", "al_llm", "al_oracle".
std::string kind_name(RunKind kind);
RunKind parse_kind(const std::string& name);

struct StoppingRule {
  int max_cycles = 25;
  int batch_size = 50;
  int seed_size = 50;
  std::optional<double> target_accuracy;

  void validate() const;
};

struct SelectedLabel {
  std::string sample_id;
  std::string label;
  std::string source;  // annotation source, or "fallback"
};

struct CycleRecord {
  int cycle = 0;
  // Labels the cycle's model was trained on. For a baseline, the training split size.
  long label_count = 0;
  // Labeled set size once this cycle's selections are absorbed.
  long labeled_after_selection = 0;
  long pool_after_selection = 0;
  models::MetricsReport metrics;
  std::map<std::string, long> annotation_sources;
  long flagged_fallbacks = 0;
  int best_epoch = 0;
  int epochs_run = 0;
  std::string test_sha256;
  std::vector<SelectedLabel> selected;
};

struct RunRecord {
  std::string run_id;
  RunKind kind = RunKind::kBaseline;
  std::string status = "running";  // running | complete
  std::string dataset_name;
  std::string dataset_sha256;
  std::vector<std::string> label_set;
  std::size_t train_size = 0, val_size = 0, test_size = 0;
  std::string test_sha256;
  models::ModelSpec spec;
  models::TrainConfig train;
  models::SplitSpec split;
  std::size_t vocab_size = 0;
  std::uint64_t seed = 0;
  std::optional<StoppingRule> rule;
  std::string annotator;
  std::optional<std::string> baseline_run_id;
  std::vector<std::string> seed_set;
  std::vector<CycleRecord> cycles;
  std::optional<int> chosen_cycle;
  std::string created_at, updated_at;
};

// Smallest cycle whose accuracy, rounded to 2 decimals, is at least the
// target rounded to 2 decimals. Values are first rounded to the 4 decimals
// they are stored with so a loaded record and a live one agree.
std::optional<int> find_matching_cycle(const RunRecord& record, double target);

nlohmann::ordered_json cycle_to_json(const CycleRecord& cycle);
nlohmann::ordered_json record_to_json(const RunRecord& record);
// Throws Error("RecordError") for malformed documents or another schema version.
RunRecord record_from_json(const nlohmann::json& j);
// Serialized record with the timestamp fields removed.
std::string canonical_record(const RunRecord& record);

// One JSON document per run, named <run_id>.json.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_of(const std::string& run_id) const;
  bool exists(const std::string& run_id) const;
  void save(const RunRecord& record) const;
  // Throws Error("UnknownRun").
  RunRecord load(const std::string& run_id) const;
  std::vector<std::string> list() const;

 private:
  std::filesystem::path dir_;
};

// Lower-case letters, digits, '-' and '_' only.
std::string sanitize_id(const std::string& raw);

}  // namespace alsent::orchestrator
