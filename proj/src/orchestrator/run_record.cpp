#include "alsent/orchestrator/run_record.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "alsent/io.hpp"
#include "alsent/models/trainer.hpp"

namespace alsent::orchestrator {

namespace {

long hundredths(double x) {
  const long r4 = std::lround(x * 1e4);
  return r4 >= 0 ? (r4 + 50) / 100 : -((-r4 + 50) / 100);
}

nlohmann::ordered_json train_to_json(const models::TrainConfig& t) {
  nlohmann::ordered_json j;
  j["epochs"] = t.epochs;
  j["batch_size"] = t.batch_size;
  j["patience"] = t.patience;
  j["learning_rate"] = t.learning_rate;
  return j;
}

models::TrainConfig train_from_json(const nlohmann::json& j) {
  models::TrainConfig t;
  t.epochs = j.at("epochs").get<int>();
  t.batch_size = j.at("batch_size").get<int>();
  t.patience = j.at("patience").get<int>();
  t.learning_rate = j.at("learning_rate").get<double>();
  return t;
}

CycleRecord cycle_from_json(const nlohmann::json& j) {
  CycleRecord c;
  c.cycle = j.at("cycle").get<int>();
  c.label_count = j.at("label_count").get<long>();
  c.labeled_after_selection = j.at("labeled_after_selection").get<long>();
  c.pool_after_selection = j.at("pool_after_selection").get<long>();
  c.metrics.accuracy = j.at("accuracy").get<double>();
  c.metrics.precision = j.at("precision").get<double>();
  c.metrics.recall = j.at("recall").get<double>();
  c.metrics.f1 = j.at("f1").get<double>();
  c.metrics.confusion = j.at("confusion").get<std::vector<std::vector<long>>>();
  c.annotation_sources = j.at("annotation_sources").get<std::map<std::string, long>>();
  c.flagged_fallbacks = j.at("flagged_fallbacks").get<long>();
  c.best_epoch = j.at("best_epoch").get<int>();
  c.epochs_run = j.at("epochs_run").get<int>();
  c.test_sha256 = j.at("test_sha256").get<std::string>();
  for (const auto& s : j.at("selected")) {
    c.selected.push_back({s.at("sample_id").get<std::string>(), s.at("label").get<std::string>(),
                          s.at("source").get<std::string>()});
  }
  return c;
}

}  // namespace

std::string kind_name(RunKind kind) {
  switch (kind) {
    case RunKind::kBaseline:
      return "baseline";
    case RunKind::kAlHuman:
      return "al_human";
    case RunKind::kAlLlm:
      return "al_llm";
    case RunKind::kAlOracle:
      return "al_oracle";
  }
  return "unknown";
}

RunKind parse_kind(const std::string& name) {
  for (RunKind k : {RunKind::kBaseline, RunKind::kAlHuman, RunKind::kAlLlm, RunKind::kAlOracle}) {
    if (kind_name(k) == name) return k;
  }
  throw Error("RecordError", "unknown run kind '" + name + "'");
}

void StoppingRule::validate() const {
  if (max_cycles < 1) throw Error("SpecError", "max_cycles must be at least 1");
  if (batch_size < 1 || seed_size < 1) throw Error("SpecError", "batch_size and seed_size must be positive");
}

std::optional<int> find_matching_cycle(const RunRecord& record, double target) {
  const long want = hundredths(target);
  for (const CycleRecord& c : record.cycles) {
    if (hundredths(c.metrics.accuracy) >= want) return c.cycle;
  }
  return std::nullopt;
}

nlohmann::ordered_json cycle_to_json(const CycleRecord& c) {
  nlohmann::ordered_json j;
  j["cycle"] = c.cycle;
  j["label_count"] = c.label_count;
  j["labeled_after_selection"] = c.labeled_after_selection;
  j["pool_after_selection"] = c.pool_after_selection;
  j["accuracy"] = models::round4(c.metrics.accuracy);
  j["precision"] = models::round4(c.metrics.precision);
  j["recall"] = models::round4(c.metrics.recall);
  j["f1"] = models::round4(c.metrics.f1);
  j["confusion"] = c.metrics.confusion;
  j["annotation_sources"] = c.annotation_sources;
  j["flagged_fallbacks"] = c.flagged_fallbacks;
  j["best_epoch"] = c.best_epoch;
  j["epochs_run"] = c.epochs_run;
  j["test_sha256"] = c.test_sha256;
  j["selected"] = nlohmann::ordered_json::array();
  for (const SelectedLabel& s : c.selected) {
    j["selected"].push_back({{"sample_id", s.sample_id}, {"label", s.label}, {"source", s.source}});
  }
  return j;
}

nlohmann::ordered_json record_to_json(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kRunSchemaVersion;
  j["run_id"] = r.run_id;
  j["kind"] = kind_name(r.kind);
  j["status"] = r.status;
  j["dataset"] = {{"name", r.dataset_name},
                  {"sha256", r.dataset_sha256},
                  {"label_set", r.label_set},
                  {"train_size", r.train_size},
                  {"val_size", r.val_size},
                  {"test_size", r.test_size},
                  {"test_sha256", r.test_sha256}};
  const nlohmann::json spec_fields = models::spec_to_json(r.spec);
  nlohmann::ordered_json spec;
  for (const auto& [k, v] : spec_fields.items()) spec[k] = v;
  j["model_spec"] = spec;
  nlohmann::ordered_json config;
  config["seed"] = r.seed;
  config["split"] = {{"train_frac", r.split.train_frac},
                     {"val_frac", r.split.val_frac},
                     {"test_frac", r.split.test_frac},
                     {"seed", r.split.seed}};
  config["vocab_size"] = r.vocab_size;
  config["train"] = train_to_json(r.train);
  if (r.rule) {
    nlohmann::ordered_json rule;
    rule["max_cycles"] = r.rule->max_cycles;
    rule["batch_size"] = r.rule->batch_size;
    rule["seed_size"] = r.rule->seed_size;
    rule["target_accuracy"] = r.rule->target_accuracy ? nlohmann::ordered_json(models::round4(*r.rule->target_accuracy))
                                                      : nlohmann::ordered_json(nullptr);
    config["stopping_rule"] = rule;
  }
  config["annotator"] = r.annotator;
  config["baseline_run_id"] = r.baseline_run_id ? nlohmann::ordered_json(*r.baseline_run_id) : nlohmann::ordered_json(nullptr);
  j["config"] = config;
  j["seed_set"] = r.seed_set;
  j["cycles"] = nlohmann::ordered_json::array();
  for (const CycleRecord& c : r.cycles) j["cycles"].push_back(cycle_to_json(c));
  j["chosen_cycle"] = r.chosen_cycle ? nlohmann::ordered_json(*r.chosen_cycle) : nlohmann::ordered_json(nullptr);
  j["created_at"] = r.created_at;
  j["updated_at"] = r.updated_at;
  return j;
}

RunRecord record_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kRunSchemaVersion) {
      throw Error("RecordError", "unsupported schema_version " + j.at("schema_version").dump());
    }
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.kind = parse_kind(j.at("kind").get<std::string>());
    r.status = j.at("status").get<std::string>();
    const auto& d = j.at("dataset");
    r.dataset_name = d.at("name").get<std::string>();
    r.dataset_sha256 = d.at("sha256").get<std::string>();
    r.label_set = d.at("label_set").get<std::vector<std::string>>();
    r.train_size = d.at("train_size").get<std::size_t>();
    r.val_size = d.at("val_size").get<std::size_t>();
    r.test_size = d.at("test_size").get<std::size_t>();
    r.test_sha256 = d.at("test_sha256").get<std::string>();
    r.spec = models::spec_from_json(j.at("model_spec"));
    const auto& c = j.at("config");
    r.seed = c.at("seed").get<std::uint64_t>();
    const auto& s = c.at("split");
    r.split.train_frac = s.at("train_frac").get<double>();
    r.split.val_frac = s.at("val_frac").get<double>();
    r.split.test_frac = s.at("test_frac").get<double>();
    r.split.seed = s.at("seed").get<std::uint64_t>();
    r.vocab_size = c.at("vocab_size").get<std::size_t>();
    r.train = train_from_json(c.at("train"));
    r.train.seed = r.seed;
    if (c.contains("stopping_rule")) {
      const auto& rj = c.at("stopping_rule");
      StoppingRule rule;
      rule.max_cycles = rj.at("max_cycles").get<int>();
      rule.batch_size = rj.at("batch_size").get<int>();
      rule.seed_size = rj.at("seed_size").get<int>();
      if (!rj.at("target_accuracy").is_null()) rule.target_accuracy = rj.at("target_accuracy").get<double>();
      r.rule = rule;
    }
    r.annotator = c.at("annotator").get<std::string>();
    if (!c.at("baseline_run_id").is_null()) r.baseline_run_id = c.at("baseline_run_id").get<std::string>();
    r.seed_set = j.at("seed_set").get<std::vector<std::string>>();
    for (const auto& cj : j.at("cycles")) r.cycles.push_back(cycle_from_json(cj));
    if (!j.at("chosen_cycle").is_null()) r.chosen_cycle = j.at("chosen_cycle").get<int>();
    r.created_at = j.at("created_at").get<std::string>();
    r.updated_at = j.at("updated_at").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error("RecordError", std::string("malformed run record: ") + e.what());
  }
}

std::string canonical_record(const RunRecord& record) {
  auto j = record_to_json(record);
  j.erase("created_at");
  j.erase("updated_at");
  return j.dump();
}

std::filesystem::path RunStore::path_of(const std::string& run_id) const {
  if (run_id.empty() || sanitize_id(run_id) != run_id) throw Error("UnknownRun", "invalid run id '" + run_id + "'");
  return dir_ / (run_id + ".json");
}

bool RunStore::exists(const std::string& run_id) const { return std::filesystem::exists(path_of(run_id)); }

void RunStore::save(const RunRecord& record) const {
  write_file_atomic(path_of(record.run_id), record_to_json(record).dump(2) + "\n");
}

RunRecord RunStore::load(const std::string& run_id) const {
  const auto path = path_of(run_id);
  if (!std::filesystem::exists(path)) throw Error("UnknownRun", "no run record '" + run_id + "' in " + dir_.string());
  try {
    return record_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("RecordError", path.string() + ": " + e.what());
  }
}

std::vector<std::string> RunStore::list() const {
  std::vector<std::string> ids;
  if (!std::filesystem::is_directory(dir_)) return ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    const auto& p = entry.path();
    if (p.extension() == ".json" && sanitize_id(p.stem().string()) == p.stem().string()) ids.push_back(p.stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string sanitize_id(const std::string& raw) {
  std::string out;
  for (unsigned char c : raw) {
    if (std::isalnum(c)) {
      out += static_cast<char>(std::tolower(c));
    } else if (c == '-' || c == '_') {
      out += static_cast<char>(c);
    } else if (!out.empty() && out.back() != '-') {
      out += '-';
    }
  }
  return out;
}

}  // namespace alsent::orchestrator
