#include "alsent/orchestrator/report.hpp"

#include <sstream>

#include "alsent/models/metrics.hpp"

namespace alsent::orchestrator {

namespace {

void require_runs(const std::vector<RunRecord>& runs) {
  if (runs.empty()) throw Error("InvalidArgument", "report needs at least one run id");
}

// Shortest text that parses back to the stored 4-decimal value.
std::string number(double x) { return nlohmann::json(models::round4(x)).dump(); }

}  // namespace

std::vector<RunRecord> load_runs(const RunStore& store, const std::vector<std::string>& run_ids) {
  if (run_ids.empty()) throw Error("InvalidArgument", "report needs at least one run id");
  std::vector<RunRecord> runs;
  for (const auto& id : run_ids) runs.push_back(store.load(id));
  return runs;
}

nlohmann::ordered_json report_json(const std::vector<RunRecord>& runs) {
  require_runs(runs);
  nlohmann::ordered_json j;
  j["series"] = nlohmann::ordered_json::array();
  j["baselines"] = nlohmann::ordered_json::array();
  for (const RunRecord& r : runs) {
    nlohmann::ordered_json s;
    s["run_id"] = r.run_id;
    s["kind"] = kind_name(r.kind);
    s["dataset"] = r.dataset_name;
    s["arch"] = models::arch_name(r.spec.arch);
    s["chosen_cycle"] = r.chosen_cycle ? nlohmann::ordered_json(*r.chosen_cycle) : nlohmann::ordered_json(nullptr);
    s["points"] = nlohmann::ordered_json::array();
    for (const CycleRecord& c : r.cycles) {
      s["points"].push_back({{"cycle", c.cycle},
                             {"label_count", c.label_count},
                             {"accuracy", models::round4(c.metrics.accuracy)}});
    }
    if (r.kind == RunKind::kBaseline && !r.cycles.empty()) {
      j["baselines"].push_back({{"run_id", r.run_id},
                                {"label_count", r.cycles.front().label_count},
                                {"accuracy", models::round4(r.cycles.front().metrics.accuracy)}});
    }
    j["series"].push_back(std::move(s));
  }
  return j;
}

std::string report_csv(const std::vector<RunRecord>& runs) {
  require_runs(runs);
  std::ostringstream out;
  out << "run_id,kind,cycle,label_count,accuracy,precision,recall,f1\n";
  for (const RunRecord& r : runs) {
    for (const CycleRecord& c : r.cycles) {
      out << r.run_id << ',' << kind_name(r.kind) << ',' << c.cycle << ',' << c.label_count << ','
          << number(c.metrics.accuracy) << ',' << number(c.metrics.precision) << ',' << number(c.metrics.recall)
          << ',' << number(c.metrics.f1) << '\n';
    }
  }
  return out.str();
}

}  // namespace alsent::orchestrator
