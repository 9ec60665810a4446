#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "alsent/orchestrator/run_record.hpp"

namespace alsent::orchestrator {

// Per-cycle accuracy series, one per run, in the given order. Baseline runs
// contribute a single point and are also listed as horizontal references.
// Values are the stored CycleRecord fields. Throws Error("InvalidArgument")
// for an empty list.
nlohmann::ordered_json report_json(const std::vector<RunRecord>& runs);
// run_id,kind,cycle,label_count,accuracy,precision,recall,f1
std::string report_csv(const std::vector<RunRecord>& runs);

std::vector<RunRecord> load_runs(const RunStore& store, const std::vector<std::string>& run_ids);

}  // namespace alsent::orchestrator
