#include "alsent/orchestrator/experiment.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "alsent/io.hpp"
#include "alsent/nn/rng.hpp"
#include "alsent/uncertainty/uncertainty.hpp"

namespace alsent::orchestrator {

namespace {

constexpr std::uint64_t kSeedSetTag = 0x5eed5e7;

std::string arch_slug(models::Arch arch) { return sanitize_id(models::arch_name(arch)); }

CycleRecord evaluate_cycle(const PreparedData& data, const models::TrainedModel& model, int cycle) {
  CycleRecord rec;
  rec.cycle = cycle;
  rec.metrics = models::evaluate(model, data.encoded(data.test));
  rec.best_epoch = model.best_epoch;
  rec.epochs_run = static_cast<int>(model.history.size());
  rec.test_sha256 = data.test_sha256();
  return rec;
}

int majority_label(const std::vector<LabeledEntry>& labeled, std::size_t classes) {
  std::vector<long> counts(classes, 0);
  for (const LabeledEntry& e : labeled) ++counts[static_cast<std::size_t>(e.label)];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

void check_record_matches(const PreparedData& data, const RunRecord& record) {
  if (record.dataset_sha256 != data.content_sha256 || record.test_sha256 != data.test_sha256() ||
      record.train_size != data.train.size()) {
    throw Error("TestSetMismatch", "run " + record.run_id + " was recorded on a different dataset or split");
  }
}

}  // namespace

RunRecord new_record(const std::string& run_id, RunKind kind, const PreparedData& data,
                     const models::ModelSpec& spec, const models::TrainConfig& train, std::uint64_t seed) {
  RunRecord r;
  r.run_id = run_id;
  r.kind = kind;
  r.dataset_name = data.name;
  r.dataset_sha256 = data.content_sha256;
  r.label_set = data.label_names();
  r.train_size = data.train.size();
  r.val_size = data.val.size();
  r.test_size = data.test.size();
  r.test_sha256 = data.test_sha256();
  r.spec = spec;
  r.train = train;
  r.train.seed = seed;
  r.split = data.split;
  r.vocab_size = data.vocab.max_size();
  r.seed = seed;
  r.created_at = utc_timestamp();
  r.updated_at = r.created_at;
  return r;
}

std::string baseline_run_id(const std::string& dataset, models::Arch arch, std::uint64_t seed) {
  return sanitize_id("baseline-" + dataset + "-" + arch_slug(arch) + "-s" + std::to_string(seed));
}

std::string al_run_id(const std::string& dataset, annotate::Source source, models::Arch arch, std::uint64_t seed) {
  return sanitize_id("al-" + annotate::source_name(source) + "-" + dataset + "-" + arch_slug(arch) + "-s" +
                     std::to_string(seed));
}

RunRecord run_baseline(const PreparedData& data, const models::ModelSpec& spec, const models::TrainConfig& train,
                       std::uint64_t seed, const std::string& run_id, const RunStore* store) {
  RunRecord record = new_record(run_id, RunKind::kBaseline, data, spec, train, seed);
  record.annotator = "gold";
  models::TrainConfig cfg = train;
  cfg.seed = seed;
  const models::TrainedModel model = models::train(spec, data.encoded(data.train), data.encoded(data.val), cfg);
  CycleRecord cycle = evaluate_cycle(data, model, 0);
  cycle.label_count = static_cast<long>(data.train.size());
  cycle.labeled_after_selection = cycle.label_count;
  record.cycles.push_back(std::move(cycle));
  record.status = "complete";
  record.updated_at = utc_timestamp();
  if (store) store->save(record);
  return record;
}

PoolState init_al(const PreparedData& data, const StoppingRule& rule, std::uint64_t seed) {
  rule.validate();
  const std::size_t n = data.train.size();
  if (n < static_cast<std::size_t>(rule.seed_size)) {
    throw Error("DatasetTooSmall", "training split has " + std::to_string(n) + " samples, seed set needs " +
                                       std::to_string(rule.seed_size));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  nn::RngStream rng(nn::derive_seed(seed, kSeedSetTag));
  rng.shuffle(order);
  PoolState state;
  const auto seed_end = order.begin() + rule.seed_size;
  for (auto it = order.begin(); it != seed_end; ++it) state.labeled.push_back({*it, data.train[*it].label, "seed"});
  state.unlabeled.assign(seed_end, order.end());
  std::sort(state.unlabeled.begin(), state.unlabeled.end());
  return state;
}

CycleOutcome run_cycle(const PreparedData& data, const PoolState& state, const models::ModelSpec& spec,
                       const models::TrainConfig& train, const StoppingRule& rule, annotate::Annotator& annotator,
                       std::uint64_t seed) {
  const int cycle = state.cycle + 1;
  models::EncodedSet labeled;
  for (const LabeledEntry& e : state.labeled) labeled.add(data.train[e.index].ids, e.label);
  models::TrainConfig cfg = train;
  cfg.seed = nn::derive_seed(seed, static_cast<std::uint64_t>(cycle));
  const models::TrainedModel model = models::train(spec, labeled, data.encoded(data.val), cfg);

  PoolState next = state;
  next.cycle = cycle;
  CycleRecord rec = evaluate_cycle(data, model, cycle);
  rec.label_count = static_cast<long>(state.labeled.size());

  if (!state.unlabeled.empty()) {
    nn::IdBatch pool_ids;
    for (std::size_t i : state.unlabeled) pool_ids.push_back(data.train[i].ids);
    const nn::Tensor2D proba = models::predict_proba(model, pool_ids);
    std::vector<uncertainty::UncertaintyScore> scores;
    std::map<std::string, std::size_t> by_id;
    for (std::size_t r = 0; r < state.unlabeled.size(); ++r) {
      const PreparedSample& s = data.train[state.unlabeled[r]];
      std::vector<double> dist(proba.cols());
      for (Eigen::Index c = 0; c < proba.cols(); ++c) dist[static_cast<std::size_t>(c)] = proba(static_cast<Eigen::Index>(r), c);
      scores.push_back({s.id, uncertainty::entropy(dist)});
      by_id[s.id] = state.unlabeled[r];
    }
    const auto chosen = uncertainty::select_batch(scores, static_cast<std::size_t>(rule.batch_size));

    std::vector<annotate::AnnotationRequest> requests;
    const std::vector<std::string> names = data.label_names();
    for (const std::string& id : chosen) requests.push_back({id, data.train[by_id.at(id)].raw_text, names});
    const auto outcomes = annotator.annotate(requests);
    if (outcomes.size() != requests.size()) {
      throw Error("AnnotatorError", "annotator returned " + std::to_string(outcomes.size()) + " outcomes for " +
                                        std::to_string(requests.size()) + " requests");
    }
    const int fallback = majority_label(state.labeled, names.size());
    std::set<std::size_t> taken;
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      const auto& o = outcomes[k];
      const std::size_t index = by_id.at(chosen[k]);
      std::optional<int> label;
      if (o.ok() && o.result->sample_id == chosen[k]) {
        const auto it = std::find(names.begin(), names.end(), o.result->label);
        if (it != names.end()) label = static_cast<int>(it - names.begin());
      }
      std::string source;
      if (label) {
        source = annotate::source_name(o.result->source);
        ++rec.annotation_sources[source];
      } else {
        label = fallback;
        source = "fallback";
        ++rec.flagged_fallbacks;
      }
      next.labeled.push_back({index, *label, source});
      rec.selected.push_back({chosen[k], names[static_cast<std::size_t>(*label)], source});
      taken.insert(index);
    }
    std::erase_if(next.unlabeled, [&](std::size_t i) { return taken.count(i) != 0; });
  }
  rec.labeled_after_selection = static_cast<long>(next.labeled.size());
  rec.pool_after_selection = static_cast<long>(next.unlabeled.size());
  return {std::move(next), std::move(rec)};
}

RunRecord new_al_record(const std::string& run_id, const PreparedData& data, const models::ModelSpec& spec,
                        const models::TrainConfig& train, const StoppingRule& rule, std::uint64_t seed,
                        annotate::Source source, const std::string& annotator_name) {
  const RunKind kind = source == annotate::Source::kHuman ? RunKind::kAlHuman
                       : source == annotate::Source::kLlm ? RunKind::kAlLlm
                                                          : RunKind::kAlOracle;
  RunRecord r = new_record(run_id, kind, data, spec, train, seed);
  r.rule = rule;
  r.annotator = annotator_name;
  for (const LabeledEntry& e : init_al(data, rule, seed).labeled) r.seed_set.push_back(data.train[e.index].id);
  return r;
}

PoolState replay_state(const PreparedData& data, const RunRecord& record) {
  check_record_matches(data, record);
  if (!record.rule) throw Error("RecordError", "run " + record.run_id + " has no stopping rule");
  PoolState state = init_al(data, *record.rule, record.seed);
  std::vector<std::string> seed_ids;
  for (const LabeledEntry& e : state.labeled) seed_ids.push_back(data.train[e.index].id);
  if (seed_ids != record.seed_set) throw Error("RecordError", "seed set of " + record.run_id + " does not replay");
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < data.train.size(); ++i) by_id[data.train[i].id] = i;
  const std::vector<std::string> names = data.label_names();
  for (const CycleRecord& c : record.cycles) {
    std::set<std::size_t> taken;
    for (const SelectedLabel& s : c.selected) {
      const auto it = by_id.find(s.sample_id);
      const auto label = std::find(names.begin(), names.end(), s.label);
      if (it == by_id.end() || label == names.end() ||
          !std::binary_search(state.unlabeled.begin(), state.unlabeled.end(), it->second) || taken.count(it->second)) {
        throw Error("RecordError", "cycle " + std::to_string(c.cycle) + " of " + record.run_id + " does not replay");
      }
      state.labeled.push_back({it->second, static_cast<int>(label - names.begin()), s.source});
      taken.insert(it->second);
    }
    std::erase_if(state.unlabeled, [&](std::size_t i) { return taken.count(i) != 0; });
    state.cycle = c.cycle;
  }
  return state;
}

RunRecord run_active_learning(const PreparedData& data, RunRecord record, annotate::Annotator& annotator,
                              const RunStore* store, const CycleCallback& on_cycle) {
  if (!record.rule) throw Error("SpecError", "active learning needs a stopping rule");
  const StoppingRule rule = *record.rule;
  PoolState state = replay_state(data, record);
  record.status = "running";
  bool exhausted = !record.cycles.empty() && record.cycles.back().label_count == record.cycles.back().labeled_after_selection;
  while (!exhausted && state.cycle < rule.max_cycles) {
    exhausted = state.unlabeled.empty();
    CycleOutcome out = run_cycle(data, state, record.spec, record.train, rule, annotator, record.seed);
    std::vector<std::string> committed;
    for (const SelectedLabel& s : out.record.selected) committed.push_back(s.sample_id);
    record.cycles.push_back(std::move(out.record));
    state = std::move(out.state);
    if (rule.target_accuracy) record.chosen_cycle = find_matching_cycle(record, *rule.target_accuracy);
    record.updated_at = utc_timestamp();
    if (store) store->save(record);
    annotator.commit(committed);
    if (on_cycle) on_cycle(record);
  }
  record.status = "complete";
  record.updated_at = utc_timestamp();
  if (store) store->save(record);
  return record;
}

void check_same_test_set(const RunRecord& baseline, const RunRecord& run) {
  if (baseline.dataset_sha256 != run.dataset_sha256 || baseline.test_sha256 != run.test_sha256) {
    throw Error("TestSetMismatch", "run " + run.run_id + " does not share the test split of " + baseline.run_id);
  }
  for (const CycleRecord& c : run.cycles) {
    if (c.test_sha256 != baseline.test_sha256) {
      throw Error("TestSetMismatch", "cycle " + std::to_string(c.cycle) + " of " + run.run_id +
                                         " was evaluated on a different test split");
    }
  }
}

}  // namespace alsent::orchestrator
