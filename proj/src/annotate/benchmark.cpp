#include "alsent/annotate/benchmark.hpp"

#include <numeric>

#include "alsent/nn/rng.hpp"

namespace alsent::annotate {

std::vector<std::size_t> draw_benchmark_sample(const text::Dataset& dataset, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.samples[i].gold_label) labeled.push_back(i);
  }
  if (n > labeled.size()) {
    throw Error("InvalidArgument", "benchmark size " + std::to_string(n) + " exceeds the " +
                                       std::to_string(labeled.size()) + " labeled samples");
  }
  nn::RngStream rng(seed);
  rng.shuffle(labeled);
  labeled.resize(n);
  return labeled;
}

BenchmarkReport benchmark_annotators(const text::Dataset& dataset, std::size_t n,
                                     const std::vector<Annotator*>& annotators, std::uint64_t seed) {
  const std::vector<std::size_t> draw = draw_benchmark_sample(dataset, n, seed);
  const std::vector<std::string> names = dataset.label_set.names();
  BenchmarkReport report;
  report.dataset = dataset.name;
  report.seed = seed;
  std::vector<AnnotationRequest> requests;
  for (std::size_t i : draw) {
    const text::RawSample& s = dataset.samples[i];
    report.sample_ids.push_back(s.id);
    requests.push_back({s.id, s.text, names});
  }

  for (Annotator* annotator : annotators) {
    AnnotatorScore score;
    score.annotator = annotator->name();
    score.total = draw.size();
    std::vector<AnnotationOutcome> outcomes;
    try {
      outcomes = annotator->annotate(requests);
    } catch (const Error& e) {
      for (const auto& r : requests) score.errors.push_back({r.sample_id, e.code(), e.what(), std::nullopt});
      report.scores.push_back(std::move(score));
      continue;
    }
    for (std::size_t k = 0; k < draw.size(); ++k) {
      const AnnotationOutcome& o = outcomes.at(k);
      if (!o.ok()) {
        score.errors.push_back({o.failure->sample_id, o.failure->code, o.failure->message, o.failure->raw_response});
        continue;
      }
      if (o.result->label == text::label_name(*dataset.samples[draw[k]].gold_label)) ++score.correct;
    }
    score.accuracy = score.total == 0 ? 0.0 : static_cast<double>(score.correct) / static_cast<double>(score.total);
    report.scores.push_back(std::move(score));
  }
  return report;
}

nlohmann::ordered_json benchmark_to_json(const BenchmarkReport& report) {
  nlohmann::ordered_json j;
  j["dataset"] = report.dataset;
  j["seed"] = report.seed;
  j["n"] = report.sample_ids.size();
  j["sample_ids"] = report.sample_ids;
  j["annotators"] = nlohmann::ordered_json::array();
  for (const AnnotatorScore& s : report.scores) {
    nlohmann::ordered_json e;
    e["annotator"] = s.annotator;
    e["accuracy"] = s.accuracy;
    e["correct"] = s.correct;
    e["total"] = s.total;
    e["errors"] = nlohmann::ordered_json::array();
    for (const BenchmarkError& err : s.errors) {
      nlohmann::ordered_json ej{{"sample_id", err.sample_id}, {"code", err.code}, {"message", err.message}};
      if (err.raw_response) ej["raw_response"] = *err.raw_response;
      e["errors"].push_back(ej);
    }
    j["annotators"].push_back(e);
  }
  return j;
}

}  // namespace alsent::annotate
