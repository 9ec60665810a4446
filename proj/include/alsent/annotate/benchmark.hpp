#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "alsent/annotate/annotator.hpp"
#include "alsent/text/dataset.hpp"

namespace alsent::annotate {

struct BenchmarkError {
  std::string sample_id;
  std::string code;
  std::string message;
  std::optional<std::string> raw_response;
};

struct AnnotatorScore {
  std::string annotator;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  std::vector<BenchmarkError> errors;
};

struct BenchmarkReport {
  std::string dataset;
  std::uint64_t seed = 0;
  std::vector<std::string> sample_ids;
  std::vector<AnnotatorScore> scores;
};

// Seeded uniform draw of n gold-labeled samples, in draw order. Throws
// Error("InvalidArgument") when n exceeds the labeled samples.
std::vector<std::size_t> draw_benchmark_sample(const text::Dataset& dataset, std::size_t n, std::uint64_t seed);

// Scores every annotator on the same draw. Unparseable or failed samples
// count as wrong and are listed in the annotator's errors; a whole-call
// failure marks every sample with its code.
BenchmarkReport benchmark_annotators(const text::Dataset& dataset, std::size_t n,
                                     const std::vector<Annotator*>& annotators, std::uint64_t seed);

nlohmann::ordered_json benchmark_to_json(const BenchmarkReport& report);

}  // namespace alsent::annotate
