#pragma once

#include <vector>

#include <json.hpp>

namespace alsent::models {

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // confusion[true][predicted].
  std::vector<std::vector<long>> confusion;
};

// Binary (classes == 2): precision and recall of class 1. Otherwise macro
// averages over all classes. f1 is the harmonic mean of the reported
// precision and recall. Any 0/0 ratio is 0. Throws EmptyTestSet on empty
// input and Error("LabelError") on out-of-range classes.
MetricsReport compute_metrics(const std::vector<int>& predicted, const std::vector<int>& actual, int classes);

// {accuracy, precision, recall, f1, confusion} with reals rounded to 4 decimals.
nlohmann::json metrics_to_json(const MetricsReport& report);
double round4(double x);

}  // namespace alsent::models
