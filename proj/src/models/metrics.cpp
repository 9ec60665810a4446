#include "alsent/models/metrics.hpp"

#include <cmath>
#include <string>

#include "alsent/error.hpp"

namespace alsent::models {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

MetricsReport compute_metrics(const std::vector<int>& predicted, const std::vector<int>& actual, int classes) {
  if (predicted.size() != actual.size()) throw Error("ShapeError", "prediction and label counts differ");
  if (actual.empty()) throw Error("EmptyTestSet", "cannot evaluate on an empty test set");
  if (classes < 2) throw Error("SpecError", "need at least 2 classes");
  MetricsReport r;
  r.confusion.assign(static_cast<std::size_t>(classes), std::vector<long>(static_cast<std::size_t>(classes), 0));
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const int y = actual[i], p = predicted[i];
    if (y < 0 || y >= classes || p < 0 || p >= classes) {
      throw Error("LabelError", "class index out of range at position " + std::to_string(i));
    }
    ++r.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
  }
  const auto n = static_cast<double>(actual.size());
  std::vector<double> tp(classes), pred_count(classes), true_count(classes);
  double correct = 0;
  for (int a = 0; a < classes; ++a) {
    for (int p = 0; p < classes; ++p) {
      const auto c = static_cast<double>(r.confusion[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)]);
      true_count[a] += c;
      pred_count[p] += c;
      if (a == p) tp[a] = c;
    }
    correct += tp[a];
  }
  r.accuracy = correct / n;
  if (classes == 2) {
    r.precision = ratio(tp[1], pred_count[1]);
    r.recall = ratio(tp[1], true_count[1]);
  } else {
    for (int c = 0; c < classes; ++c) {
      r.precision += ratio(tp[c], pred_count[c]);
      r.recall += ratio(tp[c], true_count[c]);
    }
    r.precision /= classes;
    r.recall /= classes;
  }
  r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

nlohmann::json metrics_to_json(const MetricsReport& report) {
  return {{"accuracy", round4(report.accuracy)},
          {"precision", round4(report.precision)},
          {"recall", round4(report.recall)},
          {"f1", round4(report.f1)},
          {"confusion", report.confusion}};
}

}  // namespace alsent::models
