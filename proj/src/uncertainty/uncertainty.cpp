#include "alsent/uncertainty/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "alsent/error.hpp"

namespace alsent::uncertainty {

double entropy(const std::vector<double>& dist) {
  if (dist.empty()) throw Error("InvalidDistribution", "empty distribution");
  double sum = 0.0;
  for (double p : dist) {
    if (!std::isfinite(p) || p < 0.0) throw Error("InvalidDistribution", "entries must be finite and non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("InvalidDistribution", "entries must sum to 1");
  double h = 0.0;
  for (double p : dist) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

std::vector<std::string> select_batch(const std::vector<UncertaintyScore>& scores, std::size_t k) {
  std::vector<const UncertaintyScore*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.push_back(&s);
  const auto before = [](const UncertaintyScore* a, const UncertaintyScore* b) {
    if (a->entropy != b->entropy) return a->entropy > b->entropy;
    return a->sample_id < b->sample_id;
  };
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(order[i]->sample_id);
  return out;
}

}  // namespace alsent::uncertainty
