#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace alsent::uncertainty {

struct UncertaintyScore {
  std::string sample_id;
  double entropy = 0.0;  // nats
};

// Shannon entropy -sum p ln p with 0 ln 0 = 0. Throws
// Error("InvalidDistribution") for empty input, negative or non-finite
// entries, or a sum further than 1e-9 from 1.
double entropy(const std::vector<double>& dist);

// Ids of the k highest-entropy scores, highest first; equal entropies are
// ordered by ascending id. Returns everything when k exceeds the input.
std::vector<std::string> select_batch(const std::vector<UncertaintyScore>& scores, std::size_t k);

}  // namespace alsent::uncertainty
