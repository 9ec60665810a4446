#include "alsent/models/split.hpp"

#include <cmath>
#include <numeric>

namespace alsent::models {

void SplitSpec::validate() const {
  if (train_frac < 0 || val_frac < 0 || test_frac < 0) throw Error("SpecError", "split fractions must be non-negative");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) throw Error("SpecError", "split fractions must sum to 1");
}

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  // The small nudge keeps exact products such as 10 * 0.2 from flooring to 1.
  const auto part = [n](double frac) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
  };
  SplitSizes s;
  s.val = part(spec.val_frac);
  s.test = part(spec.test_frac);
  s.train = n - s.val - s.test;
  return s;
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  if (n < 5) throw Error("DatasetTooSmall", "need at least 5 samples to split, got " + std::to_string(n));
  const SplitSizes sizes = split_sizes(n, spec);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  nn::RngStream rng(spec.seed);
  rng.shuffle(order);
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sizes.train));
  out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(sizes.train),
                 order.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.val));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.val), order.end());
  return out;
}

}  // namespace alsent::models
