#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "alsent/error.hpp"
#include "alsent/nn/rng.hpp"

namespace alsent::models {

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 0;

  // Throws SpecError unless the fractions are non-negative and sum to 1.
  void validate() const;
};

struct SplitSizes {
  std::size_t train = 0, val = 0, test = 0;
};

// val = floor(n * val_frac), test = floor(n * test_frac), the rest is train.
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

// Shuffled positions 0..n-1, sliced train | val | test. Throws
// DatasetTooSmall when n < 5.
struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

template <typename T>
struct Split {
  std::vector<T> train, val, test;
};

template <typename T>
Split<T> split_dataset(const std::vector<T>& samples, const SplitSpec& spec) {
  const SplitIndices idx = split_indices(samples.size(), spec);
  Split<T> out;
  for (std::size_t i : idx.train) out.train.push_back(samples[i]);
  for (std::size_t i : idx.val) out.val.push_back(samples[i]);
  for (std::size_t i : idx.test) out.test.push_back(samples[i]);
  return out;
}

}  // namespace alsent::models
