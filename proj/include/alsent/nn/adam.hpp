#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "alsent/nn/tensor.hpp"

namespace alsent::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global gradient-norm clipping; off unless set.
  std::optional<double> clip_norm;
};

// Bias-corrected Adam. Moment tensors are created on the first step and bound
// to the parameter order seen then.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Updates every parameter from its gradient, then zeroes the gradients.
  void step(const std::vector<Parameter*>& params);

  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Tensor2D>& first_moments() const { return m_; }
  const std::vector<Tensor2D>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::vector<Tensor2D> m_;
  std::vector<Tensor2D> v_;
};

}  // namespace alsent::nn
