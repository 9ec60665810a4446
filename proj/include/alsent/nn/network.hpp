#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "alsent/nn/layers.hpp"

namespace alsent::nn {

using IdBatch = std::vector<std::vector<int>>;

// Embedding followed by a stack of layers ending in a DenseLayer that emits
// logits. Copying deep-copies every layer.
class Network {
 public:
  Network(Embedding embedding, std::vector<std::unique_ptr<Layer>> layers, int output_classes);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  Tensor2D forward(const IdBatch& ids, const ForwardOptions& options, RngStream& rng);
  void backward(const Tensor2D& grad_logits);
  // Const logits with dropout off; no layer state changes. Safe to call
  // concurrently. Instantiated for double and long double.
  template <typename Scalar>
  Matrix<Scalar> evaluate(const IdBatch& ids, Phase phase) const;

  // Forward + loss + backward in training mode; returns the mean batch loss
  // and leaves gradients accumulated in the parameters.
  double train_step(const IdBatch& ids, const std::vector<int>& labels, const ForwardOptions& options,
                    RngStream& rng, Tensor2D* logits_out = nullptr);

  std::vector<Parameter*> parameters();
  std::vector<Parameter*> buffers();
  std::vector<const Parameter*> parameters() const;
  std::vector<const Parameter*> buffers() const;
  void zero_grad();

  std::size_t trainable_count();
  std::size_t buffer_count();
  int output_classes() const { return output_classes_; }
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }
  Embedding& embedding() { return embedding_; }

 private:
  Embedding embedding_;
  std::vector<std::unique_ptr<Layer>> layers_;
  int output_classes_;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
};

// Compares the analytic gradients already stored in `params` with central
// differences of `loss`. Relative error per entry is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// Throws on epsilon <= 0 and NumericalError on a non-finite loss.
GradCheckResult compare_with_finite_differences(const std::vector<Parameter*>& params,
                                                const std::function<long double()>& loss, double epsilon);

// Full-network check: training-mode forward with dropout off. The analytic
// gradients come from the double-precision backward pass; the central
// differences are taken on the extended-precision forward, which keeps
// roundoff in the loss far below the error being measured.
GradCheckResult grad_check(Network& net, const IdBatch& ids, const std::vector<int>& labels,
                           double epsilon = 1e-5);

}  // namespace alsent::nn
