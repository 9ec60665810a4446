#pragma once

#include <memory>
#include <string>
#include <vector>

#include "alsent/nn/ops.hpp"
#include "alsent/nn/rng.hpp"
#include "alsent/nn/tensor.hpp"

namespace alsent::nn {

enum class Phase { kTrain, kInfer };

struct ForwardOptions {
  Phase phase = Phase::kInfer;
  // Only consulted in kTrain. Gradient checks train with dropout off.
  bool dropout = true;

  bool dropout_active() const { return phase == Phase::kTrain && dropout; }
};

struct DropoutSpec {
  double input_rate = 0.0;
  double recurrent_rate = 0.0;
};

// Layer input/output. `steps` holds one BxF matrix per timestep for a
// sequence, or a single BxF matrix otherwise.
template <typename Scalar>
struct BasicActivations {
  std::vector<Matrix<Scalar>> steps;
  bool is_sequence = false;

  static BasicActivations single(Matrix<Scalar> t) { return {{std::move(t)}, false}; }
  Eigen::Index batch() const { return steps.empty() ? 0 : steps.front().rows(); }
  Eigen::Index features() const { return steps.empty() ? 0 : steps.front().cols(); }
};
using Activations = BasicActivations<double>;
using ExtendedActivations = BasicActivations<long double>;

class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual Activations forward(const Activations& input, const ForwardOptions& options, RngStream& rng) = 0;
  // Accumulates parameter gradients and returns the gradient w.r.t. the last
  // forward input. Must follow a forward call in kTrain.
  virtual Activations backward(const Activations& grad_output) = 0;
  // Const evaluation of the same function as forward, with dropout off and
  // no state touched (batch-norm statistics are not updated). The long double
  // overload serves finite-difference checks.
  virtual Activations evaluate(const Activations& input, Phase phase) const = 0;
  virtual ExtendedActivations evaluate(const ExtendedActivations& input, Phase phase) const = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  // Non-trainable state (batch-norm running statistics).
  virtual std::vector<Parameter*> buffers() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;
};

// Lookup table. Not a Layer because it consumes integer ids.
class Embedding {
 public:
  Embedding() = default;
  Embedding(std::string name, int vocab_size, int dim, RngStream& rng);

  // ids: B sequences of equal length T. Throws IndexError on out-of-range ids.
  Activations forward(const std::vector<std::vector<int>>& ids);
  template <typename Scalar>
  BasicActivations<Scalar> evaluate(const std::vector<std::vector<int>>& ids) const;
  void backward(const Activations& grad_output);
  Parameter& weights() { return weights_; }
  const Parameter& weights() const { return weights_; }

 private:
  Parameter weights_;
  std::vector<std::vector<int>> last_ids_;
};

// Shared plumbing for SimpleRNN, LSTM and GRU. `gates` is the number of
// stacked affine blocks in the packed kernels (1, 4 and 3 respectively).
class RecurrentLayer : public Layer {
 public:
  std::vector<Parameter*> parameters() override { return {&kernel_, &recurrent_kernel_, &bias_}; }
  int units() const { return units_; }
  bool return_sequences() const { return return_sequences_; }

 protected:
  RecurrentLayer(std::string name, int input_dim, int units, int gates, DropoutSpec dropout,
                 bool return_sequences, RngStream& rng);

  // Per-step values kept for backward. `Step` is layer specific.
  template <typename Scalar, typename Step>
  struct Trace {
    std::vector<Matrix<Scalar>> dropped_inputs;
    std::vector<Matrix<Scalar>> dropped_states;
    std::vector<Step> steps;
  };

  // Draws per-sequence masks for this forward pass (all ones when inactive).
  void prepare_masks(Eigen::Index batch, Eigen::Index features, const ForwardOptions& options, RngStream& rng);
  template <typename Scalar>
  void check_input(const BasicActivations<Scalar>& input) const;
  Tensor2D step_gradient(const Activations& grad_output, std::size_t t, std::size_t steps) const;
  template <typename Scalar>
  BasicActivations<Scalar> package(std::vector<Matrix<Scalar>> hidden) const;

  std::string name_;
  int input_dim_;
  int units_;
  DropoutSpec dropout_;
  bool return_sequences_;
  Parameter kernel_;
  Parameter recurrent_kernel_;
  Parameter bias_;

  Tensor2D input_mask_;
  Tensor2D recurrent_mask_;
};

class SimpleRnnLayer final : public RecurrentLayer {
 public:
  SimpleRnnLayer(std::string name, int input_dim, int units, DropoutSpec dropout, bool return_sequences,
                 RngStream& rng)
      : RecurrentLayer(std::move(name), input_dim, units, 1, dropout, return_sequences, rng) {}

  std::string kind() const override { return "simple_rnn"; }
  Activations forward(const Activations& input, const ForwardOptions& options, RngStream& rng) override;
  Activations backward(const Activations& grad_output) override;
  Activations evaluate(const Activations& input, Phase phase) const override;
  ExtendedActivations evaluate(const ExtendedActivations& input, Phase phase) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<SimpleRnnLayer>(*this); }

 private:
  template <typename Scalar>
  BasicActivations<Scalar> evaluate_as(const BasicActivations<Scalar>& input, Phase phase) const;
  template <typename Scalar>
  struct Step {
    Matrix<Scalar> h;
  };

  // The recurrence itself, shared by forward and evaluate.
  template <typename Scalar>
  BasicActivations<Scalar> run(const BasicActivations<Scalar>& input, const Matrix<Scalar>& input_mask,
                               const Matrix<Scalar>& recurrent_mask, Trace<Scalar, Step<Scalar>>& trace) const;

  Trace<double, Step<double>> trace_;
};

class LstmLayer final : public RecurrentLayer {
 public:
  LstmLayer(std::string name, int input_dim, int units, DropoutSpec dropout, bool return_sequences, RngStream& rng);

  std::string kind() const override { return "lstm"; }
  Activations forward(const Activations& input, const ForwardOptions& options, RngStream& rng) override;
  Activations backward(const Activations& grad_output) override;
  Activations evaluate(const Activations& input, Phase phase) const override;
  ExtendedActivations evaluate(const ExtendedActivations& input, Phase phase) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<LstmLayer>(*this); }

 private:
  template <typename Scalar>
  BasicActivations<Scalar> evaluate_as(const BasicActivations<Scalar>& input, Phase phase) const;
  template <typename Scalar>
  struct Step {
    Matrix<Scalar> i, f, g, o, c_prev, tanh_c;
  };

  // The recurrence itself, shared by forward and evaluate.
  template <typename Scalar>
  BasicActivations<Scalar> run(const BasicActivations<Scalar>& input, const Matrix<Scalar>& input_mask,
                               const Matrix<Scalar>& recurrent_mask, Trace<Scalar, Step<Scalar>>& trace) const;

  Trace<double, Step<double>> trace_;
};

class GruLayer final : public RecurrentLayer {
 public:
  GruLayer(std::string name, int input_dim, int units, DropoutSpec dropout, bool return_sequences, RngStream& rng)
      : RecurrentLayer(std::move(name), input_dim, units, 3, dropout, return_sequences, rng) {}

  std::string kind() const override { return "gru"; }
  Activations forward(const Activations& input, const ForwardOptions& options, RngStream& rng) override;
  Activations backward(const Activations& grad_output) override;
  Activations evaluate(const Activations& input, Phase phase) const override;
  ExtendedActivations evaluate(const ExtendedActivations& input, Phase phase) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<GruLayer>(*this); }

 private:
  template <typename Scalar>
  BasicActivations<Scalar> evaluate_as(const BasicActivations<Scalar>& input, Phase phase) const;
  template <typename Scalar>
  struct Step {
    Matrix<Scalar> h_prev, z, r, n, reset_state;
  };

  // The recurrence itself, shared by forward and evaluate.
  template <typename Scalar>
  BasicActivations<Scalar> run(const BasicActivations<Scalar>& input, const Matrix<Scalar>& input_mask,
                               const Matrix<Scalar>& recurrent_mask, Trace<Scalar, Step<Scalar>>& trace) const;

  Trace<double, Step<double>> trace_;
};

// Per-feature batch normalization. A sequence input is normalized over all
// (sample, timestep) rows together.
class BatchNormLayer final : public Layer {
 public:
  static constexpr double kEpsilon = 1e-3;
  static constexpr double kMomentum = 0.99;

  BatchNormLayer(std::string name, int features);

  std::string kind() const override { return "batch_norm"; }
  // Throws DegenerateBatch in kTrain when the batch has fewer than 2 samples.
  Activations forward(const Activations& input, const ForwardOptions& options, RngStream& rng) override;
  Activations backward(const Activations& grad_output) override;
  Activations evaluate(const Activations& input, Phase phase) const override;
  ExtendedActivations evaluate(const ExtendedActivations& input, Phase phase) const override;
  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Parameter*> buffers() override { return {&moving_mean_, &moving_variance_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNormLayer>(*this); }

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }
  Parameter& moving_mean() { return moving_mean_; }
  Parameter& moving_variance() { return moving_variance_; }

 private:
  template <typename Scalar>
  BasicActivations<Scalar> evaluate_as(const BasicActivations<Scalar>& input, Phase phase) const;
  std::string name_;
  int features_;
  Parameter gamma_, beta_, moving_mean_, moving_variance_;
  std::vector<Tensor2D> normalized_;
  Tensor2D inv_std_;
  bool last_was_sequence_ = false;
};

// Affine output layer producing logits; the activation lives in the loss and
// in output_distribution.
class DenseLayer final : public Layer {
 public:
  DenseLayer(std::string name, int input_dim, int units, RngStream& rng);

  std::string kind() const override { return "dense"; }
  Activations forward(const Activations& input, const ForwardOptions& options, RngStream& rng) override;
  Activations backward(const Activations& grad_output) override;
  Activations evaluate(const Activations& input, Phase phase) const override;
  ExtendedActivations evaluate(const ExtendedActivations& input, Phase phase) const override;
  std::vector<Parameter*> parameters() override { return {&kernel_, &bias_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<DenseLayer>(*this); }

 private:
  template <typename Scalar>
  BasicActivations<Scalar> evaluate_as(const BasicActivations<Scalar>& input, Phase phase) const;
  std::string name_;
  Parameter kernel_, bias_;
  Tensor2D last_input_;
};

// Initializers.
Tensor2D glorot_uniform(int fan_in, int fan_out, RngStream& rng);
// Matrix with orthonormal rows (rows <= cols) or columns (rows > cols).
Tensor2D orthogonal(int rows, int cols, RngStream& rng);

}  // namespace alsent::nn
