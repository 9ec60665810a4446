#pragma once

#include <vector>

#include "alsent/nn/rng.hpp"
#include "alsent/nn/tensor.hpp"

namespace alsent::nn {

// Probabilities are clamped into [kProbabilityClamp, 1 - kProbabilityClamp]
// before any logarithm.
inline constexpr double kProbabilityClamp = 1e-7;

Tensor2D sigmoid(const Tensor2D& x);
// Row-wise, max-shifted.
Tensor2D softmax_rows(const Tensor2D& x);

// Single recurrent steps over a batch (one sample per row). Biases are 1xN.
Tensor2D simple_rnn_step(const Tensor2D& x, const Tensor2D& h_prev, const Tensor2D& wx, const Tensor2D& wh,
                         const Tensor2D& b);

struct LstmStepOutput {
  Tensor2D h;
  Tensor2D c;
};
// Gate blocks in the packed weights are ordered input, forget, cell, output.
LstmStepOutput lstm_step(const Tensor2D& x, const Tensor2D& h_prev, const Tensor2D& c_prev, const Tensor2D& wx,
                         const Tensor2D& wh, const Tensor2D& b);

// Gate blocks are ordered update (z), reset (r), candidate (n), with
// h = (1 - z) * h_prev + z * tanh(x Wn + (r * h_prev) Un + bn).
Tensor2D gru_step(const Tensor2D& x, const Tensor2D& h_prev, const Tensor2D& wx, const Tensor2D& wh,
                  const Tensor2D& b);

// Inverted dropout mask: each entry is 0 with probability `rate`, otherwise 1 / (1 - rate).
Tensor2D dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, RngStream& rng);

enum class OutputActivation { kSigmoid, kSoftmax };
Tensor2D dense_forward(const Tensor2D& h, const Tensor2D& w, const Tensor2D& b, OutputActivation activation);

double bce_loss(double p, int y);
// dL/dp, zero where the clamp is active.
double bce_loss_grad(double p, int y);
double categorical_ce(const std::vector<double>& dist, int cls);
// dL/d dist.
std::vector<double> categorical_ce_grad(const std::vector<double>& dist, int cls);

// Mean loss of a batch of logits and its gradient w.r.t. the logits. With
// `classes == 2` the logits are Bx1 and pass through a sigmoid; otherwise BxC
// through a softmax. Labels are class indices.
struct LossAndGrad {
  double loss = 0.0;
  Tensor2D grad_logits;
};
LossAndGrad output_loss(const Tensor2D& logits, const std::vector<int>& labels, int classes);
// Same loss as output_loss, evaluated in extended precision.
long double output_loss_extended(const ExtendedTensor& logits, const std::vector<int>& labels, int classes);

// Per-sample class distributions: [1 - p, p] for binary, softmax otherwise.
Tensor2D output_distribution(const Tensor2D& logits, int classes);

}  // namespace alsent::nn
