#pragma once

#include <string>
#include <vector>

#include "alsent/nn/layers.hpp"
#include "alsent/nn/network.hpp"

namespace alsent::nn::probe {

inline Tensor2D random_tensor(Eigen::Index rows, Eigen::Index cols, RngStream& rng, double scale = 1.0) {
  Tensor2D t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = scale * rng.uniform(-1.0, 1.0);
  return t;
}

inline Activations random_sequence(Eigen::Index batch, Eigen::Index features, int steps, RngStream& rng) {
  Activations a{{}, true};
  for (int t = 0; t < steps; ++t) a.steps.push_back(random_tensor(batch, features, rng));
  return a;
}

// Max relative error of a layer's parameter and input gradients under the
// loss sum(readout * output), with the layer's dropout masks held fixed by
// reseeding the stream before every forward pass.
inline double layer_gradient_error(Layer& layer, const Activations& input, const ForwardOptions& options,
                            std::uint64_t mask_seed = 5) {
  RngStream readout_rng(123);
  RngStream probe_rng(mask_seed);
  const Activations probe = layer.forward(input, options, probe_rng);
  std::vector<Tensor2D> readout;
  for (const auto& s : probe.steps) readout.push_back(random_tensor(s.rows(), s.cols(), readout_rng));

  std::vector<Parameter> input_params;
  for (std::size_t t = 0; t < input.steps.size(); ++t) input_params.emplace_back("x" + std::to_string(t), input.steps[t]);
  const auto current_input = [&] {
    Activations a{{}, input.is_sequence};
    for (const auto& p : input_params) a.steps.push_back(p.value);
    return a;
  };
  const auto loss = [&] {
    RngStream rng(mask_seed);
    const Activations out = layer.forward(current_input(), options, rng);
    double total = 0.0;
    for (std::size_t t = 0; t < out.steps.size(); ++t) total += (out.steps[t].array() * readout[t].array()).sum();
    return total;
  };

  for (Parameter* p : layer.parameters()) p->zero_grad();
  RngStream rng(mask_seed);
  layer.forward(current_input(), options, rng);
  const Activations grad_in = layer.backward({readout, probe.is_sequence});
  for (std::size_t t = 0; t < input_params.size(); ++t) input_params[t].grad = grad_in.steps[t];

  std::vector<Parameter*> all = layer.parameters();
  for (auto& p : input_params) all.push_back(&p);
  return compare_with_finite_differences(all, loss, 1e-5).max_relative_error;
}

}  // namespace alsent::nn::probe
