#include "alsent/nn/network.hpp"

#include <algorithm>
#include <cmath>

namespace alsent::nn {

Network::Network(Embedding embedding, std::vector<std::unique_ptr<Layer>> layers, int output_classes)
    : embedding_(std::move(embedding)), layers_(std::move(layers)), output_classes_(output_classes) {
  if (output_classes < 2) throw Error("SpecError", "a classifier needs at least 2 classes");
  if (layers_.empty() || layers_.back()->kind() != "dense") {
    throw Error("SpecError", "the last layer must be dense");
  }
}

Network::Network(const Network& other)
    : embedding_(other.embedding_), output_classes_(other.output_classes_) {
  layers_.reserve(other.layers_.size());
  for (const auto& layer : other.layers_) layers_.push_back(layer->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Tensor2D Network::forward(const IdBatch& ids, const ForwardOptions& options, RngStream& rng) {
  Activations a = embedding_.forward(ids);
  for (auto& layer : layers_) a = layer->forward(a, options, rng);
  return std::move(a.steps.front());
}

template <typename Scalar>
Matrix<Scalar> Network::evaluate(const IdBatch& ids, Phase phase) const {
  BasicActivations<Scalar> a = embedding_.evaluate<Scalar>(ids);
  for (const auto& layer : layers_) a = layer->evaluate(a, phase);
  return std::move(a.steps.front());
}

template Tensor2D Network::evaluate<double>(const IdBatch&, Phase) const;
template ExtendedTensor Network::evaluate<long double>(const IdBatch&, Phase) const;

void Network::backward(const Tensor2D& grad_logits) {
  Activations g = Activations::single(grad_logits);
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  embedding_.backward(g);
}

double Network::train_step(const IdBatch& ids, const std::vector<int>& labels, const ForwardOptions& options,
                           RngStream& rng, Tensor2D* logits_out) {
  Tensor2D logits = forward(ids, options, rng);
  const LossAndGrad lg = output_loss(logits, labels, output_classes_);
  if (!std::isfinite(lg.loss)) throw NumericalError("non-finite loss");
  backward(lg.grad_logits);
  if (logits_out != nullptr) *logits_out = std::move(logits);
  return lg.loss;
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out{&embedding_.weights()};
  for (auto& layer : layers_) {
    for (Parameter* p : layer->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<Parameter*> Network::buffers() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    for (Parameter* p : layer->buffers()) out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> Network::parameters() const {
  const auto all = const_cast<Network*>(this)->parameters();
  return {all.begin(), all.end()};
}

std::vector<const Parameter*> Network::buffers() const {
  const auto all = const_cast<Network*>(this)->buffers();
  return {all.begin(), all.end()};
}

void Network::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

std::size_t Network::trainable_count() {
  std::size_t n = 0;
  for (Parameter* p : parameters()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

std::size_t Network::buffer_count() {
  std::size_t n = 0;
  for (Parameter* p : buffers()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

GradCheckResult compare_with_finite_differences(const std::vector<Parameter*>& params,
                                                const std::function<long double()>& loss, double epsilon) {
  if (!(epsilon > 0.0)) throw Error("PreconditionError", "grad_check epsilon must be positive");
  GradCheckResult result;
  for (Parameter* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& v = p->value.data()[i];
      const double saved = v;
      const double plus = saved + epsilon;
      const double minus = saved - epsilon;
      v = plus;
      const long double up = loss();
      v = minus;
      const long double down = loss();
      v = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) throw NumericalError("non-finite loss during grad_check");
      // Divide by the step actually taken after rounding plus/minus.
      const double numeric = static_cast<double>((up - down) / (static_cast<long double>(plus) - minus));
      const double analytic = p->grad.data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double err = std::abs(analytic - numeric) / denom;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

GradCheckResult grad_check(Network& net, const IdBatch& ids, const std::vector<int>& labels, double epsilon) {
  if (!(epsilon > 0.0)) throw Error("PreconditionError", "grad_check epsilon must be positive");
  const ForwardOptions options{Phase::kTrain, false};
  std::vector<Tensor2D> saved_buffers;
  for (Parameter* b : net.buffers()) saved_buffers.push_back(b->value);
  RngStream rng(0);
  net.zero_grad();
  net.train_step(ids, labels, options, rng);
  const auto loss = [&] {
    return output_loss_extended(net.evaluate<long double>(ids, Phase::kTrain), labels, net.output_classes());
  };
  GradCheckResult result = compare_with_finite_differences(net.parameters(), loss, epsilon);
  auto buffers = net.buffers();
  for (std::size_t i = 0; i < buffers.size(); ++i) buffers[i]->value = saved_buffers[i];
  net.zero_grad();
  return result;
}

}  // namespace alsent::nn
