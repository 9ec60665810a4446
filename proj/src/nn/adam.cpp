#include "alsent/nn/adam.hpp"

#include <cmath>

namespace alsent::nn {

void Adam::step(const std::vector<Parameter*>& params) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.push_back(Tensor2D::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Tensor2D::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw ShapeError("Adam parameter list changed between steps");
  double clip_scale = 1.0;
  if (config_.clip_norm) {
    double sq = 0.0;
    for (const Parameter* p : params) sq += p->grad.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > *config_.clip_norm) clip_scale = *config_.clip_norm / norm;
  }
  ++t_;
  const double correction1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    require_shape(m_[k], p.value.rows(), p.value.cols(), "Adam moment");
    auto g = (clip_scale * p.grad).array();
    m_[k].array() = config_.beta1 * m_[k].array() + (1.0 - config_.beta1) * g;
    v_[k].array() = config_.beta2 * v_[k].array() + (1.0 - config_.beta2) * g.square();
    p.value.array() -= config_.learning_rate * (m_[k].array() / correction1) /
                       ((v_[k].array() / correction2).sqrt() + config_.epsilon);
    p.zero_grad();
  }
}

}  // namespace alsent::nn
