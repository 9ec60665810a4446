#include "alsent/nn/ops.hpp"

#include <algorithm>
#include <cmath>

namespace alsent::nn {

namespace {

void check_step_shapes(const Tensor2D& x, const Tensor2D& h_prev, const Tensor2D& wx, const Tensor2D& wh,
                       const Tensor2D& b, Eigen::Index gates) {
  const Eigen::Index units = h_prev.cols();
  if (x.rows() != h_prev.rows()) throw ShapeError("input and state batch sizes differ");
  require_shape(wx, x.cols(), gates * units, "input kernel");
  require_shape(wh, units, gates * units, "recurrent kernel");
  require_shape(b, 1, gates * units, "bias");
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

}  // namespace

Tensor2D sigmoid(const Tensor2D& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

Tensor2D softmax_rows(const Tensor2D& x) {
  Tensor2D out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double shift = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - shift).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Tensor2D simple_rnn_step(const Tensor2D& x, const Tensor2D& h_prev, const Tensor2D& wx, const Tensor2D& wh,
                         const Tensor2D& b) {
  check_step_shapes(x, h_prev, wx, wh, b, 1);
  Tensor2D a = x * wx + h_prev * wh;
  a.rowwise() += b.row(0);
  return a.array().tanh().matrix();
}

LstmStepOutput lstm_step(const Tensor2D& x, const Tensor2D& h_prev, const Tensor2D& c_prev, const Tensor2D& wx,
                         const Tensor2D& wh, const Tensor2D& b) {
  check_step_shapes(x, h_prev, wx, wh, b, 4);
  require_shape(c_prev, h_prev.rows(), h_prev.cols(), "cell state");
  const Eigen::Index u = h_prev.cols();
  Tensor2D a = x * wx + h_prev * wh;
  a.rowwise() += b.row(0);
  const Tensor2D i = sigmoid(a.leftCols(u));
  const Tensor2D f = sigmoid(a.middleCols(u, u));
  const Tensor2D g = a.middleCols(2 * u, u).array().tanh().matrix();
  const Tensor2D o = sigmoid(a.rightCols(u));
  LstmStepOutput out;
  out.c = (f.array() * c_prev.array() + i.array() * g.array()).matrix();
  out.h = (o.array() * out.c.array().tanh()).matrix();
  return out;
}

Tensor2D gru_step(const Tensor2D& x, const Tensor2D& h_prev, const Tensor2D& wx, const Tensor2D& wh,
                  const Tensor2D& b) {
  check_step_shapes(x, h_prev, wx, wh, b, 3);
  const Eigen::Index u = h_prev.cols();
  Tensor2D xw = x * wx;
  xw.rowwise() += b.row(0);
  const Tensor2D hzr = h_prev * wh.leftCols(2 * u);
  const Tensor2D z = sigmoid(xw.leftCols(u) + hzr.leftCols(u));
  const Tensor2D r = sigmoid(xw.middleCols(u, u) + hzr.rightCols(u));
  const Tensor2D rh = (r.array() * h_prev.array()).matrix();
  const Tensor2D n = (xw.rightCols(u) + rh * wh.rightCols(u)).array().tanh().matrix();
  return ((1.0 - z.array()) * h_prev.array() + z.array() * n.array()).matrix();
}

Tensor2D dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, RngStream& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error("SpecError", "dropout rate must lie in [0, 1)");
  Tensor2D mask = Tensor2D::Ones(rows, cols);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) mask(r, c) = rng.uniform() < rate ? 0.0 : keep_scale;
  }
  return mask;
}

Tensor2D dense_forward(const Tensor2D& h, const Tensor2D& w, const Tensor2D& b, OutputActivation activation) {
  if (h.cols() != w.rows()) throw ShapeError("dense input has " + std::to_string(h.cols()) + " features, kernel expects " + std::to_string(w.rows()));
  require_shape(b, 1, w.cols(), "dense bias");
  Tensor2D logits = h * w;
  logits.rowwise() += b.row(0);
  if (activation == OutputActivation::kSigmoid) return sigmoid(logits);
  return softmax_rows(logits);
}

double bce_loss(double p, int y) {
  const double q = clamp_probability(p);
  return -(y * std::log(q) + (1 - y) * std::log(1.0 - q));
}

double bce_loss_grad(double p, int y) {
  if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return 0.0;
  return -(y / p) + (1 - y) / (1.0 - p);
}

double categorical_ce(const std::vector<double>& dist, int cls) {
  return -std::log(clamp_probability(dist.at(static_cast<std::size_t>(cls))));
}

std::vector<double> categorical_ce_grad(const std::vector<double>& dist, int cls) {
  std::vector<double> grad(dist.size(), 0.0);
  const double p = dist.at(static_cast<std::size_t>(cls));
  if (p >= kProbabilityClamp && p <= 1.0 - kProbabilityClamp) grad[static_cast<std::size_t>(cls)] = -1.0 / p;
  return grad;
}

LossAndGrad output_loss(const Tensor2D& logits, const std::vector<int>& labels, int classes) {
  const Eigen::Index batch = logits.rows();
  if (static_cast<std::size_t>(batch) != labels.size()) throw ShapeError("label count differs from batch size");
  LossAndGrad out;
  out.grad_logits = Tensor2D::Zero(batch, logits.cols());
  const double inv_batch = 1.0 / static_cast<double>(batch);
  if (classes == 2) {
    if (logits.cols() != 1) throw ShapeError("binary head must have one output unit");
    const Tensor2D p = sigmoid(logits);
    for (Eigen::Index r = 0; r < batch; ++r) {
      const int y = labels[static_cast<std::size_t>(r)];
      out.loss += bce_loss(p(r, 0), y);
      out.grad_logits(r, 0) = bce_loss_grad(p(r, 0), y) * p(r, 0) * (1.0 - p(r, 0)) * inv_batch;
    }
  } else {
    if (logits.cols() != classes) throw ShapeError("softmax head width differs from class count");
    const Tensor2D dist = softmax_rows(logits);
    for (Eigen::Index r = 0; r < batch; ++r) {
      const int y = labels[static_cast<std::size_t>(r)];
      std::vector<double> row(dist.row(r).data(), dist.row(r).data() + classes);
      out.loss += categorical_ce(row, y);
      const std::vector<double> dd = categorical_ce_grad(row, y);
      // Softmax Jacobian: dz_j = d_j * (g_j - sum_k g_k d_k).
      double dot = 0.0;
      for (int k = 0; k < classes; ++k) dot += dd[static_cast<std::size_t>(k)] * row[static_cast<std::size_t>(k)];
      for (int j = 0; j < classes; ++j) {
        out.grad_logits(r, j) = row[static_cast<std::size_t>(j)] * (dd[static_cast<std::size_t>(j)] - dot) * inv_batch;
      }
    }
  }
  out.loss *= inv_batch;
  return out;
}

long double output_loss_extended(const ExtendedTensor& logits, const std::vector<int>& labels, int classes) {
  const Eigen::Index batch = logits.rows();
  if (static_cast<std::size_t>(batch) != labels.size()) throw ShapeError("label count differs from batch size");
  if (logits.cols() != (classes == 2 ? 1 : classes)) throw ShapeError("output width differs from class count");
  const long double lo = kProbabilityClamp;
  const long double hi = 1.0L - lo;
  long double total = 0.0L;
  for (Eigen::Index r = 0; r < batch; ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    long double p;
    if (classes == 2) {
      const long double q = 1.0L / (1.0L + std::exp(-logits(r, 0)));
      p = y == 1 ? q : 1.0L - q;
    } else {
      const long double m = logits.row(r).maxCoeff();
      long double z = 0.0L;
      for (Eigen::Index j = 0; j < classes; ++j) z += std::exp(logits(r, j) - m);
      p = std::exp(logits(r, y) - m) / z;
    }
    total -= std::log(std::clamp(p, lo, hi));
  }
  return total / static_cast<long double>(batch);
}

Tensor2D output_distribution(const Tensor2D& logits, int classes) {
  if (classes == 2) {
    const Tensor2D p = sigmoid(logits);
    Tensor2D out(logits.rows(), 2);
    out.col(1) = p.col(0);
    out.col(0) = (1.0 - p.col(0).array()).matrix();
    return out;
  }
  return softmax_rows(logits);
}

}  // namespace alsent::nn
