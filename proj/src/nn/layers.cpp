#include "alsent/nn/layers.hpp"

#include <cmath>

namespace alsent::nn {

namespace {

template <typename S>
Matrix<S> hadamard(const Matrix<S>& a, const Matrix<S>& b) {
  return (a.array() * b.array()).matrix();
}

Tensor2D column_sums(const Tensor2D& t) { return t.colwise().sum(); }

template <typename S, typename Derived>
Matrix<S> logistic(const Eigen::MatrixBase<Derived>& x) {
  return (S(1) / (S(1) + (-x.array()).exp())).matrix();
}

template <typename S>
Matrix<S> as(const Tensor2D& t) {
  return t.cast<S>();
}

template <typename S>
Matrix<S> ones(Eigen::Index rows, Eigen::Index cols) {
  return Matrix<S>::Ones(rows, cols);
}

template <typename S>
Matrix<S> lookup(const Matrix<S>& table, const std::vector<std::vector<int>>& ids, std::size_t t) {
  const auto batch = static_cast<Eigen::Index>(ids.size());
  Matrix<S> x(batch, table.cols());
  for (Eigen::Index b = 0; b < batch; ++b) x.row(b) = table.row(ids[static_cast<std::size_t>(b)][t]);
  return x;
}

template <typename S>
BasicActivations<S> embed(const Matrix<S>& table, const std::vector<std::vector<int>>& ids) {
  BasicActivations<S> out;
  out.is_sequence = true;
  const std::size_t steps = ids.front().size();
  out.steps.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) out.steps.push_back(lookup(table, ids, t));
  return out;
}

template <typename S>
Matrix<S> affine(const Matrix<S>& x, const Matrix<S>& w, const Matrix<S>& b) {
  Matrix<S> out = x * w;
  out.rowwise() += b.row(0);
  return out;
}

// Training-mode normalization over every row of every step. Writes the
// batch statistics and, when requested, xhat per step.
template <typename S>
BasicActivations<S> batch_normalize(const BasicActivations<S>& input, const Matrix<S>& gamma, const Matrix<S>& beta,
                                    S epsilon, Matrix<S>& mean, Matrix<S>& variance, Matrix<S>& inv_std,
                                    std::vector<Matrix<S>>* normalized) {
  const Eigen::Index features = input.features();
  const S count = static_cast<S>(input.batch()) * static_cast<S>(input.steps.size());
  mean = Matrix<S>::Zero(1, features);
  for (const auto& x : input.steps) mean += x.colwise().sum();
  mean /= count;
  variance = Matrix<S>::Zero(1, features);
  for (const auto& x : input.steps) variance += (x.rowwise() - mean.row(0)).array().square().matrix().colwise().sum();
  variance /= count;
  inv_std = (variance.array() + epsilon).rsqrt().matrix();
  BasicActivations<S> out{std::vector<Matrix<S>>(input.steps.size()), input.is_sequence};
  if (normalized != nullptr) normalized->assign(input.steps.size(), Matrix<S>());
  for (std::size_t t = 0; t < input.steps.size(); ++t) {
    Matrix<S> xhat = input.steps[t];
    xhat.rowwise() -= mean.row(0);
    xhat.array().rowwise() *= inv_std.row(0).array();
    Matrix<S> y = xhat;
    y.array().rowwise() *= gamma.row(0).array();
    y.rowwise() += beta.row(0);
    if (normalized != nullptr) (*normalized)[t] = std::move(xhat);
    out.steps[t] = std::move(y);
  }
  return out;
}

template <typename S>
BasicActivations<S> running_normalize(const BasicActivations<S>& input, const Matrix<S>& gamma, const Matrix<S>& beta,
                                      const Matrix<S>& mean, const Matrix<S>& variance, S epsilon) {
  const Matrix<S> scale = (gamma.array() / (variance.array() + epsilon).sqrt()).matrix();
  BasicActivations<S> out{std::vector<Matrix<S>>(input.steps.size()), input.is_sequence};
  for (std::size_t t = 0; t < input.steps.size(); ++t) {
    Matrix<S> y = input.steps[t];
    y.rowwise() -= mean.row(0);
    y.array().rowwise() *= scale.row(0).array();
    y.rowwise() += beta.row(0);
    out.steps[t] = std::move(y);
  }
  return out;
}

}  // namespace

Tensor2D glorot_uniform(int fan_in, int fan_out, RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor2D w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
  return w;
}

Tensor2D orthogonal(int rows, int cols, RngStream& rng) {
  const int tall = std::max(rows, cols);
  const int narrow = std::min(rows, cols);
  Eigen::MatrixXd a(tall, narrow);
  for (int r = 0; r < tall; ++r) {
    for (int c = 0; c < narrow; ++c) a(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, narrow);
  const Eigen::MatrixXd rmat = qr.matrixQR().topRows(narrow).triangularView<Eigen::Upper>();
  for (int c = 0; c < narrow; ++c) {
    if (rmat(c, c) < 0) q.col(c) = -q.col(c);
  }
  if (rows >= cols) return q;
  return q.transpose();
}

// ---------------------------------------------------------------- Embedding

Embedding::Embedding(std::string name, int vocab_size, int dim, RngStream& rng) {
  Tensor2D w(vocab_size, dim);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-0.05, 0.05);
  weights_ = Parameter(std::move(name), std::move(w));
}

namespace {

void check_ids(const std::vector<std::vector<int>>& ids, Eigen::Index vocab) {
  if (ids.empty()) throw ShapeError("embedding received an empty batch");
  const std::size_t steps = ids.front().size();
  for (const auto& seq : ids) {
    if (seq.size() != steps) throw ShapeError("sequences in a batch must share one length");
    for (int id : seq) {
      if (id < 0 || id >= vocab) {
        throw IndexError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(vocab));
      }
    }
  }
}

}  // namespace

Activations Embedding::forward(const std::vector<std::vector<int>>& ids) {
  check_ids(ids, weights_.value.rows());
  last_ids_ = ids;
  return embed(weights_.value, ids);
}

template <typename S>
BasicActivations<S> Embedding::evaluate(const std::vector<std::vector<int>>& ids) const {
  check_ids(ids, weights_.value.rows());
  return embed(as<S>(weights_.value), ids);
}

template Activations Embedding::evaluate<double>(const std::vector<std::vector<int>>&) const;
template ExtendedActivations Embedding::evaluate<long double>(const std::vector<std::vector<int>>&) const;

void Embedding::backward(const Activations& grad_output) {
  for (std::size_t t = 0; t < grad_output.steps.size(); ++t) {
    const Tensor2D& g = grad_output.steps[t];
    for (Eigen::Index b = 0; b < g.rows(); ++b) {
      weights_.grad.row(last_ids_[static_cast<std::size_t>(b)][t]) += g.row(b);
    }
  }
}

// ----------------------------------------------------------- RecurrentLayer

RecurrentLayer::RecurrentLayer(std::string name, int input_dim, int units, int gates, DropoutSpec dropout,
                               bool return_sequences, RngStream& rng)
    : name_(std::move(name)),
      input_dim_(input_dim),
      units_(units),
      dropout_(dropout),
      return_sequences_(return_sequences) {
  if (input_dim <= 0 || units <= 0) throw ShapeError("recurrent layer dimensions must be positive");
  if (!(dropout.input_rate >= 0 && dropout.input_rate < 1 && dropout.recurrent_rate >= 0 &&
        dropout.recurrent_rate < 1)) {
    throw Error("SpecError", "dropout rates must lie in [0, 1)");
  }
  kernel_ = Parameter(name_ + "/kernel", glorot_uniform(input_dim, gates * units, rng));
  recurrent_kernel_ = Parameter(name_ + "/recurrent_kernel", orthogonal(units, gates * units, rng));
  bias_ = Parameter(name_ + "/bias", Tensor2D::Zero(1, gates * units));
}

template <typename S>
void RecurrentLayer::check_input(const BasicActivations<S>& input) const {
  if (!input.is_sequence || input.steps.empty()) throw ShapeError(name_ + " expects a non-empty sequence");
  if (input.features() != input_dim_) {
    throw ShapeError(name_ + " expects " + std::to_string(input_dim_) + " input features, got " +
                     std::to_string(input.features()));
  }
}

void RecurrentLayer::prepare_masks(Eigen::Index batch, Eigen::Index features, const ForwardOptions& options,
                                   RngStream& rng) {
  if (options.dropout_active()) {
    input_mask_ = dropout_mask(batch, features, dropout_.input_rate, rng);
    recurrent_mask_ = dropout_mask(batch, units_, dropout_.recurrent_rate, rng);
  } else {
    input_mask_ = Tensor2D::Ones(batch, features);
    recurrent_mask_ = Tensor2D::Ones(batch, units_);
  }
}

Tensor2D RecurrentLayer::step_gradient(const Activations& grad_output, std::size_t t, std::size_t steps) const {
  if (return_sequences_) return grad_output.steps[t];
  if (t + 1 == steps) return grad_output.steps.front();
  return Tensor2D();
}

template <typename S>
BasicActivations<S> RecurrentLayer::package(std::vector<Matrix<S>> hidden) const {
  if (return_sequences_) return {std::move(hidden), true};
  return BasicActivations<S>::single(std::move(hidden.back()));
}

// ---------------------------------------------------------------- SimpleRNN

template <typename S>
BasicActivations<S> SimpleRnnLayer::run(const BasicActivations<S>& input, const Matrix<S>& input_mask,
                                        const Matrix<S>& recurrent_mask, Trace<S, Step<S>>& trace) const {
  const std::size_t steps = input.steps.size();
  const Matrix<S> wx = as<S>(kernel_.value);
  const Matrix<S> wh = as<S>(recurrent_kernel_.value);
  const Matrix<S> b = as<S>(bias_.value);
  trace.dropped_inputs.assign(steps, Matrix<S>());
  trace.dropped_states.assign(steps, Matrix<S>());
  trace.steps.assign(steps, Step<S>());
  std::vector<Matrix<S>> hidden(steps);
  Matrix<S> h = Matrix<S>::Zero(input.batch(), units_);
  for (std::size_t t = 0; t < steps; ++t) {
    trace.dropped_inputs[t] = hadamard(input.steps[t], input_mask);
    trace.dropped_states[t] = hadamard(h, recurrent_mask);
    Matrix<S> a = affine(trace.dropped_inputs[t], wx, b);
    a.noalias() += trace.dropped_states[t] * wh;
    h = a.array().tanh().matrix();
    trace.steps[t].h = h;
    hidden[t] = h;
  }
  return package(std::move(hidden));
}

Activations SimpleRnnLayer::forward(const Activations& input, const ForwardOptions& options, RngStream& rng) {
  check_input(input);
  prepare_masks(input.batch(), input.features(), options, rng);
  return run(input, input_mask_, recurrent_mask_, trace_);
}

template <typename S>
BasicActivations<S> SimpleRnnLayer::evaluate_as(const BasicActivations<S>& input, Phase) const {
  check_input(input);
  Trace<S, Step<S>> trace;
  return run(input, ones<S>(input.batch(), input_dim_), ones<S>(input.batch(), units_), trace);
}

Activations SimpleRnnLayer::evaluate(const Activations& input, Phase phase) const { return evaluate_as(input, phase); }

ExtendedActivations SimpleRnnLayer::evaluate(const ExtendedActivations& input, Phase phase) const {
  return evaluate_as(input, phase);
}

Activations SimpleRnnLayer::backward(const Activations& grad_output) {
  const std::size_t steps = trace_.steps.size();
  const Eigen::Index batch = trace_.steps.front().h.rows();
  Activations grad_input{std::vector<Tensor2D>(steps), true};
  Tensor2D dh_next = Tensor2D::Zero(batch, units_);
  for (std::size_t t = steps; t-- > 0;) {
    Tensor2D dh = dh_next;
    if (Tensor2D g = step_gradient(grad_output, t, steps); g.size() != 0) dh += g;
    const Tensor2D da = (dh.array() * (1.0 - trace_.steps[t].h.array().square())).matrix();
    kernel_.grad.noalias() += trace_.dropped_inputs[t].transpose() * da;
    recurrent_kernel_.grad.noalias() += trace_.dropped_states[t].transpose() * da;
    bias_.grad += column_sums(da);
    grad_input.steps[t] = hadamard<double>(da * kernel_.value.transpose(), input_mask_);
    dh_next = hadamard<double>(da * recurrent_kernel_.value.transpose(), recurrent_mask_);
  }
  return grad_input;
}

// --------------------------------------------------------------------- LSTM

LstmLayer::LstmLayer(std::string name, int input_dim, int units, DropoutSpec dropout, bool return_sequences,
                     RngStream& rng)
    : RecurrentLayer(std::move(name), input_dim, units, 4, dropout, return_sequences, rng) {
  bias_.value.middleCols(units, units).setOnes();
}

template <typename S>
BasicActivations<S> LstmLayer::run(const BasicActivations<S>& input, const Matrix<S>& input_mask,
                                   const Matrix<S>& recurrent_mask, Trace<S, Step<S>>& trace) const {
  const Eigen::Index u = units_;
  const std::size_t steps = input.steps.size();
  const Matrix<S> wx = as<S>(kernel_.value);
  const Matrix<S> wh = as<S>(recurrent_kernel_.value);
  const Matrix<S> b = as<S>(bias_.value);
  trace.dropped_inputs.assign(steps, Matrix<S>());
  trace.dropped_states.assign(steps, Matrix<S>());
  trace.steps.assign(steps, Step<S>());
  std::vector<Matrix<S>> hidden(steps);
  Matrix<S> h = Matrix<S>::Zero(input.batch(), u);
  Matrix<S> c = Matrix<S>::Zero(input.batch(), u);
  for (std::size_t t = 0; t < steps; ++t) {
    trace.dropped_inputs[t] = hadamard(input.steps[t], input_mask);
    trace.dropped_states[t] = hadamard(h, recurrent_mask);
    Matrix<S> a = affine(trace.dropped_inputs[t], wx, b);
    a.noalias() += trace.dropped_states[t] * wh;
    Step<S>& s = trace.steps[t];
    s.i = logistic<S>(a.leftCols(u));
    s.f = logistic<S>(a.middleCols(u, u));
    s.g = a.middleCols(2 * u, u).array().tanh().matrix();
    s.o = logistic<S>(a.rightCols(u));
    s.c_prev = c;
    c = (s.f.array() * c.array() + s.i.array() * s.g.array()).matrix();
    s.tanh_c = c.array().tanh().matrix();
    h = hadamard(s.o, s.tanh_c);
    hidden[t] = h;
  }
  return package(std::move(hidden));
}

Activations LstmLayer::forward(const Activations& input, const ForwardOptions& options, RngStream& rng) {
  check_input(input);
  prepare_masks(input.batch(), input.features(), options, rng);
  return run(input, input_mask_, recurrent_mask_, trace_);
}

template <typename S>
BasicActivations<S> LstmLayer::evaluate_as(const BasicActivations<S>& input, Phase) const {
  check_input(input);
  Trace<S, Step<S>> trace;
  return run(input, ones<S>(input.batch(), input_dim_), ones<S>(input.batch(), units_), trace);
}

Activations LstmLayer::evaluate(const Activations& input, Phase phase) const { return evaluate_as(input, phase); }

ExtendedActivations LstmLayer::evaluate(const ExtendedActivations& input, Phase phase) const {
  return evaluate_as(input, phase);
}

Activations LstmLayer::backward(const Activations& grad_output) {
  const std::size_t steps = trace_.steps.size();
  const Eigen::Index batch = trace_.steps.front().i.rows();
  const Eigen::Index u = units_;
  Activations grad_input{std::vector<Tensor2D>(steps), true};
  Tensor2D dh_next = Tensor2D::Zero(batch, u);
  Tensor2D dc_next = Tensor2D::Zero(batch, u);
  Tensor2D da(batch, 4 * u);
  for (std::size_t t = steps; t-- > 0;) {
    const Step<double>& s = trace_.steps[t];
    Tensor2D dh = dh_next;
    if (Tensor2D g = step_gradient(grad_output, t, steps); g.size() != 0) dh += g;
    const Tensor2D dc =
        (dc_next.array() + dh.array() * s.o.array() * (1.0 - s.tanh_c.array().square())).matrix();
    da.leftCols(u) = (dc.array() * s.g.array() * s.i.array() * (1.0 - s.i.array())).matrix();
    da.middleCols(u, u) = (dc.array() * s.c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
    da.middleCols(2 * u, u) = (dc.array() * s.i.array() * (1.0 - s.g.array().square())).matrix();
    da.rightCols(u) = (dh.array() * s.tanh_c.array() * s.o.array() * (1.0 - s.o.array())).matrix();
    kernel_.grad.noalias() += trace_.dropped_inputs[t].transpose() * da;
    recurrent_kernel_.grad.noalias() += trace_.dropped_states[t].transpose() * da;
    bias_.grad += column_sums(da);
    grad_input.steps[t] = hadamard<double>(da * kernel_.value.transpose(), input_mask_);
    dh_next = hadamard<double>(da * recurrent_kernel_.value.transpose(), recurrent_mask_);
    dc_next = hadamard(dc, s.f);
  }
  return grad_input;
}

// ---------------------------------------------------------------------- GRU

template <typename S>
BasicActivations<S> GruLayer::run(const BasicActivations<S>& input, const Matrix<S>& input_mask,
                                  const Matrix<S>& recurrent_mask, Trace<S, Step<S>>& trace) const {
  const Eigen::Index u = units_;
  const std::size_t steps = input.steps.size();
  const Matrix<S> wx = as<S>(kernel_.value);
  const Matrix<S> wzr = as<S>(recurrent_kernel_.value.leftCols(2 * u));
  const Matrix<S> wn = as<S>(recurrent_kernel_.value.rightCols(u));
  const Matrix<S> b = as<S>(bias_.value);
  trace.dropped_inputs.assign(steps, Matrix<S>());
  trace.dropped_states.assign(steps, Matrix<S>());
  trace.steps.assign(steps, Step<S>());
  std::vector<Matrix<S>> hidden(steps);
  Matrix<S> h = Matrix<S>::Zero(input.batch(), u);
  for (std::size_t t = 0; t < steps; ++t) {
    trace.dropped_inputs[t] = hadamard(input.steps[t], input_mask);
    trace.dropped_states[t] = hadamard(h, recurrent_mask);
    const Matrix<S> xw = affine(trace.dropped_inputs[t], wx, b);
    const Matrix<S> hzr = trace.dropped_states[t] * wzr;
    Step<S>& s = trace.steps[t];
    s.h_prev = h;
    s.z = logistic<S>(xw.leftCols(u) + hzr.leftCols(u));
    s.r = logistic<S>(xw.middleCols(u, u) + hzr.rightCols(u));
    s.reset_state = hadamard(s.r, trace.dropped_states[t]);
    s.n = (xw.rightCols(u) + s.reset_state * wn).array().tanh().matrix();
    h = ((S(1) - s.z.array()) * h.array() + s.z.array() * s.n.array()).matrix();
    hidden[t] = h;
  }
  return package(std::move(hidden));
}

Activations GruLayer::forward(const Activations& input, const ForwardOptions& options, RngStream& rng) {
  check_input(input);
  prepare_masks(input.batch(), input.features(), options, rng);
  return run(input, input_mask_, recurrent_mask_, trace_);
}

template <typename S>
BasicActivations<S> GruLayer::evaluate_as(const BasicActivations<S>& input, Phase) const {
  check_input(input);
  Trace<S, Step<S>> trace;
  return run(input, ones<S>(input.batch(), input_dim_), ones<S>(input.batch(), units_), trace);
}

Activations GruLayer::evaluate(const Activations& input, Phase phase) const { return evaluate_as(input, phase); }

ExtendedActivations GruLayer::evaluate(const ExtendedActivations& input, Phase phase) const {
  return evaluate_as(input, phase);
}

Activations GruLayer::backward(const Activations& grad_output) {
  const std::size_t steps = trace_.steps.size();
  const Eigen::Index batch = trace_.steps.front().z.rows();
  const Eigen::Index u = units_;
  Activations grad_input{std::vector<Tensor2D>(steps), true};
  Tensor2D dh_next = Tensor2D::Zero(batch, u);
  Tensor2D da(batch, 3 * u);
  for (std::size_t t = steps; t-- > 0;) {
    const Step<double>& s = trace_.steps[t];
    const Tensor2D& dropped_state = trace_.dropped_states[t];
    Tensor2D dh = dh_next;
    if (Tensor2D g = step_gradient(grad_output, t, steps); g.size() != 0) dh += g;
    const Tensor2D dan = (dh.array() * s.z.array() * (1.0 - s.n.array().square())).matrix();
    const Tensor2D d_reset_state = dan * recurrent_kernel_.value.rightCols(u).transpose();
    da.leftCols(u) = (dh.array() * (s.n - s.h_prev).array() * s.z.array() * (1.0 - s.z.array())).matrix();
    da.middleCols(u, u) =
        (d_reset_state.array() * dropped_state.array() * s.r.array() * (1.0 - s.r.array())).matrix();
    da.rightCols(u) = dan;
    kernel_.grad.noalias() += trace_.dropped_inputs[t].transpose() * da;
    bias_.grad += column_sums(da);
    recurrent_kernel_.grad.leftCols(2 * u).noalias() += dropped_state.transpose() * da.leftCols(2 * u);
    recurrent_kernel_.grad.rightCols(u).noalias() += s.reset_state.transpose() * dan;
    Tensor2D d_dropped_state = da.leftCols(2 * u) * recurrent_kernel_.value.leftCols(2 * u).transpose();
    d_dropped_state += hadamard(d_reset_state, s.r);
    grad_input.steps[t] = hadamard<double>(da * kernel_.value.transpose(), input_mask_);
    dh_next = (dh.array() * (1.0 - s.z.array())).matrix() + hadamard(d_dropped_state, recurrent_mask_);
  }
  return grad_input;
}

// --------------------------------------------------------------- BatchNorm

BatchNormLayer::BatchNormLayer(std::string name, int features)
    : name_(std::move(name)),
      features_(features),
      gamma_(name_ + "/gamma", Tensor2D::Ones(1, features)),
      beta_(name_ + "/beta", Tensor2D::Zero(1, features)),
      moving_mean_(name_ + "/moving_mean", Tensor2D::Zero(1, features)),
      moving_variance_(name_ + "/moving_variance", Tensor2D::Ones(1, features)) {}

Activations BatchNormLayer::forward(const Activations& input, const ForwardOptions& options, RngStream&) {
  if (input.steps.empty() || input.features() != features_) {
    throw ShapeError(name_ + " expects " + std::to_string(features_) + " features");
  }
  if (options.phase == Phase::kInfer) {
    return running_normalize(input, gamma_.value, beta_.value, moving_mean_.value, moving_variance_.value, kEpsilon);
  }
  if (input.batch() < 2) throw DegenerateBatch(name_ + " needs at least 2 samples per batch in training");
  Tensor2D mean, variance;
  Activations out = batch_normalize(input, gamma_.value, beta_.value, kEpsilon, mean, variance, inv_std_, &normalized_);
  moving_mean_.value = kMomentum * moving_mean_.value + (1.0 - kMomentum) * mean;
  moving_variance_.value = kMomentum * moving_variance_.value + (1.0 - kMomentum) * variance;
  last_was_sequence_ = input.is_sequence;
  return out;
}

template <typename S>
BasicActivations<S> BatchNormLayer::evaluate_as(const BasicActivations<S>& input, Phase phase) const {
  if (input.steps.empty() || input.features() != features_) {
    throw ShapeError(name_ + " expects " + std::to_string(features_) + " features");
  }
  if (phase == Phase::kInfer) {
    return running_normalize(input, as<S>(gamma_.value), as<S>(beta_.value), as<S>(moving_mean_.value),
                             as<S>(moving_variance_.value), static_cast<S>(kEpsilon));
  }
  if (input.batch() < 2) throw DegenerateBatch(name_ + " needs at least 2 samples per batch in training");
  Matrix<S> mean, variance, inv_std;
  return batch_normalize(input, as<S>(gamma_.value), as<S>(beta_.value), static_cast<S>(kEpsilon), mean, variance,
                         inv_std, static_cast<std::vector<Matrix<S>>*>(nullptr));
}

Activations BatchNormLayer::evaluate(const Activations& input, Phase phase) const { return evaluate_as(input, phase); }

ExtendedActivations BatchNormLayer::evaluate(const ExtendedActivations& input, Phase phase) const {
  return evaluate_as(input, phase);
}

Activations BatchNormLayer::backward(const Activations& grad_output) {
  const std::size_t steps = normalized_.size();
  const double count = static_cast<double>(normalized_.front().rows()) * static_cast<double>(steps);
  Tensor2D sum_dy = Tensor2D::Zero(1, features_);
  Tensor2D sum_dy_xhat = Tensor2D::Zero(1, features_);
  for (std::size_t t = 0; t < steps; ++t) {
    sum_dy += grad_output.steps[t].colwise().sum();
    sum_dy_xhat += hadamard(grad_output.steps[t], normalized_[t]).colwise().sum();
  }
  gamma_.grad += sum_dy_xhat;
  beta_.grad += sum_dy;
  // dx = gamma * inv_std / N * (N dy - sum(dy) - xhat * sum(dy * xhat))
  const Tensor2D scale = (gamma_.value.array() * inv_std_.array()).matrix() / count;
  Activations grad_input{std::vector<Tensor2D>(steps), last_was_sequence_};
  for (std::size_t t = 0; t < steps; ++t) {
    Tensor2D dx = count * grad_output.steps[t];
    dx.rowwise() -= sum_dy.row(0);
    Tensor2D correction = normalized_[t];
    correction.array().rowwise() *= sum_dy_xhat.row(0).array();
    dx -= correction;
    dx.array().rowwise() *= scale.row(0).array();
    grad_input.steps[t] = std::move(dx);
  }
  return grad_input;
}

// -------------------------------------------------------------------- Dense

DenseLayer::DenseLayer(std::string name, int input_dim, int units, RngStream& rng)
    : name_(std::move(name)),
      kernel_(name_ + "/kernel", glorot_uniform(input_dim, units, rng)),
      bias_(name_ + "/bias", Tensor2D::Zero(1, units)) {}

namespace {

template <typename S>
void check_dense_input(const BasicActivations<S>& input, const std::string& name, Eigen::Index features) {
  if (input.is_sequence || input.steps.size() != 1) throw ShapeError(name + " expects a single matrix input");
  if (input.features() != features) {
    throw ShapeError(name + " expects " + std::to_string(features) + " features, got " +
                     std::to_string(input.features()));
  }
}

}  // namespace

Activations DenseLayer::forward(const Activations& input, const ForwardOptions&, RngStream&) {
  check_dense_input(input, name_, kernel_.value.rows());
  last_input_ = input.steps.front();
  return Activations::single(affine(last_input_, kernel_.value, bias_.value));
}

template <typename S>
BasicActivations<S> DenseLayer::evaluate_as(const BasicActivations<S>& input, Phase) const {
  check_dense_input(input, name_, kernel_.value.rows());
  return BasicActivations<S>::single(affine(input.steps.front(), as<S>(kernel_.value), as<S>(bias_.value)));
}

Activations DenseLayer::evaluate(const Activations& input, Phase phase) const { return evaluate_as(input, phase); }

ExtendedActivations DenseLayer::evaluate(const ExtendedActivations& input, Phase phase) const {
  return evaluate_as(input, phase);
}

Activations DenseLayer::backward(const Activations& grad_output) {
  const Tensor2D& g = grad_output.steps.front();
  kernel_.grad.noalias() += last_input_.transpose() * g;
  bias_.grad += column_sums(g);
  return Activations::single(g * kernel_.value.transpose());
}

}  // namespace alsent::nn
