// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#include "dipolearray/nn.hpp"

#include <cmath>

namespace dpa::nn {

namespace {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::ReLU: return x > 0.0 ? x : 0.0;
    case Activation::Tanh: return std::tanh(x);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::Identity: return x;
  }
  return x;
}

/// Derivative in terms of the pre-activation value.
double activate_grad(Activation a, double pre) {
  switch (a) {
    case Activation::ReLU: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-pre));
      return s * (1.0 - s);
    }
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

}  // namespace

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * M_PI * u2);
  has_spare_ = true;
  return mag * std::cos(2.0 * M_PI * u2);
}

int Rng::below(int n) {
  if (n <= 0) throw std::domain_error("Rng::below needs n > 0");
  return static_cast<int>(uniform() * n) % n;
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "identity") return Activation::Identity;
  throw std::domain_error("unknown activation: " + name);
}

DenseLayer DenseLayer::init(int out, int in, Activation act, Rng& rng) {
  if (out <= 0 || in <= 0) throw std::domain_error("layer sizes must be positive");
  DenseLayer layer;
  layer.activation = act;
  layer.weights.resize(out, in);
  const double limit = std::sqrt(6.0 / (in + out));
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
  layer.bias = Vector::Zero(out);
  return layer;
}

Vector dense_forward(const DenseLayer& layer, const Vector& x, DenseCache* cache) {
  if (x.size() != layer.in_size())
    throw std::invalid_argument("dense_forward: input size mismatch");
  Vector pre = layer.weights * x + layer.bias;
  Vector out = pre.unaryExpr([&](double v) { return activate(layer.activation, v); });
  if (cache) {
    cache->input = x;
    cache->pre = pre;
    cache->output = out;
    cache->recorded = true;
  }
  return out;
}

DenseGrads dense_backward(const DenseLayer& layer, const DenseCache& cache,
                          const Vector& upstream) {
  if (!cache.recorded)
    throw std::logic_error("dense_backward: no recorded forward evaluation");
  if (upstream.size() != layer.out_size())
    throw std::invalid_argument("dense_backward: upstream size mismatch");
  Vector d_pre = upstream.cwiseProduct(cache.pre.unaryExpr(
      [&](double v) { return activate_grad(layer.activation, v); }));
  DenseGrads g;
  g.d_weights = d_pre * cache.input.transpose();
  g.d_bias = d_pre;
  g.d_input = layer.weights.transpose() * d_pre;
  return g;
}

Matrix dense_forward_batch(const DenseLayer& layer, const Matrix& x, Matrix* pre_cache) {
  if (x.rows() != layer.in_size())
    throw std::invalid_argument("dense_forward_batch: input size mismatch");
  Matrix pre = layer.weights * x;
  pre.colwise() += layer.bias;
  Matrix out = pre.unaryExpr([&](double v) { return activate(layer.activation, v); });
  if (pre_cache) *pre_cache = std::move(pre);
  return out;
}

void dense_backward_batch(const DenseLayer& layer, const Matrix& x, const Matrix& pre,
                          const Matrix& upstream, Matrix& d_weights, Vector& d_bias,
                          Matrix& d_input) {
  Matrix d_pre = upstream.cwiseProduct(
      pre.unaryExpr([&](double v) { return activate_grad(layer.activation, v); }));
  d_weights = d_pre * x.transpose();
  d_bias = d_pre.rowwise().sum();
  d_input = layer.weights.transpose() * d_pre;
}

Vector softmax(const Vector& z) {
  if (z.size() == 0) throw std::invalid_argument("softmax: empty input");
  const double shift = z.maxCoeff();
  Vector e = (z.array() - shift).exp();
  return e / e.sum();
}

Vector softmax_backward(const Vector& y, const Vector& upstream) {
  const double dot = upstream.dot(y);
  return y.cwiseProduct((upstream.array() - dot).matrix());
}

double mse(const Vector& pred, const Vector& target) {
  if (pred.size() != target.size()) throw std::invalid_argument("mse: length mismatch");
  if (pred.size() == 0) throw std::invalid_argument("mse: empty input");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

Vector mse_grad(const Vector& pred, const Vector& target) {
  if (pred.size() != target.size())
    throw std::invalid_argument("mse_grad: length mismatch");
  return 2.0 / static_cast<double>(pred.size()) * (pred - target);
}

Matrix conv2d(const Matrix& input, const Matrix& kernel) {
  const int kr = static_cast<int>(kernel.rows());
  const int kc = static_cast<int>(kernel.cols());
  if (kr != kc || kr % 2 == 0)
    throw std::invalid_argument("conv2d: kernel must be square with odd side");
  if (kr > input.rows() || kc > input.cols())
    throw std::invalid_argument("conv2d: kernel larger than input");
  const int orows = static_cast<int>(input.rows()) - kr + 1;
  const int ocols = static_cast<int>(input.cols()) - kc + 1;
  Matrix out(orows, ocols);
  for (int i = 0; i < orows; ++i)
    for (int j = 0; j < ocols; ++j)
      out(i, j) = input.block(i, j, kr, kc).cwiseProduct(kernel).sum();
  return out;
}

Matrix conv2d_input_grad(const Matrix& upstream, const Matrix& kernel, int in_rows,
                         int in_cols) {
  const int kr = static_cast<int>(kernel.rows());
  Matrix d_in = Matrix::Zero(in_rows, in_cols);
  for (int i = 0; i < upstream.rows(); ++i)
    for (int j = 0; j < upstream.cols(); ++j)
      d_in.block(i, j, kr, kr) += upstream(i, j) * kernel;
  return d_in;
}

Matrix conv2d_kernel_grad(const Matrix& input, const Matrix& upstream, int kernel_side) {
  Matrix d_k = Matrix::Zero(kernel_side, kernel_side);
  for (int i = 0; i < upstream.rows(); ++i)
    for (int j = 0; j < upstream.cols(); ++j)
      d_k += upstream(i, j) * input.block(i, j, kernel_side, kernel_side);
  return d_k;
}

void Adam::begin_step(double lr_override) {
  ++step_;
  lr_ = lr_override > 0.0 ? lr_override : config_.learning_rate;
}

void Adam::update(const std::string& path, Matrix& param, const Matrix& grad) {
  if (step_ == 0) throw std::logic_error("Adam::update before begin_step");
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw std::invalid_argument("Adam::update: shape mismatch at " + path);
  if (!grad.allFinite())
    throw TrainingError("non-finite gradient at parameter " + path);

  Slot& slot = slots_[path];
  if (slot.m.size() == 0) {
    slot.m = Matrix::Zero(param.rows(), param.cols());
    slot.v = Matrix::Zero(param.rows(), param.cols());
  }
  slot.m = config_.beta1 * slot.m + (1.0 - config_.beta1) * grad;
  slot.v = config_.beta2 * slot.v + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  param.array() -= lr_ * (slot.m.array() / bc1) /
                   ((slot.v.array() / bc2).sqrt() + config_.epsilon);
}

void Adam::update(const std::string& path, Vector& param, const Vector& grad) {
  Matrix p = param;
  Matrix g = grad;
  update(path, p, g);
  param = p.col(0);
}

void SgdMomentum::update(const std::string& path, Matrix& param, const Matrix& grad) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw std::invalid_argument("SgdMomentum::update: shape mismatch at " + path);
  if (!grad.allFinite())
    throw TrainingError("non-finite gradient at parameter " + path);
  Matrix& vel = velocity_[path];
  if (vel.size() == 0) vel = Matrix::Zero(param.rows(), param.cols());
  vel = momentum_ * vel - lr_ * grad;
  param += vel;
}

void SgdMomentum::update(const std::string& path, Vector& param, const Vector& grad) {
  Matrix p = param;
  Matrix g = grad;
  update(path, p, g);
  param = p.col(0);
}

double lr_schedule(double lr0, double lr1, int epoch, int total_epochs) {
  if (total_epochs <= 1) return lr0;
  const double t = static_cast<double>(epoch) / (total_epochs - 1);
  return lr0 * std::pow(lr1 / lr0, t);
}

}  // namespace dpa::nn
