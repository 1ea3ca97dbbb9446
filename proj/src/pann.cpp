// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#include "dipolearray/pann.hpp"

#include <cmath>
#include <string>

#include "dipolearray/packing.hpp"

namespace dpa::pann {

namespace {

constexpr double kCanonicalRadiusOverLength = 0.008;

Vector raw_input(double radius_m, double length_m, double frequency_hz) {
  Vector x(3);
  x << radius_m, length_m, frequency_hz;
  return x;
}

}  // namespace

std::pair<double, double> adaptive_weights(double loss_r, double loss_i, double alpha) {
  if (loss_r < 0.0 || loss_i < 0.0)
    throw std::domain_error("adaptive_weights: losses must be nonnegative");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("adaptive_weights: alpha must be in (0, 1)");
  const double sum = loss_r + loss_i;
  if (sum == 0.0 || loss_r == loss_i) return {0.5, 0.5};
  const double w = alpha + (1.0 - alpha) * std::abs(loss_r - loss_i) / sum;
  return loss_r > loss_i ? std::make_pair(w, 1.0 - w) : std::make_pair(1.0 - w, w);
}

double default_diag_delta(int segments) {
  return kCanonicalRadiusOverLength * segments;
}

std::pair<Vector, Vector> analytic_targets(int segments, double diag_delta) {
  if (segments < 2) throw std::domain_error("analytic_targets: segments must be >= 2");
  if (diag_delta <= 0.0) throw std::domain_error("analytic_targets: diag_delta must be positive");
  const int half = upper_tri_count(segments);
  Vector re(half), im(half);
  for (int i = 0; i < segments; ++i) {
    for (int j = i; j < segments; ++j) {
      const int k = upper_tri_index(i, j, segments);
      const cdouble g = (i == j) ? factored_green_at(diag_delta, segments)
                                 : factored_green(j - i, segments);
      re(k) = g.real();
      im(k) = g.imag();
    }
  }
  return {re, im};
}

std::pair<Vector, Vector> analytic_targets(int segments) {
  return analytic_targets(segments, default_diag_delta(segments));
}

double total_loss(const Vector& pred, const Vector& target, const AdaptiveLossState& state) {
  if (pred.size() != target.size() || pred.size() % 2 != 0)
    throw std::invalid_argument("total_loss: prediction/target shape mismatch");
  const int half = static_cast<int>(pred.size()) / 2;
  const double loss_r = nn::mse(pred.head(half), target.head(half));
  const double loss_i = nn::mse(pred.tail(half), target.tail(half));
  return state.omega_r * loss_r + state.omega_i * loss_i;
}

Vector PannModel::normalize_input(double radius_m, double length_m,
                                  double frequency_hz) const {
  const Vector x = raw_input(radius_m, length_m, frequency_hz);
  return (x - in_mean).cwiseQuotient(in_std);
}

Vector PannModel::forward(const Vector& normalized) const {
  Vector h = normalized;
  for (const auto& layer : layers) h = nn::dense_forward(layer, h);
  return h;
}

TrainResult train_pann(const TrainConfig& config) {
  if (config.epochs < 0) throw std::domain_error("train_pann: epochs must be >= 0");
  if (config.segments < 2) throw std::domain_error("train_pann: segments must be >= 2");

  nn::Rng rng(config.seed);

  TrainResult result;
  PannModel& model = result.model;
  model.segments = config.segments;
  model.seed = config.seed;
  model.diag_delta =
      config.radius_m * config.segments / config.length_m;

  // Single-configuration training set: the z-score degenerates, so keep the
  // raw point as the scale (mean 0, std |x|) and the network sees ones.
  const Vector x = raw_input(config.radius_m, config.length_m, config.frequency_hz);
  model.in_mean = Vector::Zero(3);
  model.in_std = x.cwiseAbs().cwiseMax(1e-300);
  model.in_lo = x;
  model.in_hi = x;

  const int out_size = 2 * model.out_half();
  std::vector<int> widths;
  widths.push_back(3);
  for (int i = 0; i < config.hidden_layers; ++i) widths.push_back(config.hidden_width);
  widths.push_back(out_size);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = (i + 2 == widths.size());
    model.layers.push_back(nn::DenseLayer::init(
        widths[i + 1], widths[i], last ? nn::Activation::Identity : nn::Activation::Tanh,
        rng));
  }

  AdaptiveLossState& state = result.state;
  state.alpha = config.alpha;

  const auto [target_r, target_i] = analytic_targets(config.segments, model.diag_delta);
  const int half = model.out_half();
  Vector target(out_size);
  target.head(half) = target_r;
  target.tail(half) = target_i;

  const Vector input = model.normalize_input(config.radius_m, config.length_m,
                                             config.frequency_hz);

  nn::SgdMomentum optimizer(config.momentum);
  std::vector<nn::DenseCache> caches(model.layers.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Vector h = input;
    for (std::size_t i = 0; i < model.layers.size(); ++i)
      h = nn::dense_forward(model.layers[i], h, &caches[i]);

    const double loss_r = nn::mse(h.head(half), target_r);
    const double loss_i = nn::mse(h.tail(half), target_i);
    const double total = state.omega_r * loss_r + state.omega_i * loss_i;
    if (!std::isfinite(total))
      throw nn::TrainingError("pann training diverged at epoch " + std::to_string(epoch));
    state.history.push_back({epoch, loss_r, loss_i, state.omega_r, state.omega_i, total});

    Vector upstream(out_size);
    upstream.head(half) = state.omega_r * nn::mse_grad(h.head(half), target_r);
    upstream.tail(half) = state.omega_i * nn::mse_grad(h.tail(half), target_i);

    optimizer.begin_step(
        nn::lr_schedule(config.lr_start, config.lr_end, epoch - 1, config.epochs));
    for (int i = static_cast<int>(model.layers.size()) - 1; i >= 0; --i) {
      const nn::DenseGrads g =
          nn::dense_backward(model.layers[i], caches[i], upstream);
      upstream = g.d_input;
      const std::string path = "pann.layer" + std::to_string(i);
      optimizer.update(path + ".weights", model.layers[i].weights, g.d_weights);
      optimizer.update(path + ".bias", model.layers[i].bias, g.d_bias);
    }

    // Next epoch's weights come from this epoch's losses.
    if (config.adaptive) {
      const auto [wr, wi] = adaptive_weights(loss_r, loss_i, config.alpha);
      state.omega_r = wr;
      state.omega_i = wi;
    }
  }

  model.epochs_trained = config.epochs;
  model.final_total = state.history.empty() ? 0.0 : state.history.back().total;
  model.lr_start = config.lr_start;
  model.lr_end = config.lr_end;
  model.momentum = config.momentum;
  return result;
}

Prediction pann_predict(const PannModel& model, double radius_m, double length_m,
                        double frequency_hz) {
  if (model.layers.empty()) throw std::logic_error("pann_predict: model has no layers");
  const Vector x = raw_input(radius_m, length_m, frequency_hz);

  Prediction out;
  for (int i = 0; i < 3; ++i) {
    const double margin = 1e-9 * std::max(1.0, std::abs(x(i)));
    if (x(i) < model.in_lo(i) - margin || x(i) > model.in_hi(i) + margin)
      out.extrapolation = true;
  }

  const Vector y = model.forward(model.normalize_input(radius_m, length_m, frequency_hz));
  const int half = model.out_half();
  out.upper.resize(half);
  for (int k = 0; k < half; ++k) out.upper(k) = cdouble{y(k), y(half + k)};
  return out;
}

}  // namespace dpa::pann
