// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#include "dipolearray/pclstm.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>

#include "dipolearray/packing.hpp"

namespace dpa::pclstm {

namespace {

Matrix sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Matrix tanh_m(const Matrix& x) {
  return x.unaryExpr([](double v) { return std::tanh(v); });
}

void fnv_append(std::uint64_t& h, const double* data, std::size_t count) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < count * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

void fnv_append(std::uint64_t& h, const Matrix& m) { fnv_append(h, m.data(), m.size()); }
void fnv_append(std::uint64_t& h, const Vector& v) { fnv_append(h, v.data(), v.size()); }

/// Split a complex upper triangle into mirrored real/imaginary grids.
std::pair<Matrix, Matrix> green_grids(const CVector& upper, int side) {
  Vector re(upper.size()), im(upper.size());
  for (int k = 0; k < upper.size(); ++k) {
    re(k) = upper(k).real();
    im(k) = upper(k).imag();
  }
  return {unpack_upper_real(re, side), unpack_upper_real(im, side)};
}

struct ScalarNorm {
  Vector mean, std;
  Vector apply(const Vector& x) const { return (x - mean).cwiseQuotient(std); }
};

/// Per-sequence-step geometry scalars: the spacing with its free-space
/// phase/amplitude basis (the pair coupling behaves like exp(-jkd)/kd, which
/// a small network represents poorly from the raw spacing alone), then the
/// dipole dimensions and frequency.
Vector spacing_scalar_row(double spacing_m, double length_m, double radius_m,
                          double frequency_hz) {
  const double lambda = kSpeedOfLight / frequency_hz;
  const double u = spacing_m / lambda;
  Vector row(7);
  row << spacing_m, std::cos(2.0 * kPi * u), std::sin(2.0 * kPi * u),
      1.0 / (u + 0.125), length_m, radius_m, frequency_hz;
  return row;
}

constexpr int kScalarFeatures = 7;

/// z-score with a degenerate-dimension rule: constant dimensions keep their
/// raw scale (mean 0, std |x|) so inputs stay informative.
ScalarNorm fit_scalar_norm(const std::vector<Vector>& rows) {
  const int dims = static_cast<int>(rows.front().size());
  ScalarNorm norm;
  norm.mean = Vector::Zero(dims);
  norm.std = Vector::Ones(dims);
  for (int d = 0; d < dims; ++d) {
    double lo = rows.front()(d), hi = lo, sum = 0.0;
    for (const auto& r : rows) {
      lo = std::min(lo, r(d));
      hi = std::max(hi, r(d));
      sum += r(d);
    }
    const double mean = sum / rows.size();
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      norm.mean(d) = 0.0;
      norm.std(d) = std::max(std::abs(rows.front()(d)), 1e-300);
    } else {
      double var = 0.0;
      for (const auto& r : rows) var += (r(d) - mean) * (r(d) - mean);
      norm.mean(d) = mean;
      norm.std(d) = std::max(std::sqrt(var / rows.size()), 1e-12);
    }
  }
  return norm;
}

}  // namespace

PhysicsKernel build_kernel(int side, double decay) {
  if (side < 3 || side % 2 == 0)
    throw std::domain_error("kernel side must be odd and >= 3");
  if (decay <= 0.0) throw std::domain_error("kernel decay must be positive");

  PhysicsKernel kernel;
  kernel.side = side;
  kernel.decay = decay;
  kernel.weights.resize(side, side);
  const int c = side / 2;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      if (i == c && j == c) {
        kernel.weights(i, j) = 1.0;
      } else {
        const int dist = std::abs(i - c) + std::abs(j - c);
        kernel.weights(i, j) = std::exp(-decay * std::abs(i - j)) / dist;
      }
    }
  }
  kernel.weights /= kernel.weights.sum();
  return kernel;
}

LstmStack LstmStack::init(int input_size, int hidden, int layer_count, nn::Rng& rng) {
  if (input_size <= 0 || hidden <= 0 || layer_count <= 0)
    throw std::domain_error("LSTM sizes must be positive");
  LstmStack stack;
  stack.hidden = hidden;
  for (int l = 0; l < layer_count; ++l) {
    const int in = (l == 0) ? input_size : hidden;
    LstmLayer layer;
    layer.w.resize(4 * hidden, in + hidden);
    const double limit = std::sqrt(6.0 / (in + 2.0 * hidden));
    for (int r = 0; r < layer.w.rows(); ++r)
      for (int c = 0; c < layer.w.cols(); ++c) layer.w(r, c) = rng.uniform(-limit, limit);
    layer.b = Vector::Zero(4 * hidden);
    layer.b.head(hidden).setConstant(1.0);  // open forget gates at start
    stack.layers.push_back(std::move(layer));
  }
  return stack;
}

std::pair<Vector, Vector> lstm_step(const LstmLayer& layer, int hidden, const Vector& x,
                                    const Vector& h_prev, const Vector& c_prev) {
  const int in = static_cast<int>(layer.w.cols()) - hidden;
  if (x.size() != in || h_prev.size() != hidden || c_prev.size() != hidden)
    throw std::invalid_argument("lstm_step: shape mismatch");
  Vector cat(in + hidden);
  cat.head(in) = x;
  cat.tail(hidden) = h_prev;
  const Vector pre = layer.w * cat + layer.b;
  Vector h(hidden), c(hidden);
  for (int k = 0; k < hidden; ++k) {
    const double f = 1.0 / (1.0 + std::exp(-pre(k)));
    const double i = 1.0 / (1.0 + std::exp(-pre(hidden + k)));
    const double g = std::tanh(pre(2 * hidden + k));
    const double o = 1.0 / (1.0 + std::exp(-pre(3 * hidden + k)));
    c(k) = f * c_prev(k) + i * g;
    h(k) = o * std::tanh(c(k));
  }
  return {h, c};
}

Vector lstm_forward(const LstmStack& stack, const std::vector<Vector>& sequence) {
  if (sequence.empty()) throw std::domain_error("lstm_forward: empty sequence");
  std::vector<Matrix> inputs;
  inputs.reserve(sequence.size());
  for (const auto& x : sequence) inputs.push_back(x);
  return lstm_forward_batch(stack, inputs).back().col(0);
}

std::vector<Matrix> lstm_forward_batch(const LstmStack& stack,
                                       const std::vector<Matrix>& inputs,
                                       LstmCache* cache) {
  if (inputs.empty()) throw std::domain_error("lstm_forward_batch: empty sequence");
  const int hidden = stack.hidden;
  const int batch = static_cast<int>(inputs.front().cols());
  const int steps = static_cast<int>(inputs.size());
  const int layer_count = static_cast<int>(stack.layers.size());

  if (cache) {
    cache->steps.assign(layer_count, std::vector<LstmStepCache>(steps));
    cache->batch = batch;
    cache->recorded = true;
  }

  std::vector<Matrix> h(layer_count, Matrix::Zero(hidden, batch));
  std::vector<Matrix> c(layer_count, Matrix::Zero(hidden, batch));
  std::vector<Matrix> top(steps);

  for (int t = 0; t < steps; ++t) {
    const Matrix* x = &inputs[t];
    Matrix next_x;
    for (int l = 0; l < layer_count; ++l) {
      const LstmLayer& layer = stack.layers[l];
      const int in = stack.input_size(l);
      if (x->rows() != in || x->cols() != batch)
        throw std::invalid_argument("lstm_forward_batch: input shape mismatch");

      Matrix cat(in + hidden, batch);
      cat.topRows(in) = *x;
      cat.bottomRows(hidden) = h[l];
      Matrix pre = layer.w * cat;
      pre.colwise() += layer.b;

      Matrix f = sigmoid(pre.topRows(hidden));
      Matrix i = sigmoid(pre.middleRows(hidden, hidden));
      Matrix g = tanh_m(pre.middleRows(2 * hidden, hidden));
      Matrix o = sigmoid(pre.bottomRows(hidden));
      Matrix c_new = f.cwiseProduct(c[l]) + i.cwiseProduct(g);
      Matrix tc = tanh_m(c_new);
      Matrix h_new = o.cwiseProduct(tc);

      if (cache) {
        LstmStepCache& sc = cache->steps[l][t];
        sc.cat = cat;
        sc.f = f;
        sc.i = i;
        sc.g = g;
        sc.o = o;
        sc.c_prev = c[l];
        sc.c = c_new;
        sc.tanh_c = tc;
      }

      c[l] = std::move(c_new);
      h[l] = std::move(h_new);
      next_x = h[l];
      x = &next_x;
    }
    top[t] = h[layer_count - 1];
  }
  return top;
}

LstmGrads lstm_backward_batch(const LstmStack& stack, const LstmCache& cache,
                              const std::vector<Matrix>& d_h_top) {
  if (!cache.recorded)
    throw std::logic_error("lstm_backward_batch: no recorded forward evaluation");
  const int layer_count = static_cast<int>(stack.layers.size());
  const int steps = static_cast<int>(cache.steps.front().size());
  const int hidden = stack.hidden;
  const int batch = cache.batch;
  if (static_cast<int>(d_h_top.size()) != steps)
    throw std::invalid_argument("lstm_backward_batch: upstream step count mismatch");

  LstmGrads grads;
  grads.d_w.resize(layer_count);
  grads.d_b.resize(layer_count);
  for (int l = 0; l < layer_count; ++l) {
    grads.d_w[l] = Matrix::Zero(stack.layers[l].w.rows(), stack.layers[l].w.cols());
    grads.d_b[l] = Vector::Zero(stack.layers[l].b.size());
  }
  grads.d_inputs.assign(steps, Matrix());

  // Upstream into each layer's hidden state per step; the top layer starts
  // from the caller's gradients, lower layers receive them from above.
  std::vector<Matrix> d_h_steps = d_h_top;

  for (int l = layer_count - 1; l >= 0; --l) {
    const LstmLayer& layer = stack.layers[l];
    const int in = stack.input_size(l);
    std::vector<Matrix> d_x_below(steps);

    Matrix dh_carry = Matrix::Zero(hidden, batch);
    Matrix dc_carry = Matrix::Zero(hidden, batch);
    for (int t = steps - 1; t >= 0; --t) {
      const LstmStepCache& sc = cache.steps[l][t];
      Matrix dh = dh_carry;
      if (d_h_steps[t].size() != 0) dh += d_h_steps[t];

      const Matrix d_o = dh.cwiseProduct(sc.tanh_c);
      Matrix dc = dc_carry +
                  dh.cwiseProduct(sc.o).cwiseProduct(
                      (1.0 - sc.tanh_c.array().square()).matrix());
      const Matrix d_f = dc.cwiseProduct(sc.c_prev);
      const Matrix d_i = dc.cwiseProduct(sc.g);
      const Matrix d_g = dc.cwiseProduct(sc.i);
      dc_carry = dc.cwiseProduct(sc.f);

      Matrix d_pre(4 * hidden, batch);
      d_pre.topRows(hidden) =
          d_f.cwiseProduct(sc.f.cwiseProduct((1.0 - sc.f.array()).matrix()));
      d_pre.middleRows(hidden, hidden) =
          d_i.cwiseProduct(sc.i.cwiseProduct((1.0 - sc.i.array()).matrix()));
      d_pre.middleRows(2 * hidden, hidden) =
          d_g.cwiseProduct((1.0 - sc.g.array().square()).matrix());
      d_pre.bottomRows(hidden) =
          d_o.cwiseProduct(sc.o.cwiseProduct((1.0 - sc.o.array()).matrix()));

      grads.d_w[l].noalias() += d_pre * sc.cat.transpose();
      grads.d_b[l] += d_pre.rowwise().sum();

      const Matrix d_cat = layer.w.transpose() * d_pre;
      d_x_below[t] = d_cat.topRows(in);
      dh_carry = d_cat.bottomRows(hidden);
    }

    if (l == 0) {
      grads.d_inputs = std::move(d_x_below);
    } else {
      d_h_steps = std::move(d_x_below);
    }
  }
  return grads;
}

nn::Vector stage2_slot_features(const Stage2Model& model, cdouble prior_entry,
                                double separation_lambda, bool diagonal,
                                int elements) {
  Vector f(Stage2Model::kSlotFeatures);
  f(0) = (prior_entry.real() - model.re_mean) / model.re_std;
  f(1) = (prior_entry.imag() - model.im_mean) / model.im_std;
  f(2) = separation_lambda;
  f(3) = std::cos(2.0 * kPi * separation_lambda);
  f(4) = std::sin(2.0 * kPi * separation_lambda);
  f(5) = 1.0 / (separation_lambda + 0.125);  // bounded 1/r amplitude proxy
  f(6) = diagonal ? 1.0 : 0.0;
  f(7) = static_cast<double>(elements) / model.max_elements;
  return f;
}

std::string ModelBundle::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  fnv_append(h, fusion_params.map_r.weights);
  fnv_append(h, fusion_params.map_r.bias);
  fnv_append(h, fusion_params.map_i.weights);
  fnv_append(h, fusion_params.map_i.bias);
  fnv_append(h, fusion_params.attn.weights);
  fnv_append(h, fusion_params.attn.bias);
  fnv_append(h, kernel.weights);
  for (const auto& layer : lstm.layers) {
    fnv_append(h, layer.w);
    fnv_append(h, layer.b);
  }
  fnv_append(h, head_w);
  fnv_append(h, head_b);
  for (const auto& layer : green_net.layers) {
    fnv_append(h, layer.weights);
    fnv_append(h, layer.bias);
  }
  if (stage2.trained) {
    for (const auto& layer : stage2.lstm.layers) {
      fnv_append(h, layer.w);
      fnv_append(h, layer.b);
    }
    fnv_append(h, stage2.dec_hidden.weights);
    fnv_append(h, stage2.dec_hidden.bias);
    fnv_append(h, stage2.dec_out.weights);
    fnv_append(h, stage2.dec_out.bias);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

struct PipelineInputs {
  std::vector<Vector> rows;  // per step; spacing-feature slots left empty
  int scalar_slot = 0;       // offset of the kScalarFeatures block
  double length_m = 0.0, radius_m = 0.0, frequency_hz = 0.0;
  bool pann_extrapolation = false;
};

/// Everything ahead of the LSTM for the bundle's trained geometry: Green
/// template, fusion, kernel convolutions. The spacing-dependent scalar block
/// is filled per query.
PipelineInputs build_pipeline_inputs(const ModelBundle& bundle, double length_m,
                                     double radius_m, double frequency_hz) {
  const int grid = bundle.grid_side();
  const auto pred =
      pann::pann_predict(bundle.green_net, radius_m, length_m, frequency_hz);
  const auto [g_r, g_i] = green_grids(pred.upper, grid);
  const Matrix fused = fusion::fuse(g_r, g_i, bundle.fusion_params).fused;

  const Matrix conv_r = nn::conv2d(g_r, bundle.kernel.weights);
  const Matrix conv_i = nn::conv2d(g_i, bundle.kernel.weights);
  const Matrix conv_f = nn::conv2d(fused, bundle.kernel.weights);
  const int rows = static_cast<int>(conv_r.rows());
  const int cols = static_cast<int>(conv_r.cols());

  PipelineInputs out;
  out.pann_extrapolation = pred.extrapolation;
  out.scalar_slot = 3 * cols;
  out.length_m = length_m;
  out.radius_m = radius_m;
  out.frequency_hz = frequency_hz;
  out.rows.reserve(rows);
  for (int t = 0; t < rows; ++t) {
    Vector step = Vector::Zero(3 * cols + kScalarFeatures);
    step.segment(0, cols) = conv_r.row(t);
    step.segment(cols, cols) = conv_i.row(t);
    step.segment(2 * cols, cols) = conv_f.row(t);
    out.rows.push_back(std::move(step));
  }
  return out;
}

Vector normalized_scalars(const ModelBundle& bundle, double spacing_m, double length_m,
                          double radius_m, double frequency_hz) {
  const Vector raw = spacing_scalar_row(spacing_m, length_m, radius_m, frequency_hz);
  return (raw - bundle.scalar_mean).cwiseQuotient(bundle.scalar_std);
}

TwoPortPrediction decode_two_port(const ModelBundle& bundle, const Vector& normalized) {
  const Vector y =
      normalized.cwiseProduct(bundle.target_std) + bundle.target_mean;
  TwoPortPrediction p;
  p.z11 = {y(0), y(1)};
  p.z12 = {y(2), y(3)};
  p.z22 = {y(4), y(5)};
  p.reconstructed.resize(2, 2);
  p.reconstructed << p.z11, p.z12, p.z12, p.z22;
  return p;
}

}  // namespace

TwoPortEvaluator::TwoPortEvaluator(const ModelBundle& bundle) : bundle_(&bundle) {
  if (!bundle.trained)
    throw std::logic_error("TwoPortEvaluator: bundle is not trained");
  PipelineInputs inputs = build_pipeline_inputs(bundle, bundle.dipole.length_m,
                                                bundle.dipole.radius_m,
                                                bundle.frequency_hz);
  base_rows_ = std::move(inputs.rows);
  steps_ = static_cast<int>(base_rows_.size());
  d_slot_ = inputs.scalar_slot;
}

std::vector<TwoPortPrediction> TwoPortEvaluator::predict_batch(
    const std::vector<double>& spacing_m) const {
  if (spacing_m.empty()) return {};
  const int batch = static_cast<int>(spacing_m.size());
  const int in = static_cast<int>(base_rows_.front().size());

  std::vector<Matrix> xs(steps_, Matrix(in, batch));
  for (int t = 0; t < steps_; ++t) xs[t].colwise() = base_rows_[t];
  for (int b = 0; b < batch; ++b) {
    const Vector scalars =
        normalized_scalars(*bundle_, spacing_m[b], bundle_->dipole.length_m,
                           bundle_->dipole.radius_m, bundle_->frequency_hz);
    for (int t = 0; t < steps_; ++t)
      xs[t].col(b).segment(d_slot_, scalars.size()) = scalars;
  }

  const Matrix h_final = lstm_forward_batch(bundle_->lstm, xs).back();
  Matrix out = bundle_->head_w * h_final;
  out.colwise() += bundle_->head_b;

  std::vector<TwoPortPrediction> preds;
  preds.reserve(batch);
  const double margin = 1e-9 * std::max(1.0, bundle_->spacing_hi_m);
  for (int b = 0; b < batch; ++b) {
    TwoPortPrediction p = decode_two_port(*bundle_, out.col(b));
    p.extrapolation = spacing_m[b] < bundle_->spacing_lo_m - margin ||
                      spacing_m[b] > bundle_->spacing_hi_m + margin;
    preds.push_back(std::move(p));
  }
  return preds;
}

TwoPortPrediction TwoPortEvaluator::predict(double spacing_m) const {
  return predict_batch({spacing_m}).front();
}

TwoPortPrediction predict_two_port(const ModelBundle& bundle, double spacing_m,
                                   double length_m, double radius_m,
                                   double frequency_hz) {
  if (!bundle.trained) throw std::logic_error("predict_two_port: bundle is not trained");

  PipelineInputs inputs =
      build_pipeline_inputs(bundle, length_m, radius_m, frequency_hz);
  const Vector scalars =
      normalized_scalars(bundle, spacing_m, length_m, radius_m, frequency_hz);
  std::vector<Vector> seq = std::move(inputs.rows);
  for (auto& row : seq) row.segment(inputs.scalar_slot, scalars.size()) = scalars;

  const Vector h = lstm_forward(bundle.lstm, seq);
  const Vector out = bundle.head_w * h + bundle.head_b;
  TwoPortPrediction p = decode_two_port(bundle, out);

  const double margin = 1e-9 * std::max(1.0, bundle.spacing_hi_m);
  p.extrapolation = inputs.pann_extrapolation ||
                    spacing_m < bundle.spacing_lo_m - margin ||
                    spacing_m > bundle.spacing_hi_m + margin;
  return p;
}

TwoPortTrainResult train_two_port(const Dataset& dataset,
                                  const TwoPortTrainConfig& config) {
  if (dataset.samples.empty())
    throw std::domain_error("train_two_port: dataset is empty");
  for (const auto& s : dataset.samples) {
    if (s.geometry.element_count() != 2)
      throw std::domain_error("train_two_port: dataset must hold two-element layouts");
    if (s.z_port.rows() != 2 || s.z_port.cols() != 2)
      throw std::domain_error("train_two_port: targets must be 2x2");
  }

  const ArrayGeometry& first = dataset.samples.front().geometry;
  const int batch = static_cast<int>(dataset.samples.size());

  TwoPortTrainResult result;
  ModelBundle& bundle = result.bundle;
  bundle.dipole = first.dipole;
  bundle.frequency_hz = first.frequency_hz;
  bundle.seed = config.seed;

  // Stage A: the Green network, trained on the analytic targets and frozen.
  if (config.pretrained_green) {
    if (config.pretrained_green->segments != bundle.grid_side())
      throw std::domain_error("train_two_port: pretrained Green network grid mismatch");
    bundle.green_net = *config.pretrained_green;
  } else {
    pann::TrainConfig pcfg;
    pcfg.segments = bundle.grid_side();
    pcfg.radius_m = bundle.dipole.radius_m;
    pcfg.length_m = bundle.dipole.length_m;
    pcfg.frequency_hz = bundle.frequency_hz;
    pcfg.epochs = config.pann_epochs;
    pcfg.seed = config.seed;
    bundle.green_net = pann::train_pann(pcfg).model;
  }

  const int grid = bundle.grid_side();
  const auto green = pann::pann_predict(bundle.green_net, bundle.dipole.radius_m,
                                        bundle.dipole.length_m, bundle.frequency_hz);
  const auto [g_r, g_i] = green_grids(green.upper, grid);

  // Normalization constants.
  std::vector<Vector> scalar_rows;
  std::vector<double> spacings;
  for (const auto& s : dataset.samples) {
    const double d = s.geometry.positions_m[1] - s.geometry.positions_m[0];
    spacings.push_back(d);
    scalar_rows.push_back(spacing_scalar_row(d, s.geometry.dipole.length_m,
                                             s.geometry.dipole.radius_m,
                                             s.geometry.frequency_hz));
  }
  const ScalarNorm scalar_norm = fit_scalar_norm(scalar_rows);
  bundle.scalar_mean = scalar_norm.mean;
  bundle.scalar_std = scalar_norm.std;
  bundle.spacing_lo_m = *std::min_element(spacings.begin(), spacings.end());
  bundle.spacing_hi_m = *std::max_element(spacings.begin(), spacings.end());

  std::vector<Vector> target_rows;
  for (const auto& s : dataset.samples) {
    Vector t(6);
    t << s.z_port(0, 0).real(), s.z_port(0, 0).imag(), s.z_port(0, 1).real(),
        s.z_port(0, 1).imag(), s.z_port(1, 1).real(), s.z_port(1, 1).imag();
    target_rows.push_back(t);
  }
  const ScalarNorm target_norm = fit_scalar_norm(target_rows);
  bundle.target_mean = target_norm.mean;
  bundle.target_std = target_norm.std;

  Matrix targets(6, batch);
  for (int b = 0; b < batch; ++b) targets.col(b) = target_norm.apply(target_rows[b]);

  // Stage B parameters.
  nn::Rng rng(config.seed);
  bundle.fusion_params = fusion::FusionParams::init(grid, rng);
  bundle.kernel = build_kernel(config.kernel_side, config.kernel_decay);

  const Matrix conv_r = nn::conv2d(g_r, bundle.kernel.weights);
  const Matrix conv_i = nn::conv2d(g_i, bundle.kernel.weights);
  const int steps = static_cast<int>(conv_r.rows());
  const int cols = static_cast<int>(conv_r.cols());
  const int in_size = 3 * cols + kScalarFeatures;

  bundle.lstm = LstmStack::init(in_size, config.hidden, config.lstm_layers, rng);
  {
    const nn::DenseLayer head =
        nn::DenseLayer::init(6, config.hidden, nn::Activation::Identity, rng);
    bundle.head_w = head.weights;
    bundle.head_b = head.bias;
  }

  // Batched step inputs. Only the fused-channel block changes across epochs.
  std::vector<Matrix> xs(steps, Matrix::Zero(in_size, batch));
  for (int t = 0; t < steps; ++t) {
    Vector base = Vector::Zero(in_size);
    base.segment(0, cols) = conv_r.row(t);
    base.segment(cols, cols) = conv_i.row(t);
    xs[t].colwise() = base;
  }
  for (int b = 0; b < batch; ++b) {
    const Vector z = scalar_norm.apply(scalar_rows[b]);
    for (int t = 0; t < steps; ++t) xs[t].block(3 * cols, b, kScalarFeatures, 1) = z;
  }

  nn::Adam optimizer;
  fusion::FusionCache fusion_cache;
  LstmCache lstm_cache;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const fusion::FusedFeatures fused =
        fusion::fuse(g_r, g_i, bundle.fusion_params, &fusion_cache);
    const Matrix conv_f = nn::conv2d(fused.fused, bundle.kernel.weights);
    for (int t = 0; t < steps; ++t)
      xs[t].middleRows(2 * cols, cols).colwise() = conv_f.row(t).transpose();

    const std::vector<Matrix> hs = lstm_forward_batch(bundle.lstm, xs, &lstm_cache);
    const Matrix& h_final = hs.back();
    Matrix out = bundle.head_w * h_final;
    out.colwise() += bundle.head_b;

    const Matrix diff = out - targets;
    const double loss = diff.squaredNorm() / diff.size();
    if (!std::isfinite(loss))
      throw nn::TrainingError("two-port training diverged at epoch " +
                              std::to_string(epoch));
    result.history.push_back({epoch, loss});

    const Matrix d_out = 2.0 / diff.size() * diff;
    const Matrix d_head_w = d_out * h_final.transpose();
    const Vector d_head_b = d_out.rowwise().sum();

    std::vector<Matrix> d_h_top(steps);
    d_h_top.back() = bundle.head_w.transpose() * d_out;

    const LstmGrads lstm_grads =
        lstm_backward_batch(bundle.lstm, lstm_cache, d_h_top);

    Matrix d_conv_f(steps, cols);
    for (int t = 0; t < steps; ++t)
      d_conv_f.row(t) =
          lstm_grads.d_inputs[t].middleRows(2 * cols, cols).rowwise().sum();
    const Matrix d_fused =
        nn::conv2d_input_grad(d_conv_f, bundle.kernel.weights, grid, grid);
    const fusion::FusionGrads fusion_grads_out =
        fusion::fusion_grads(bundle.fusion_params, fusion_cache, d_fused);

    optimizer.begin_step(
        nn::lr_schedule(config.lr_start, config.lr_end, epoch - 1, config.epochs));
    optimizer.update("head.w", bundle.head_w, d_head_w);
    optimizer.update("head.b", bundle.head_b, d_head_b);
    for (std::size_t l = 0; l < bundle.lstm.layers.size(); ++l) {
      optimizer.update("lstm." + std::to_string(l) + ".w", bundle.lstm.layers[l].w,
                       lstm_grads.d_w[l]);
      optimizer.update("lstm." + std::to_string(l) + ".b", bundle.lstm.layers[l].b,
                       lstm_grads.d_b[l]);
    }
    optimizer.update("fusion.map_r.w", bundle.fusion_params.map_r.weights,
                     fusion_grads_out.d_map_r_w);
    optimizer.update("fusion.map_r.b", bundle.fusion_params.map_r.bias,
                     fusion_grads_out.d_map_r_b);
    optimizer.update("fusion.map_i.w", bundle.fusion_params.map_i.weights,
                     fusion_grads_out.d_map_i_w);
    optimizer.update("fusion.map_i.b", bundle.fusion_params.map_i.bias,
                     fusion_grads_out.d_map_i_b);
    optimizer.update("fusion.attn.w", bundle.fusion_params.attn.weights,
                     fusion_grads_out.d_attn_w);
    optimizer.update("fusion.attn.b", bundle.fusion_params.attn.bias,
                     fusion_grads_out.d_attn_b);
  }

  bundle.epochs_trained = config.epochs;
  bundle.final_loss = result.history.empty() ? 0.0 : result.history.back().loss;
  bundle.trained = true;
  return result;
}

}  // namespace dpa::pclstm
