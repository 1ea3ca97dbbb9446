// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#include <doctest.h>

#include <cmath>

#include "dipolearray/pclstm.hpp"
#include "dipolearray/synth.hpp"
#include "test_util.hpp"

using namespace dpa;
using nn::Matrix;
using nn::Vector;
using pclstm::LstmLayer;
using pclstm::LstmStack;

namespace {

LstmStack random_stack(int input, int hidden, int layers, std::uint64_t seed) {
  nn::Rng rng(seed);
  auto stack = LstmStack::init(input, hidden, layers, rng);
  // Perturb the biases so no gate sits at its initialization point.
  for (auto& layer : stack.layers)
    for (int i = 0; i < layer.b.size(); ++i) layer.b(i) += rng.uniform(-0.3, 0.3);
  return stack;
}

std::vector<Vector> random_sequence(int steps, int width, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::vector<Vector> seq;
  for (int t = 0; t < steps; ++t) {
    Vector x(width);
    for (int i = 0; i < width; ++i) x(i) = rng.uniform(-1, 1);
    seq.push_back(x);
  }
  return seq;
}

/// Scalar reimplementation of the gate algebra, independent of the library
/// path, returning every per-step quantity.
struct ScalarTrace {
  std::vector<Vector> f, i, g, o, c, h;
};

ScalarTrace scalar_unroll(const LstmLayer& layer, int hidden,
                          const std::vector<Vector>& xs) {
  ScalarTrace trace;
  Vector h = Vector::Zero(hidden), c = Vector::Zero(hidden);
  for (const auto& x : xs) {
    const int in = static_cast<int>(x.size());
    Vector f(hidden), i_g(hidden), g(hidden), o(hidden);
    for (int k = 0; k < hidden; ++k) {
      double pf = layer.b(k), pi = layer.b(hidden + k), pg = layer.b(2 * hidden + k),
             po = layer.b(3 * hidden + k);
      for (int c2 = 0; c2 < in; ++c2) {
        pf += layer.w(k, c2) * x(c2);
        pi += layer.w(hidden + k, c2) * x(c2);
        pg += layer.w(2 * hidden + k, c2) * x(c2);
        po += layer.w(3 * hidden + k, c2) * x(c2);
      }
      for (int c2 = 0; c2 < hidden; ++c2) {
        pf += layer.w(k, in + c2) * h(c2);
        pi += layer.w(hidden + k, in + c2) * h(c2);
        pg += layer.w(2 * hidden + k, in + c2) * h(c2);
        po += layer.w(3 * hidden + k, in + c2) * h(c2);
      }
      f(k) = 1.0 / (1.0 + std::exp(-pf));
      i_g(k) = 1.0 / (1.0 + std::exp(-pi));
      g(k) = std::tanh(pg);
      o(k) = 1.0 / (1.0 + std::exp(-po));
    }
    Vector c_new(hidden), h_new(hidden);
    for (int k = 0; k < hidden; ++k) {
      c_new(k) = f(k) * c(k) + i_g(k) * g(k);
      h_new(k) = o(k) * std::tanh(c_new(k));
    }
    trace.f.push_back(f);
    trace.i.push_back(i_g);
    trace.g.push_back(g);
    trace.o.push_back(o);
    trace.c.push_back(c_new);
    trace.h.push_back(h_new);
    c = c_new;
    h = h_new;
  }
  return trace;
}

}  // namespace

TEST_CASE("physics kernel matches the hand construction at side 3") {
  const auto kernel = pclstm::build_kernel(3, 1.0);
  const double e1 = std::exp(-1.0), e2 = std::exp(-2.0);
  const double sum = 1.0 + 2.0 * 0.5 + 2.0 * (e2 / 2.0) + 4.0 * e1;
  CHECK(sum == doctest::Approx(3.6068).epsilon(1e-4));
  CHECK(kernel.weights(1, 1) == doctest::Approx(1.0 / sum).epsilon(1e-12));
  CHECK(kernel.weights(1, 1) == doctest::Approx(0.2772).epsilon(1e-3));
  CHECK(kernel.weights(0, 0) == doctest::Approx(0.5 / sum).epsilon(1e-12));
  CHECK(kernel.weights(0, 2) == doctest::Approx(e2 / 2.0 / sum).epsilon(1e-12));
  CHECK(kernel.weights(0, 1) == doctest::Approx(e1 / sum).epsilon(1e-12));
}

TEST_CASE("physics kernel invariants") {
  for (int side : {3, 5, 7}) {
    for (double decay : {0.5, 1.0, 2.5}) {
      const auto kernel = pclstm::build_kernel(side, decay);
      CHECK(std::abs(kernel.weights.sum() - 1.0) <= 1e-12);
      for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
          CHECK(kernel.weights(i, j) == kernel.weights(side - 1 - i, side - 1 - j));
      // Center carries the largest weight.
      CHECK(kernel.weights(side / 2, side / 2) == kernel.weights.maxCoeff());
    }
  }
  CHECK_THROWS_AS(pclstm::build_kernel(4, 1.0), std::domain_error);
  CHECK_THROWS_AS(pclstm::build_kernel(1, 1.0), std::domain_error);
  CHECK_THROWS_AS(pclstm::build_kernel(3, 0.0), std::domain_error);
}

TEST_CASE("strong decay concentrates the kernel on the matrix diagonal") {
  const auto kernel = pclstm::build_kernel(5, 50.0);
  double diag_mass = 0.0;
  for (int i = 0; i < 5; ++i) diag_mass += kernel.weights(i, i);
  CHECK(diag_mass > 0.999);
}

TEST_CASE("lstm step zero algebra and memory limit") {
  const int hidden = 4, in = 3;
  LstmLayer layer;
  layer.w = Matrix::Zero(4 * hidden, in + hidden);
  layer.b = Vector::Zero(4 * hidden);

  Vector x = Vector::Ones(in);
  auto [h, c] = pclstm::lstm_step(layer, hidden, x, Vector::Zero(hidden),
                                  Vector::Zero(hidden));
  CHECK(h.norm() == 0.0);
  CHECK(c.norm() == 0.0);

  // Saturated forget gate, closed input gate: the cell state passes through.
  layer.b.head(hidden).setConstant(30.0);
  layer.b.segment(hidden, hidden).setConstant(-30.0);
  Vector c_prev(hidden);
  c_prev << 0.4, -0.2, 0.9, -1.3;
  std::tie(h, c) = pclstm::lstm_step(layer, hidden, x, Vector::Zero(hidden), c_prev);
  CHECK((c - c_prev).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lstm step matches the scalar re-implementation") {
  nn::Rng rng(31);
  const int hidden = 5, in = 4;
  const auto stack = random_stack(in, hidden, 1, 31);
  Vector x(in), h_prev(hidden), c_prev(hidden);
  for (int i = 0; i < in; ++i) x(i) = rng.uniform(-1, 1);
  for (int i = 0; i < hidden; ++i) {
    h_prev(i) = rng.uniform(-1, 1);
    c_prev(i) = rng.uniform(-1, 1);
  }
  const auto [h, c] = pclstm::lstm_step(stack.layers[0], hidden, x, h_prev, c_prev);

  // One manual step starting from (h_prev, c_prev).
  LstmLayer shifted = stack.layers[0];
  ScalarTrace trace;
  {
    Vector f(hidden), ig(hidden), g(hidden), o(hidden);
    for (int k = 0; k < hidden; ++k) {
      double pf = shifted.b(k), pi = shifted.b(hidden + k),
             pg = shifted.b(2 * hidden + k), po = shifted.b(3 * hidden + k);
      for (int c2 = 0; c2 < in; ++c2) {
        pf += shifted.w(k, c2) * x(c2);
        pi += shifted.w(hidden + k, c2) * x(c2);
        pg += shifted.w(2 * hidden + k, c2) * x(c2);
        po += shifted.w(3 * hidden + k, c2) * x(c2);
      }
      for (int c2 = 0; c2 < hidden; ++c2) {
        pf += shifted.w(k, in + c2) * h_prev(c2);
        pi += shifted.w(hidden + k, in + c2) * h_prev(c2);
        pg += shifted.w(2 * hidden + k, in + c2) * h_prev(c2);
        po += shifted.w(3 * hidden + k, in + c2) * h_prev(c2);
      }
      f(k) = 1.0 / (1.0 + std::exp(-pf));
      ig(k) = 1.0 / (1.0 + std::exp(-pi));
      g(k) = std::tanh(pg);
      o(k) = 1.0 / (1.0 + std::exp(-po));
    }
    for (int k = 0; k < hidden; ++k) {
      const double c_new = f(k) * c_prev(k) + ig(k) * g(k);
      CHECK(std::abs(c(k) - c_new) < 1e-12);
      CHECK(std::abs(h(k) - o(k) * std::tanh(c_new)) < 1e-12);
    }
  }
}

TEST_CASE("lstm forward handles any sequence length with the same parameters") {
  const auto stack = random_stack(6, 8, 2, 32);
  CHECK_THROWS_AS(pclstm::lstm_forward(stack, {}), std::domain_error);

  const auto seq1 = random_sequence(1, 6, 41);
  const auto [h_step, c_step] = pclstm::lstm_step(
      stack.layers[0], 8, seq1[0], Vector::Zero(8), Vector::Zero(8));
  const auto [h_top, c_top] =
      pclstm::lstm_step(stack.layers[1], 8, h_step, Vector::Zero(8), Vector::Zero(8));
  CHECK((pclstm::lstm_forward(stack, seq1) - h_top).cwiseAbs().maxCoeff() < 1e-12);

  for (int len : {10, 30}) {
    const Vector h = pclstm::lstm_forward(stack, random_sequence(len, 6, 50 + len));
    CHECK(h.size() == 8);
    CHECK(h.allFinite());
  }
}

TEST_CASE("unrolled cell state equals the product-sum form") {
  const auto stack = random_stack(3, 4, 1, 33);
  const auto xs = random_sequence(3, 3, 34);

  // Scalar gate trace feeding both the recursion and the explicit sum.
  const ScalarTrace trace = scalar_unroll(stack.layers[0], 4, xs);
  Vector product_sum = Vector::Zero(4);
  for (int tau = 0; tau < 3; ++tau) {
    Vector term = trace.i[tau].cwiseProduct(trace.g[tau]);
    for (int k = tau + 1; k < 3; ++k) term = term.cwiseProduct(trace.f[k]);
    product_sum += term;
  }
  CHECK((product_sum - trace.c.back()).cwiseAbs().maxCoeff() < 1e-12);

  // And the library forward agrees with the scalar trace.
  const Vector h = pclstm::lstm_forward(stack, xs);
  CHECK((h - trace.h.back()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("batched forward equals per-sequence scalar runs") {
  const auto stack = random_stack(5, 6, 3, 35);
  const int steps = 4, batch = 3;
  std::vector<std::vector<Vector>> sequences;
  for (int b = 0; b < batch; ++b) sequences.push_back(random_sequence(steps, 5, 60 + b));

  std::vector<Matrix> xs(steps, Matrix(5, batch));
  for (int t = 0; t < steps; ++t)
    for (int b = 0; b < batch; ++b) xs[t].col(b) = sequences[b][t];

  const auto tops = pclstm::lstm_forward_batch(stack, xs);
  for (int b = 0; b < batch; ++b) {
    const Vector h = pclstm::lstm_forward(stack, sequences[b]);
    CHECK((tops.back().col(b) - h).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("lstm gradients match central finite differences") {
  const int in = 3, hidden = 8, layers = 2, steps = 4;
  auto stack = random_stack(in, hidden, layers, 36);
  const auto seq = random_sequence(steps, in, 70);
  nn::Rng rng(37);
  Vector probe(hidden);
  for (int i = 0; i < hidden; ++i) probe(i) = rng.uniform(-1, 1);

  std::vector<Matrix> xs(steps);
  for (int t = 0; t < steps; ++t) xs[t] = seq[t];

  auto loss = [&]() {
    return probe.dot(pclstm::lstm_forward_batch(stack, xs).back().col(0));
  };

  pclstm::LstmCache cache;
  pclstm::lstm_forward_batch(stack, xs, &cache);
  std::vector<Matrix> d_h(steps, Matrix::Zero(hidden, 1));
  d_h.back() = probe;
  const auto grads = pclstm::lstm_backward_batch(stack, cache, d_h);

  for (int l = 0; l < layers; ++l) {
    Matrix gw = grads.d_w[l];
    CHECK(testutil::fd_max_rel_err(stack.layers[l].w, gw, loss) <= 1e-4);
    Vector gb = grads.d_b[l];
    CHECK(testutil::fd_max_rel_err_vec(stack.layers[l].b, gb, loss) <= 1e-4);
  }
}

TEST_CASE("input gradients flow through the batched backward") {
  const int in = 4, hidden = 6, steps = 3;
  auto stack = random_stack(in, hidden, 2, 38);
  auto xs_vec = random_sequence(steps, in, 80);
  std::vector<Matrix> xs(steps);
  for (int t = 0; t < steps; ++t) xs[t] = xs_vec[t];
  nn::Rng rng(39);
  Vector probe(hidden);
  for (int i = 0; i < hidden; ++i) probe(i) = rng.uniform(-1, 1);

  pclstm::LstmCache cache;
  pclstm::lstm_forward_batch(stack, xs, &cache);
  std::vector<Matrix> d_h(steps, Matrix::Zero(hidden, 1));
  d_h.back() = probe;
  const auto grads = pclstm::lstm_backward_batch(stack, cache, d_h);

  // Finite differences against the first step's input.
  for (int coord = 0; coord < in; ++coord) {
    const double h_step = 1e-5;
    const double saved = xs[0](coord, 0);
    xs[0](coord, 0) = saved + h_step;
    const double up = probe.dot(pclstm::lstm_forward_batch(stack, xs).back().col(0));
    xs[0](coord, 0) = saved - h_step;
    const double down = probe.dot(pclstm::lstm_forward_batch(stack, xs).back().col(0));
    xs[0](coord, 0) = saved;
    const double numeric = (up - down) / (2.0 * h_step);
    const double analytic = grads.d_inputs[0](coord, 0);
    CHECK(std::abs(numeric - analytic) <=
          1e-4 * std::max({std::abs(numeric), std::abs(analytic), 1e-7}));
  }
}

TEST_CASE("stage2 slot features expose the pair separation basis") {
  pclstm::Stage2Model model;
  model.re_mean = 10.0;
  model.re_std = 2.0;
  model.im_mean = -5.0;
  model.im_std = 4.0;
  model.max_elements = 30;
  const Vector f =
      pclstm::stage2_slot_features(model, cdouble{12.0, -1.0}, 0.75, false, 10);
  CHECK(f(0) == doctest::Approx(1.0));
  CHECK(f(1) == doctest::Approx(1.0));
  CHECK(f(2) == doctest::Approx(0.75));
  CHECK(f(3) == doctest::Approx(std::cos(1.5 * kPi)));
  CHECK(f(4) == doctest::Approx(std::sin(1.5 * kPi)));
  CHECK(f(5) == doctest::Approx(1.0 / 0.875));
  CHECK(f(6) == 0.0);
  CHECK(f(7) == doctest::Approx(10.0 / 30.0));
}

TEST_CASE("two-port training smoke: determinism, descent, symmetry") {
  const DipoleSpec dipole{6.25e-2, 5e-4, 4};  // tiny grid for speed
  const double f = 2.4e9;
  const auto dataset = synth::gen_dataset(8, 2, dipole, f, 42);

  pclstm::TwoPortTrainConfig cfg;
  cfg.epochs = 30;
  cfg.hidden = 8;
  cfg.lstm_layers = 2;
  cfg.pann_epochs = 120;

  const auto a = pclstm::train_two_port(dataset, cfg);
  const auto b = pclstm::train_two_port(dataset, cfg);
  REQUIRE(a.history.size() == 30);
  for (std::size_t i = 0; i < a.history.size(); ++i)
    CHECK(a.history[i].loss == b.history[i].loss);
  CHECK(a.history.back().loss < a.history.front().loss);

  const auto pred = pclstm::predict_two_port(a.bundle, 0.3 * wavelength(f),
                                             dipole.length_m, dipole.radius_m, f);
  CHECK(pred.reconstructed(0, 1) == pred.reconstructed(1, 0));
  CHECK(pred.reconstructed(0, 0) == pred.z11);

  // Spacings outside the sampled range are flagged.
  const auto far = pclstm::predict_two_port(a.bundle, 2.0 * wavelength(f),
                                            dipole.length_m, dipole.radius_m, f);
  CHECK(far.extrapolation);

  // The evaluator shortcut matches the full pipeline at the bundle geometry.
  const pclstm::TwoPortEvaluator evaluator(a.bundle);
  const auto quick = evaluator.predict(0.3 * wavelength(f));
  CHECK(std::abs(quick.z11 - pred.z11) < 1e-9 * std::abs(pred.z11));
  CHECK(std::abs(quick.z12 - pred.z12) < 1e-9 * std::abs(pred.z12));
}

TEST_CASE("zero-epoch two-port training returns the initialized bundle") {
  const DipoleSpec dipole{6.25e-2, 5e-4, 4};
  const auto dataset = synth::gen_dataset(4, 2, dipole, 2.4e9, 7);
  pclstm::TwoPortTrainConfig cfg;
  cfg.epochs = 0;
  cfg.hidden = 8;
  cfg.lstm_layers = 2;
  cfg.pann_epochs = 50;
  const auto result = pclstm::train_two_port(dataset, cfg);
  CHECK(result.history.empty());
  CHECK(result.bundle.trained);
  CHECK(result.bundle.final_loss == 0.0);
}

TEST_CASE("target normalization round-trips") {
  const DipoleSpec dipole{6.25e-2, 5e-4, 4};
  const auto dataset = synth::gen_dataset(6, 2, dipole, 2.4e9, 9);
  pclstm::TwoPortTrainConfig cfg;
  cfg.epochs = 1;
  cfg.hidden = 8;
  cfg.lstm_layers = 2;
  cfg.pann_epochs = 50;
  const auto result = pclstm::train_two_port(dataset, cfg);
  const auto& bundle = result.bundle;
  for (const auto& sample : dataset.samples) {
    Vector t(6);
    t << sample.z_port(0, 0).real(), sample.z_port(0, 0).imag(),
        sample.z_port(0, 1).real(), sample.z_port(0, 1).imag(),
        sample.z_port(1, 1).real(), sample.z_port(1, 1).imag();
    const Vector z = (t - bundle.target_mean).cwiseQuotient(bundle.target_std);
    const Vector back = z.cwiseProduct(bundle.target_std) + bundle.target_mean;
    CHECK((back - t).cwiseAbs().maxCoeff() < 1e-12 * t.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("training rejects malformed datasets") {
  pclstm::TwoPortTrainConfig cfg;
  Dataset empty;
  CHECK_THROWS_AS(pclstm::train_two_port(empty, cfg), std::domain_error);

  const DipoleSpec dipole{6.25e-2, 5e-4, 4};
  auto three = synth::gen_dataset(1, 3, dipole, 2.4e9, 3);
  CHECK_THROWS_AS(pclstm::train_two_port(three, cfg), std::domain_error);
}
