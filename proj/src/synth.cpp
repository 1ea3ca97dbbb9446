// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#include "dipolearray/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dipolearray/packing.hpp"

namespace dpa::synth {

namespace {

void check_constraints(const std::vector<double>& spacings_m, double lambda_m,
                       const SpacingConstraints& c) {
  std::ostringstream bad;
  for (std::size_t i = 0; i < spacings_m.size(); ++i) {
    const double d = spacings_m[i] / lambda_m;
    if (d < c.d_min_lambda - 1e-12 || d > c.d_max_lambda + 1e-12)
      bad << " d" << i + 1 << "=" << d << "λ out of [" << c.d_min_lambda << ", "
          << c.d_max_lambda << "]λ;";
  }
  for (std::size_t i = 0; i + 1 < spacings_m.size(); ++i) {
    const double s = (spacings_m[i] + spacings_m[i + 1]) / lambda_m;
    if (s < c.pair_sum_min_lambda - 1e-12)
      bad << " d" << i + 1 << "+d" << i + 2 << "=" << s << "λ < "
          << c.pair_sum_min_lambda << "λ;";
  }
  if (bad.tellp() > 0)
    throw std::domain_error("spacing constraints violated:" + bad.str());
}

/// Per-step refiner input: the prior's full row p (normalized re/im blocks),
/// separations from element p to every element in wavelengths, element count.
std::vector<Vector> stage2_sequence(const pclstm::Stage2Model& model,
                                    const CMatrix& prior,
                                    const std::vector<double>& positions_m,
                                    double lambda_m) {
  const int m = static_cast<int>(prior.rows());
  const int cap = model.max_elements;
  std::vector<Vector> seq;
  seq.reserve(m);
  for (int p = 0; p < m; ++p) {
    Vector step = Vector::Zero(model.step_input_size());
    for (int q = 0; q < m; ++q) {
      step(q) = (prior(p, q).real() - model.re_mean) / model.re_std;
      step(cap + q) = (prior(p, q).imag() - model.im_mean) / model.im_std;
      step(2 * cap + q) = std::abs(positions_m[q] - positions_m[p]) / lambda_m;
    }
    step(3 * cap) = static_cast<double>(m) / cap;
    seq.push_back(std::move(step));
  }
  return seq;
}

/// Packed upper triangle in normalized units (re block then im block).
Vector pack_normalized(const pclstm::Stage2Model& model, const CMatrix& m) {
  const int n = static_cast<int>(m.rows());
  const int h = upper_tri_count(n);
  Vector out(2 * h);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const int k = upper_tri_index(i, j, n);
      out(k) = (m(i, j).real() - model.re_mean) / model.re_std;
      out(h + k) = (m(i, j).imag() - model.im_mean) / model.im_std;
    }
  return out;
}

}  // namespace

std::vector<double> sample_spacings(int m_elements, const SpacingConstraints& constraints,
                                    double lambda_m, nn::Rng& rng, int* attempts) {
  if (m_elements < 2) throw std::domain_error("sample_spacings: need at least 2 elements");
  if (lambda_m <= 0.0) throw std::domain_error("sample_spacings: wavelength must be positive");

  const int n_spacings = m_elements - 1;
  const double lo = constraints.d_min_lambda * lambda_m;
  const double hi = constraints.d_max_lambda * lambda_m;
  std::vector<double> d(n_spacings);
  int tries = 0;
  while (true) {
    ++tries;
    for (auto& v : d) v = rng.uniform(lo, hi);
    bool ok = true;
    for (int i = 0; i + 1 < n_spacings; ++i) {
      if (d[i] + d[i + 1] < constraints.pair_sum_min_lambda * lambda_m) {
        ok = false;
        break;
      }
    }
    if (ok) break;
  }
  if (attempts) *attempts = tries;
  return d;
}

Dataset gen_dataset(int n_samples, int m_elements, const DipoleSpec& dipole,
                    double frequency_hz, std::uint64_t seed, const GenOptions& options) {
  if (n_samples < 1) throw std::domain_error("gen_dataset: need at least one sample");
  if (m_elements < 2) throw std::domain_error("gen_dataset: need at least two elements");
  dipole.validate();

  const double lambda = wavelength(frequency_hz);
  nn::Rng rng(seed);
  Dataset out;
  out.seed = seed;
  out.samples.reserve(n_samples);

  int failures = 0;
  while (static_cast<int>(out.samples.size()) < n_samples) {
    std::vector<double> spacings;
    if (m_elements == 2) {
      spacings = {rng.uniform(options.two_port_lo_lambda * lambda,
                              options.two_port_hi_lambda * lambda)};
    } else {
      spacings = sample_spacings(m_elements, options.constraints, lambda, rng);
    }
    DatasetSample sample;
    sample.geometry = ArrayGeometry::from_spacings(dipole, spacings, frequency_hz);
    try {
      sample.z_port =
          mom::port_reduce(mom::assemble_impedance(sample.geometry, options.solver),
                           options.solver)
              .entries;
    } catch (const mom::SolverError& e) {
      if (options.skip_log) {
        std::ostringstream msg;
        msg << "sample " << out.samples.size() << " skipped: " << e.what();
        options.skip_log->push_back(msg.str());
      }
      if (++failures > 10 * n_samples)
        throw mom::SolverError("gen_dataset: excessive solver failures");
      continue;
    }
    out.samples.push_back(std::move(sample));
  }
  return out;
}

SynthesizedMatrix assemble_prior(const pclstm::TwoPortEvaluator& evaluator,
                                 const pclstm::ModelBundle& bundle,
                                 const std::vector<double>& spacings_m,
                                 const SpacingConstraints& constraints) {
  const double lambda = wavelength(bundle.frequency_hz);
  check_constraints(spacings_m, lambda, constraints);

  const int m = static_cast<int>(spacings_m.size()) + 1;
  std::vector<double> positions(m, 0.0);
  for (int i = 1; i < m; ++i) positions[i] = positions[i - 1] + spacings_m[i - 1];

  // One batched query: M nearest-neighbor spacings, then the in-range pairs.
  std::vector<double> queries;
  queries.reserve(m + m * (m - 1) / 2);
  for (int p = 0; p < m; ++p) {
    double nn_spacing = std::numeric_limits<double>::max();
    if (p > 0) nn_spacing = std::min(nn_spacing, spacings_m[p - 1]);
    if (p + 1 < m) nn_spacing = std::min(nn_spacing, spacings_m[p]);
    queries.push_back(nn_spacing);
  }
  std::vector<std::pair<int, int>> coupled;
  for (int p = 0; p < m; ++p)
    for (int q = p + 1; q < m; ++q) {
      const double sep = positions[q] - positions[p];
      if (sep <= constraints.cutoff_lambda * lambda) {
        coupled.emplace_back(p, q);
        queries.push_back(sep);
      }
    }

  const auto preds = evaluator.predict_batch(queries);

  SynthesizedMatrix out;
  out.reconstructed = CMatrix::Zero(m, m);
  for (int p = 0; p < m; ++p) {
    out.reconstructed(p, p) = preds[p].z11;
    out.extrapolation = out.extrapolation || preds[p].extrapolation;
  }
  for (std::size_t k = 0; k < coupled.size(); ++k) {
    const auto [p, q] = coupled[k];
    const auto& pred = preds[m + k];
    out.reconstructed(p, q) = pred.z12;
    out.reconstructed(q, p) = pred.z12;
    out.extrapolation = out.extrapolation || pred.extrapolation;
  }
  out.packed = pack_symmetric(out.reconstructed);
  return out;
}

SynthesizedMatrix synthesize_array(const pclstm::ModelBundle& bundle,
                                   const std::vector<double>& spacings_m,
                                   const DipoleSpec& dipole, double frequency_hz,
                                   const SpacingConstraints& constraints) {
  if (!bundle.stage2.trained)
    throw std::logic_error("synthesize_array: bundle has no trained refinement stage");
  if (std::abs(dipole.length_m - bundle.dipole.length_m) > 1e-12 ||
      std::abs(dipole.radius_m - bundle.dipole.radius_m) > 1e-12 ||
      std::abs(frequency_hz - bundle.frequency_hz) > 1e-3)
    throw std::domain_error(
        "synthesize_array: bundle was trained for a different dipole/frequency");
  const int m = static_cast<int>(spacings_m.size()) + 1;
  if (m > bundle.stage2.max_elements)
    throw std::domain_error("synthesize_array: layout exceeds the trained element cap");

  const pclstm::TwoPortEvaluator evaluator(bundle);
  SynthesizedMatrix prior = assemble_prior(evaluator, bundle, spacings_m, constraints);

  const double lambda = wavelength(frequency_hz);
  std::vector<double> positions(m, 0.0);
  for (int i = 1; i < m; ++i) positions[i] = positions[i - 1] + spacings_m[i - 1];

  const pclstm::Stage2Model& s2 = bundle.stage2;
  const auto seq = stage2_sequence(s2, prior.reconstructed, positions, lambda);
  std::vector<Matrix> inputs(seq.begin(), seq.end());
  const auto hs = pclstm::lstm_forward_batch(s2.lstm, inputs);

  Vector packed_z = pack_normalized(s2, prior.reconstructed);
  const int h = upper_tri_count(m);
  const int hidden = s2.lstm.hidden;
  for (int p = 0; p < m; ++p) {
    for (int q = p; q < m; ++q) {
      Vector dec_in(hidden + pclstm::Stage2Model::kSlotFeatures);
      dec_in.head(hidden) = hs[p].col(0);
      dec_in.tail(pclstm::Stage2Model::kSlotFeatures) = pclstm::stage2_slot_features(
          s2, prior.reconstructed(p, q), (positions[q] - positions[p]) / lambda,
          p == q, m);
      const Vector res =
          nn::dense_forward(s2.dec_out, nn::dense_forward(s2.dec_hidden, dec_in));
      const int k = upper_tri_index(p, q, m);
      packed_z(k) += res(0);
      packed_z(h + k) += res(1);
    }
  }

  SynthesizedMatrix out;
  out.extrapolation = prior.extrapolation;
  out.packed.resize(2 * h);
  for (int k = 0; k < h; ++k) {
    out.packed(k) = packed_z(k) * s2.re_std + s2.re_mean;
    out.packed(h + k) = packed_z(h + k) * s2.im_std + s2.im_mean;
  }
  out.reconstructed = unpack_symmetric(out.packed, m);
  return out;
}

SynthesisTrainResult train_synthesis(pclstm::ModelBundle& bundle,
                                     const std::map<int, Dataset>& train_sets,
                                     const SynthesisTrainConfig& config) {
  if (!bundle.trained)
    throw std::logic_error("train_synthesis: two-port bundle must be trained first");
  if (train_sets.empty()) throw std::domain_error("train_synthesis: no datasets");

  const double lambda = wavelength(bundle.frequency_hz);
  pclstm::Stage2Model& s2 = bundle.stage2;
  s2.max_elements = config.max_elements;

  // Global re/im channel statistics over every training target entry.
  double re_sum = 0.0, im_sum = 0.0;
  long count = 0;
  for (const auto& [m, set] : train_sets) {
    if (m > config.max_elements)
      throw std::domain_error("train_synthesis: dataset exceeds the element cap");
    for (const auto& sample : set.samples) {
      for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
          re_sum += sample.z_port(i, j).real();
          im_sum += sample.z_port(i, j).imag();
          ++count;
        }
    }
  }
  s2.re_mean = re_sum / count;
  s2.im_mean = im_sum / count;
  double re_var = 0.0, im_var = 0.0;
  for (const auto& [m, set] : train_sets)
    for (const auto& sample : set.samples)
      for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
          re_var += std::pow(sample.z_port(i, j).real() - s2.re_mean, 2);
          im_var += std::pow(sample.z_port(i, j).imag() - s2.im_mean, 2);
        }
  s2.re_std = std::max(std::sqrt(re_var / count), 1e-12);
  s2.im_std = std::max(std::sqrt(im_var / count), 1e-12);

  nn::Rng rng(config.seed);
  const int feat = pclstm::Stage2Model::kSlotFeatures;
  s2.lstm = pclstm::LstmStack::init(s2.step_input_size(), config.hidden,
                                    config.lstm_layers, rng);
  s2.dec_hidden = nn::DenseLayer::init(config.decoder_width, config.hidden + feat,
                                       nn::Activation::Tanh, rng);
  s2.dec_out =
      nn::DenseLayer::init(2, config.decoder_width, nn::Activation::Identity, rng);
  // Zero-initialized residual output: the untrained refiner emits the prior.
  s2.dec_out.weights.setZero();

  const pclstm::TwoPortEvaluator evaluator(bundle);

  // Precompute sequences, per-slot decoder features, and residual targets.
  // Decoder columns are ordered slot-major: column k*B + b is offset k of
  // sample b.
  struct Group {
    int m = 0;
    std::vector<Matrix> inputs;         // per step, in x B
    std::vector<Matrix> slot_feats;     // per step, feat x (M-p)*B
    std::vector<Matrix> resid_targets;  // per step, 2 x (M-p)*B
    long valid_per_sample = 0;
  };
  std::vector<Group> groups;

  for (const auto& [m, set] : train_sets) {
    Group group;
    group.m = m;
    const int batch = static_cast<int>(set.samples.size());
    group.valid_per_sample = m * (m + 1);
    group.inputs.assign(m, Matrix::Zero(s2.step_input_size(), batch));
    for (int p = 0; p < m; ++p) {
      group.slot_feats.emplace_back(feat, (m - p) * batch);
      group.resid_targets.emplace_back(2, (m - p) * batch);
    }

    for (int b = 0; b < batch; ++b) {
      const auto& sample = set.samples[b];
      const SynthesizedMatrix prior =
          assemble_prior(evaluator, bundle, sample.geometry.spacings());
      const auto& positions = sample.geometry.positions_m;
      const auto seq = stage2_sequence(s2, prior.reconstructed, positions, lambda);
      for (int p = 0; p < m; ++p) {
        group.inputs[p].col(b) = seq[p];
        for (int q = p; q < m; ++q) {
          const int col = (q - p) * batch + b;
          group.slot_feats[p].col(col) = pclstm::stage2_slot_features(
              s2, prior.reconstructed(p, q), (positions[q] - positions[p]) / lambda,
              p == q, m);
          group.resid_targets[p](0, col) =
              (sample.z_port(p, q).real() - prior.reconstructed(p, q).real()) /
              s2.re_std;
          group.resid_targets[p](1, col) =
              (sample.z_port(p, q).imag() - prior.reconstructed(p, q).imag()) /
              s2.im_std;
        }
      }
    }
    groups.push_back(std::move(group));
  }

  SynthesisTrainResult result;
  nn::Adam optimizer;
  pclstm::LstmCache cache;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<Matrix> d_w_acc;
    std::vector<Vector> d_b_acc;
    Matrix d_dec_hidden_w = Matrix::Zero(s2.dec_hidden.weights.rows(),
                                         s2.dec_hidden.weights.cols());
    Vector d_dec_hidden_b = Vector::Zero(s2.dec_hidden.bias.size());
    Matrix d_dec_out_w =
        Matrix::Zero(s2.dec_out.weights.rows(), s2.dec_out.weights.cols());
    Vector d_dec_out_b = Vector::Zero(s2.dec_out.bias.size());
    for (const auto& layer : s2.lstm.layers) {
      d_w_acc.push_back(Matrix::Zero(layer.w.rows(), layer.w.cols()));
      d_b_acc.push_back(Vector::Zero(layer.b.size()));
    }

    for (auto& group : groups) {
      const int batch = static_cast<int>(group.inputs.front().cols());
      const auto hs = pclstm::lstm_forward_batch(s2.lstm, group.inputs, &cache);

      const long valid_total = group.valid_per_sample * batch;
      double loss = 0.0;
      std::vector<Matrix> d_h(group.m);
      for (int p = 0; p < group.m; ++p) {
        const int slots = group.m - p;
        Matrix dec_in(config.hidden + feat, slots * batch);
        for (int k = 0; k < slots; ++k)
          dec_in.block(0, k * batch, config.hidden, batch) = hs[p];
        dec_in.bottomRows(feat) = group.slot_feats[p];

        Matrix pre_hidden, pre_out;
        const Matrix hid = nn::dense_forward_batch(s2.dec_hidden, dec_in, &pre_hidden);
        const Matrix out = nn::dense_forward_batch(s2.dec_out, hid, &pre_out);

        const Matrix diff = out - group.resid_targets[p];
        loss += diff.squaredNorm();
        const Matrix d_out = (2.0 / valid_total) * diff;

        Matrix dw, d_hid, d_in;
        Vector db;
        nn::dense_backward_batch(s2.dec_out, hid, pre_out, d_out, dw, db, d_hid);
        d_dec_out_w += dw;
        d_dec_out_b += db;
        nn::dense_backward_batch(s2.dec_hidden, dec_in, pre_hidden, d_hid, dw, db, d_in);
        d_dec_hidden_w += dw;
        d_dec_hidden_b += db;

        d_h[p] = Matrix::Zero(config.hidden, batch);
        for (int k = 0; k < slots; ++k)
          d_h[p] += d_in.block(0, k * batch, config.hidden, batch);
      }
      loss /= valid_total;
      if (!std::isfinite(loss))
        throw nn::TrainingError("synthesis training diverged at epoch " +
                                std::to_string(epoch));
      result.histories[group.m].push_back({epoch, loss});

      const auto grads = pclstm::lstm_backward_batch(s2.lstm, cache, d_h);
      for (std::size_t l = 0; l < d_w_acc.size(); ++l) {
        d_w_acc[l] += grads.d_w[l];
        d_b_acc[l] += grads.d_b[l];
      }
    }

    const double scale = 1.0 / groups.size();
    optimizer.begin_step(
        nn::lr_schedule(config.lr_start, config.lr_end, epoch - 1, config.epochs));
    optimizer.update("stage2.dec_hidden.w", s2.dec_hidden.weights,
                     Matrix(scale * d_dec_hidden_w));
    optimizer.update("stage2.dec_hidden.b", s2.dec_hidden.bias,
                     Vector(scale * d_dec_hidden_b));
    optimizer.update("stage2.dec_out.w", s2.dec_out.weights, Matrix(scale * d_dec_out_w));
    optimizer.update("stage2.dec_out.b", s2.dec_out.bias, Vector(scale * d_dec_out_b));
    for (std::size_t l = 0; l < d_w_acc.size(); ++l) {
      optimizer.update("stage2.lstm." + std::to_string(l) + ".w", s2.lstm.layers[l].w,
                       Matrix(scale * d_w_acc[l]));
      optimizer.update("stage2.lstm." + std::to_string(l) + ".b", s2.lstm.layers[l].b,
                       Vector(scale * d_b_acc[l]));
    }
  }

  for (auto& [m, history] : result.histories)
    result.final_losses[m] = history.empty() ? 0.0 : history.back().loss;
  s2.trained = true;
  return result;
}

double relative_rms(const Vector& pred_packed, const Vector& true_packed) {
  if (pred_packed.size() != true_packed.size())
    throw std::invalid_argument("relative_rms: length mismatch");
  const double denom = true_packed.norm();
  if (denom == 0.0) throw std::domain_error("relative_rms: zero reference");
  return (pred_packed - true_packed).norm() / denom;
}

}  // namespace dpa::synth
