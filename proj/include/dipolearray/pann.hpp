// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#ifndef DIPOLEARRAY_PANN_HPP
#define DIPOLEARRAY_PANN_HPP

#include <utility>
#include <vector>

#include "dipolearray/geometry.hpp"
#include "dipolearray/nn.hpp"

namespace dpa::pann {

using nn::Matrix;
using nn::Vector;

/// Per-epoch record of the adaptive real/imaginary loss balance.
struct EpochRecord {
  int epoch = 0;
  double loss_r = 0.0;
  double loss_i = 0.0;
  double w_r = 0.5;
  double w_i = 0.5;
  double total = 0.0;
};

struct AdaptiveLossState {
  double alpha = 0.5;
  double omega_r = 0.5;
  double omega_i = 0.5;
  std::vector<EpochRecord> history;
};

/// Rebalanced weights: the larger-loss component gets
/// alpha + (1-alpha)*|L_r-L_i|/(L_r+L_i), the other the complement.
/// Ties (including both zero) give (0.5, 0.5).
std::pair<double, double> adaptive_weights(double loss_r, double loss_i, double alpha);

/// Canonical thin-wire diagonal offset in segment-length units, 0.008*N
/// (wire radius over dipole length of the reference dipole).
double default_diag_delta(int segments);

/// Upper triangle (diagonal included) of the frequency-factored Green matrix
/// on a uniform grid, split into (real, imaginary) vectors of length
/// N(N+1)/2. diag_delta is the thin-wire self-term offset in segment units.
std::pair<Vector, Vector> analytic_targets(int segments, double diag_delta);
std::pair<Vector, Vector> analytic_targets(int segments);

/// Weighted loss w_r*L_r + w_i*L_i, where pred/target hold real halves first.
double total_loss(const Vector& pred, const Vector& target, const AdaptiveLossState& state);

/// Dense regression network for the frequency-factored Green targets.
/// Inputs (radius, length, frequency) are normalized with stored constants.
struct PannModel {
  int segments = 0;
  std::vector<nn::DenseLayer> layers;
  Vector in_mean;  // size 3
  Vector in_std;   // size 3
  Vector in_lo;    // raw-unit training range, for extrapolation warnings
  Vector in_hi;
  double diag_delta = 0.0;
  std::uint64_t seed = 0;
  int epochs_trained = 0;
  double final_total = 0.0;
  double lr_start = 0.0;  // optimizer settings echoed into checkpoints
  double lr_end = 0.0;
  double momentum = 0.0;

  int out_half() const { return segments * (segments + 1) / 2; }
  Vector normalize_input(double radius_m, double length_m, double frequency_hz) const;
  Vector forward(const Vector& normalized) const;
};

struct TrainConfig {
  int segments = 16;
  double radius_m = 5.0e-4;
  double length_m = 6.25e-2;
  double frequency_hz = kSpeedOfLight / (2.0 * 6.25e-2);
  int epochs = 1200;
  std::uint64_t seed = 42;
  double alpha = 0.5;
  bool adaptive = true;       // false: fixed (0.5, 0.5) weights
  double lr_start = 2e-3;
  double lr_end = 2e-3;
  double momentum = 0.9;
  int hidden_width = 128;
  int hidden_layers = 3;
};

struct TrainResult {
  PannModel model;
  AdaptiveLossState state;
};

/// Unsupervised training against the analytic targets. Deterministic for a
/// fixed config. Throws nn::TrainingError if the loss turns non-finite.
TrainResult train_pann(const TrainConfig& config);

struct Prediction {
  CVector upper;        // complex upper triangle, length N(N+1)/2
  bool extrapolation = false;
};

Prediction pann_predict(const PannModel& model, double radius_m, double length_m,
                        double frequency_hz);

}  // namespace dpa::pann

#endif  // DIPOLEARRAY_PANN_HPP
