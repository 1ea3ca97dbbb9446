// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#ifndef DIPOLEARRAY_SYNTH_HPP
#define DIPOLEARRAY_SYNTH_HPP

#include <map>
#include <string>
#include <vector>

#include "dipolearray/dataset.hpp"
#include "dipolearray/mom.hpp"
#include "dipolearray/pclstm.hpp"

namespace dpa::synth {

using nn::Matrix;
using nn::Vector;

/// Layout constraints for non-uniform arrays, in wavelengths:
/// every spacing in [d_min, d_max], consecutive pairs sum to >= pair_sum_min.
struct SpacingConstraints {
  double d_min_lambda = 0.1;
  double d_max_lambda = 0.5;
  double pair_sum_min_lambda = 0.6;
  double cutoff_lambda = 0.6;
};

/// Rejection sampling with uniform proposals; whole layouts are redrawn until
/// the pair constraint holds. attempts (optional) reports the number of
/// proposals consumed.
std::vector<double> sample_spacings(int m_elements, const SpacingConstraints& constraints,
                                    double lambda_m, nn::Rng& rng, int* attempts = nullptr);

struct GenOptions {
  SpacingConstraints constraints;
  mom::SolveOptions solver;
  /// Two-element datasets draw a single spacing uniformly from this range
  /// (wavelengths) so the model covers both Table-style close spacings and
  /// the far-field tail.
  double two_port_lo_lambda = 0.04;
  double two_port_hi_lambda = 1.0;
  /// Failed solves are recorded here and redrawn, never silently dropped.
  std::vector<std::string>* skip_log = nullptr;
};

/// Random constrained layouts with solver-computed port impedance targets.
/// Deterministic under the seed.
Dataset gen_dataset(int n_samples, int m_elements, const DipoleSpec& dipole,
                    double frequency_hz, std::uint64_t seed, const GenOptions& options = {});

/// Upper-triangle packed synthesis output: first M(M+1)/2 reals, then
/// imaginary parts, plus the mirrored full matrix.
struct SynthesizedMatrix {
  Vector packed;
  CMatrix reconstructed;
  bool extrapolation = false;
};

/// Pairwise-predicted prior: diagonal from the two-port self impedance at the
/// nearest-neighbor spacing, mutual entries from the two-port model up to the
/// cutoff, exact zeros beyond it.
SynthesizedMatrix assemble_prior(const pclstm::TwoPortEvaluator& evaluator,
                                 const pclstm::ModelBundle& bundle,
                                 const std::vector<double>& spacings_m,
                                 const SpacingConstraints& constraints = {});

/// Prior plus the trained second-stage refinement. Requires bundle.stage2.
SynthesizedMatrix synthesize_array(const pclstm::ModelBundle& bundle,
                                   const std::vector<double>& spacings_m,
                                   const DipoleSpec& dipole, double frequency_hz,
                                   const SpacingConstraints& constraints = {});

struct SynthesisTrainConfig {
  int epochs = 600;
  double lr_start = 3e-3;
  double lr_end = 3e-4;
  std::uint64_t seed = 42;
  int hidden = 96;
  int lstm_layers = 2;
  int decoder_width = 48;
  int max_elements = 30;
};

struct SynthesisTrainResult {
  std::map<int, std::vector<pclstm::EpochLoss>> histories;  // keyed by M
  std::map<int, double> final_losses;
};

/// Trains the variable-length second-stage refiner on packed targets from the
/// given per-size datasets (one shared model). Writes bundle.stage2.
SynthesisTrainResult train_synthesis(pclstm::ModelBundle& bundle,
                                     const std::map<int, Dataset>& train_sets,
                                     const SynthesisTrainConfig& config);

/// Relative L2 distance between packed vectors: ||pred - truth|| / ||truth||.
double relative_rms(const Vector& pred_packed, const Vector& true_packed);

}  // namespace dpa::synth

#endif  // DIPOLEARRAY_SYNTH_HPP
