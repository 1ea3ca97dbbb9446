// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#ifndef DIPOLEARRAY_PCLSTM_HPP
#define DIPOLEARRAY_PCLSTM_HPP

#include <optional>
#include <string>
#include <vector>

#include "dipolearray/dataset.hpp"
#include "dipolearray/fusion.hpp"
#include "dipolearray/pann.hpp"

namespace dpa::pclstm {

using nn::Matrix;
using nn::Vector;

/// Fixed convolution prior: center-weighted, exponentially decaying away from
/// the matrix diagonal, normalized to unit sum, symmetric under 180 degree
/// rotation.
struct PhysicsKernel {
  int side = 0;
  double decay = 0.0;
  Matrix weights;
};

PhysicsKernel build_kernel(int side, double decay);

/// One LSTM layer; gate rows packed [forget; input; candidate; output],
/// columns [x; h_prev].
struct LstmLayer {
  Matrix w;  // 4H x (in + H)
  Vector b;  // 4H
};

struct LstmStack {
  std::vector<LstmLayer> layers;
  int hidden = 0;

  int input_size(int layer) const {
    return static_cast<int>(layers.at(layer).w.cols()) - hidden;
  }
  static LstmStack init(int input_size, int hidden, int layer_count, nn::Rng& rng);
};

/// Single gate-algebra step for one layer:
/// c = f.*c_prev + i.*tanh(Wc [h;x] + bc), h = o.*tanh(c).
std::pair<Vector, Vector> lstm_step(const LstmLayer& layer, int hidden, const Vector& x,
                                    const Vector& h_prev, const Vector& c_prev);

/// Runs the full stack over a sequence from zero state; returns the final
/// top-layer hidden state. Accepts any sequence length >= 1.
Vector lstm_forward(const LstmStack& stack, const std::vector<Vector>& sequence);

struct LstmStepCache {
  Matrix cat;                 // (in + H) x B
  Matrix f, i, g, o;          // post-activation gates, H x B
  Matrix c_prev, c, tanh_c;   // H x B
};

struct LstmCache {
  std::vector<std::vector<LstmStepCache>> steps;  // [layer][t]
  int batch = 0;
  bool recorded = false;
};

/// Batched forward (columns = batch). Returns the top-layer hidden state at
/// every step.
std::vector<Matrix> lstm_forward_batch(const LstmStack& stack,
                                       const std::vector<Matrix>& inputs,
                                       LstmCache* cache = nullptr);

struct LstmGrads {
  std::vector<Matrix> d_w;
  std::vector<Vector> d_b;
  std::vector<Matrix> d_inputs;  // per step, in x B
};

/// Full BPTT. d_h_top[t] is the upstream gradient into the top-layer hidden
/// state at step t (pass zero matrices for unused steps).
LstmGrads lstm_backward_batch(const LstmStack& stack, const LstmCache& cache,
                              const std::vector<Matrix>& d_h_top);

/// Second-stage refiner for synthesized arrays: a row-wise LSTM carries array
/// context, and a small decoder shared across row slots turns
/// [hidden state; per-pair features] into a residual on the packed prior.
/// The per-pair features expose the free-space phase/amplitude basis of the
/// pair separation, which the linear row readout alone cannot represent.
struct Stage2Model {
  static constexpr int kSlotFeatures = 8;

  bool trained = false;
  int max_elements = 30;
  LstmStack lstm;
  nn::DenseLayer dec_hidden;  // (H + kSlotFeatures) -> width, tanh
  nn::DenseLayer dec_out;     // width -> 2 (re, im residual), zero-initialized
  double re_mean = 0.0, re_std = 1.0;  // global channel normalization
  double im_mean = 0.0, im_std = 1.0;

  int step_input_size() const { return 3 * max_elements + 1; }
};

/// Decoder features for the pair (p, q): normalized prior entry, separation in
/// wavelengths with its phase/amplitude basis, diagonal flag, element count.
nn::Vector stage2_slot_features(const Stage2Model& model, cdouble prior_entry,
                                double separation_lambda, bool diagonal, int elements);

/// Trained parameter sets for the full two-port pipeline plus metadata.
struct ModelBundle {
  DipoleSpec dipole;
  double frequency_hz = 0.0;
  double cutoff_lambda = 0.6;

  pann::PannModel green_net;  // grid = 2 * dipole.segments
  fusion::FusionParams fusion_params;
  PhysicsKernel kernel;
  LstmStack lstm;
  Matrix head_w;  // 6 x H
  Vector head_b;

  Vector scalar_mean;  // (d, l, r, f)
  Vector scalar_std;
  double spacing_lo_m = 0.0;  // training range for warnings
  double spacing_hi_m = 0.0;
  Vector target_mean;  // 6 components: re/im of z11, z12, z22
  Vector target_std;

  std::uint64_t seed = 0;
  int epochs_trained = 0;
  double final_loss = 0.0;
  bool trained = false;

  Stage2Model stage2;

  int grid_side() const { return 2 * dipole.segments; }
  /// FNV-1a over the serialized parameters; provenance tag for outputs.
  std::string hash() const;
};

struct TwoPortPrediction {
  cdouble z11, z12, z22;
  CMatrix reconstructed;  // symmetric 2 x 2 by construction
  bool extrapolation = false;
};

/// Caches the constant part of the pipeline (Green template, fusion, conv)
/// so repeated spacing queries only run the LSTM.
class TwoPortEvaluator {
 public:
  explicit TwoPortEvaluator(const ModelBundle& bundle);

  TwoPortPrediction predict(double spacing_m) const;
  std::vector<TwoPortPrediction> predict_batch(const std::vector<double>& spacing_m) const;

 private:
  const ModelBundle* bundle_;
  std::vector<Vector> base_rows_;  // per step, without the spacing scalar
  int steps_ = 0;
  int d_slot_ = 0;  // offset of the spacing-scalar block within a step input
};

/// Full pipeline at explicit geometry. l, r, f outside the bundle's training
/// configuration set the extrapolation flag.
TwoPortPrediction predict_two_port(const ModelBundle& bundle, double spacing_m,
                                   double length_m, double radius_m, double frequency_hz);

struct TwoPortTrainConfig {
  int epochs = 400;
  double lr_start = 3e-3;
  double lr_end = 3e-4;
  std::uint64_t seed = 42;
  int hidden = 64;
  int lstm_layers = 4;
  int kernel_side = 3;
  double kernel_decay = 1.0;
  int pann_epochs = 1200;
  /// Reuse a pretrained Green network instead of training one.
  std::optional<pann::PannModel> pretrained_green;
};

struct EpochLoss {
  int epoch = 0;
  double loss = 0.0;
};

struct TwoPortTrainResult {
  ModelBundle bundle;
  std::vector<EpochLoss> history;
};

/// End-to-end training of fusion + conv + LSTM + head on a two-element
/// dataset; the Green network is trained first (or taken pretrained) and then
/// frozen. Deterministic for a fixed config.
TwoPortTrainResult train_two_port(const Dataset& dataset, const TwoPortTrainConfig& config);

}  // namespace dpa::pclstm

#endif  // DIPOLEARRAY_PCLSTM_HPP
