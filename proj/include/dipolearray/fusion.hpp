// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#ifndef DIPOLEARRAY_FUSION_HPP
#define DIPOLEARRAY_FUSION_HPP

#include "dipolearray/nn.hpp"

namespace dpa::fusion {

using nn::Matrix;
using nn::Vector;

/// Two-branch attention fusion over a square feature grid. The real and
/// imaginary grids are flattened, mapped through ReLU linear layers, and a
/// logit pair per grid position selects a convex blend of the two branches.
struct FusionParams {
  int grid_side = 0;
  nn::DenseLayer map_r;  // P -> P, ReLU
  nn::DenseLayer map_i;  // P -> P, ReLU
  nn::DenseLayer attn;   // 2P -> 2P, identity logits [z_r; z_i]

  int positions() const { return grid_side * grid_side; }
  static FusionParams init(int grid_side, nn::Rng& rng);
};

struct FusedFeatures {
  Matrix fused;    // grid_side x grid_side
  Matrix alpha_r;  // per-position weights, alpha_r + alpha_i = 1
  Matrix alpha_i;
};

struct FusionCache {
  nn::DenseCache map_r, map_i, attn;
  Vector alpha_r, alpha_i;  // flattened, length P
  Vector feat_r, feat_i;    // mapped branch features, length P
  bool recorded = false;
};

/// X_fused = alpha_r .* relu(W_r x_r + b_r) + alpha_i .* relu(W_i x_i + b_i),
/// with (alpha_r, alpha_i) the per-position softmax of the attention logits.
FusedFeatures fuse(const Matrix& x_r, const Matrix& x_i, const FusionParams& params,
                   FusionCache* cache = nullptr);

struct FusionGrads {
  Matrix d_map_r_w, d_map_i_w, d_attn_w;
  Vector d_map_r_b, d_map_i_b, d_attn_b;
  Matrix d_x_r, d_x_i;
};

/// Gradients of every parameter and both inputs given d(loss)/d(fused).
FusionGrads fusion_grads(const FusionParams& params, const FusionCache& cache,
                         const Matrix& upstream);

}  // namespace dpa::fusion

#endif  // DIPOLEARRAY_FUSION_HPP
