// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#include "dipolearray/fusion.hpp"

#include <cmath>

namespace dpa::fusion {

namespace {

Vector flatten(const Matrix& m) {
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  Vector v(rows * cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) v(i * cols + j) = m(i, j);
  return v;
}

Matrix unflatten(const Vector& v, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

}  // namespace

FusionParams FusionParams::init(int grid_side, nn::Rng& rng) {
  if (grid_side <= 0) throw std::domain_error("fusion grid side must be positive");
  FusionParams p;
  p.grid_side = grid_side;
  const int n = grid_side * grid_side;
  p.map_r = nn::DenseLayer::init(n, n, nn::Activation::ReLU, rng);
  p.map_i = nn::DenseLayer::init(n, n, nn::Activation::ReLU, rng);
  p.attn = nn::DenseLayer::init(2 * n, 2 * n, nn::Activation::Identity, rng);
  return p;
}

FusedFeatures fuse(const Matrix& x_r, const Matrix& x_i, const FusionParams& params,
                   FusionCache* cache) {
  const int side = params.grid_side;
  if (x_r.rows() != side || x_r.cols() != side || x_i.rows() != side || x_i.cols() != side)
    throw std::invalid_argument("fuse: input grids must match the parameter grid side");

  const int n = params.positions();
  FusionCache local;
  FusionCache& c = cache ? *cache : local;

  const Vector feat_r = nn::dense_forward(params.map_r, flatten(x_r), &c.map_r);
  const Vector feat_i = nn::dense_forward(params.map_i, flatten(x_i), &c.map_i);

  Vector concat(2 * n);
  concat.head(n) = feat_r;
  concat.tail(n) = feat_i;
  const Vector logits = nn::dense_forward(params.attn, concat, &c.attn);

  Vector alpha_r(n), alpha_i(n);
  for (int p = 0; p < n; ++p) {
    // Pairwise softmax with max shift; saturates cleanly for large logits.
    const double zr = logits(p), zi = logits(n + p);
    const double m = std::max(zr, zi);
    const double er = std::exp(zr - m), ei = std::exp(zi - m);
    alpha_r(p) = er / (er + ei);
    alpha_i(p) = ei / (er + ei);
  }

  const Vector fused = alpha_r.cwiseProduct(feat_r) + alpha_i.cwiseProduct(feat_i);

  c.alpha_r = alpha_r;
  c.alpha_i = alpha_i;
  c.feat_r = feat_r;
  c.feat_i = feat_i;
  c.recorded = true;

  FusedFeatures out;
  out.fused = unflatten(fused, side, side);
  out.alpha_r = unflatten(alpha_r, side, side);
  out.alpha_i = unflatten(alpha_i, side, side);
  return out;
}

FusionGrads fusion_grads(const FusionParams& params, const FusionCache& cache,
                         const Matrix& upstream) {
  if (!cache.recorded)
    throw std::logic_error("fusion_grads: no recorded forward evaluation");
  const int side = params.grid_side;
  if (upstream.rows() != side || upstream.cols() != side)
    throw std::invalid_argument("fusion_grads: upstream shape mismatch");

  const int n = params.positions();
  const Vector u = flatten(upstream);

  const Vector d_alpha_r = u.cwiseProduct(cache.feat_r);
  const Vector d_alpha_i = u.cwiseProduct(cache.feat_i);
  Vector d_feat_r = u.cwiseProduct(cache.alpha_r);
  Vector d_feat_i = u.cwiseProduct(cache.alpha_i);

  // Pairwise softmax jacobian: dz_r = a_r a_i (d_a_r - d_a_i), dz_i = -dz_r.
  Vector d_logits(2 * n);
  for (int p = 0; p < n; ++p) {
    const double g = cache.alpha_r(p) * cache.alpha_i(p) * (d_alpha_r(p) - d_alpha_i(p));
    d_logits(p) = g;
    d_logits(n + p) = -g;
  }

  FusionGrads out;
  const nn::DenseGrads attn_g = nn::dense_backward(params.attn, cache.attn, d_logits);
  out.d_attn_w = attn_g.d_weights;
  out.d_attn_b = attn_g.d_bias;
  d_feat_r += attn_g.d_input.head(n);
  d_feat_i += attn_g.d_input.tail(n);

  const nn::DenseGrads r_g = nn::dense_backward(params.map_r, cache.map_r, d_feat_r);
  out.d_map_r_w = r_g.d_weights;
  out.d_map_r_b = r_g.d_bias;
  out.d_x_r = unflatten(r_g.d_input, side, side);

  const nn::DenseGrads i_g = nn::dense_backward(params.map_i, cache.map_i, d_feat_i);
  out.d_map_i_w = i_g.d_weights;
  out.d_map_i_b = i_g.d_bias;
  out.d_x_i = unflatten(i_g.d_input, side, side);
  return out;
}

}  // namespace dpa::fusion
