// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#ifndef DIPOLEARRAY_NN_HPP
#define DIPOLEARRAY_NN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

namespace dpa::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Training failure (divergence, non-finite gradients). Carries the epoch or
/// the parameter path in the message.
class TrainingError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic RNG. mt19937_64 has a standardized sequence and the double
/// mapping is explicit, so streams are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n).
  int below(int n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class Activation { ReLU, Tanh, Sigmoid, Identity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::Identity;

  int in_size() const { return static_cast<int>(weights.cols()); }
  int out_size() const { return static_cast<int>(weights.rows()); }

  /// Glorot-uniform initialization, bias zero.
  static DenseLayer init(int out, int in, Activation act, Rng& rng);
};

struct DenseCache {
  Vector input;
  Vector pre;     // W x + b
  Vector output;  // activation(pre)
  bool recorded = false;
};

/// activation(W x + b). Pass a cache to record the forward for backward().
Vector dense_forward(const DenseLayer& layer, const Vector& x, DenseCache* cache = nullptr);

struct DenseGrads {
  Matrix d_weights;
  Vector d_bias;
  Vector d_input;
};

DenseGrads dense_backward(const DenseLayer& layer, const DenseCache& cache,
                          const Vector& upstream);

/// Batched variants: columns are batch entries. The bias broadcasts.
Matrix dense_forward_batch(const DenseLayer& layer, const Matrix& x, Matrix* pre_cache);
/// Backward for a batch; gradients are summed over the batch.
void dense_backward_batch(const DenseLayer& layer, const Matrix& x, const Matrix& pre,
                          const Matrix& upstream, Matrix& d_weights, Vector& d_bias,
                          Matrix& d_input);

/// Numerically safe softmax (max shift). Outputs sum to 1.
Vector softmax(const Vector& z);
/// d(loss)/dz given y = softmax(z) and upstream = d(loss)/dy.
Vector softmax_backward(const Vector& y, const Vector& upstream);

double mse(const Vector& pred, const Vector& target);
Vector mse_grad(const Vector& pred, const Vector& target);

/// Valid-mode 2-D correlation; kernel must be odd-sided and no larger than
/// the input. Output side = input side - kernel side + 1.
Matrix conv2d(const Matrix& input, const Matrix& kernel);
Matrix conv2d_input_grad(const Matrix& upstream, const Matrix& kernel, int in_rows,
                         int in_cols);
Matrix conv2d_kernel_grad(const Matrix& input, const Matrix& upstream, int kernel_side);

/// Adaptive-moment SGD. Slots are keyed by parameter path; a NaN gradient
/// raises TrainingError naming the path.
class Adam {
 public:
  struct Config {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam();
  explicit Adam(const Config& config);

  /// Starts a new optimizer step; every update() until the next begin_step()
  /// uses the same bias correction. Optionally overrides the learning rate
  /// (for schedules).
  void begin_step(double lr_override = -1.0);
  void update(const std::string& path, Matrix& param, const Matrix& grad);
  void update(const std::string& path, Vector& param, const Vector& grad);

  long step_count() const { return step_; }
  const Config& config() const { return config_; }

 private:
  struct Slot {
    Matrix m, v;
  };
  Config config_;
  std::map<std::string, Slot> slots_;
  long step_ = 0;
  double lr_ = 0.0;
};

inline Adam::Adam() : config_() {}
inline Adam::Adam(const Config& config) : config_(config) {}

/// Plain momentum SGD. Magnitude-sensitive, so loss-weighting schemes act on
/// the update sizes directly (Adam normalizes them away per coordinate).
class SgdMomentum {
 public:
  explicit SgdMomentum(double momentum = 0.9) : momentum_(momentum) {}

  void begin_step(double lr) { lr_ = lr; }
  void update(const std::string& path, Matrix& param, const Matrix& grad);
  void update(const std::string& path, Vector& param, const Vector& grad);

 private:
  double momentum_;
  double lr_ = 0.0;
  std::map<std::string, Matrix> velocity_;
};

/// Geometric interpolation lr0 -> lr1 over [0, total) epochs.
double lr_schedule(double lr0, double lr1, int epoch, int total_epochs);

}  // namespace dpa::nn

#endif  // DIPOLEARRAY_NN_HPP
