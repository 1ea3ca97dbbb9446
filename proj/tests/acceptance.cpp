// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

// Acceptance suite: one numbered check per release criterion, each printing a
// single PASS/FAIL line plus its measurements. Exit code = number of failed
// criteria. `--only N[,M...]` restricts the run (later criteria reuse earlier
// artifacts and will build them on demand).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dipolearray/fusion.hpp"
#include "dipolearray/io.hpp"
#include "dipolearray/mom.hpp"
#include "dipolearray/packing.hpp"
#include "dipolearray/pann.hpp"
#include "dipolearray/pclstm.hpp"
#include "dipolearray/synth.hpp"
#include "test_util.hpp"

using namespace dpa;
using Clock = std::chrono::steady_clock;
using nn::Matrix;
using nn::Vector;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    detail << "    " << (ok ? "ok  " : "FAIL") << "  " << what << '\n';
  }
};

// ---------------------------------------------------------------------------
// Shared artifacts (built lazily, reused across criteria).

struct SharedState {
  // Criterion 7: two-port model at the 3 GHz half-wave reference geometry.
  std::optional<pclstm::TwoPortTrainResult> two_port_3ghz;
  std::optional<Dataset> holdout_3ghz;
  double two_port_train_seconds = 0.0;

  // Criterion 8/10: pipeline at the 6.25 cm / 2.4 GHz dipole.
  std::optional<pclstm::ModelBundle> synth_bundle;
  std::map<int, double> synth_losses;
  std::map<int, std::vector<pclstm::EpochLoss>> synth_histories;
  std::map<int, Dataset> synth_holdouts;
  double synth_total_seconds = 0.0;
};

SharedState g_state;

DipoleSpec reference_dipole_3ghz() {
  const double lambda = wavelength(3e9);
  return {0.5 * lambda, 0.002 * lambda, 16};
}

const pclstm::TwoPortTrainResult& two_port_3ghz() {
  if (!g_state.two_port_3ghz) {
    const auto t0 = Clock::now();
    const auto dipole = reference_dipole_3ghz();
    const Dataset train = synth::gen_dataset(100, 2, dipole, 3e9, 42);
    g_state.holdout_3ghz = synth::gen_dataset(20, 2, dipole, 3e9, 43);
    pclstm::TwoPortTrainConfig cfg;  // defaults: 400 epochs, seed 42
    g_state.two_port_3ghz = pclstm::train_two_port(train, cfg);
    g_state.two_port_train_seconds = seconds_since(t0);
  }
  return *g_state.two_port_3ghz;
}

const pclstm::ModelBundle& synthesis_bundle() {
  if (!g_state.synth_bundle) {
    const auto t0 = Clock::now();
    const DipoleSpec dipole{6.25e-2, 5e-4, 16};
    const double f = 2.4e9;
    const Dataset train2 = synth::gen_dataset(100, 2, dipole, f, 42);
    pclstm::TwoPortTrainConfig cfg;
    auto two_port = pclstm::train_two_port(train2, cfg);

    std::map<int, Dataset> sets;
    sets[10] = synth::gen_dataset(100, 10, dipole, f, 52);
    sets[30] = synth::gen_dataset(100, 30, dipole, f, 72);
    g_state.synth_holdouts[10] = synth::gen_dataset(20, 10, dipole, f, 53);
    g_state.synth_holdouts[30] = synth::gen_dataset(20, 30, dipole, f, 73);

    synth::SynthesisTrainConfig scfg;  // defaults: 600 epochs, seed 42
    const auto result = synth::train_synthesis(two_port.bundle, sets, scfg);
    g_state.synth_losses = result.final_losses;
    g_state.synth_histories = result.histories;
    g_state.synth_bundle = std::move(two_port.bundle);
    g_state.synth_total_seconds = seconds_since(t0);
  }
  return *g_state.synth_bundle;
}

// ---------------------------------------------------------------------------
// Criteria

Check criterion1_pann_convergence() {
  Check c;
  const auto t0 = Clock::now();
  pann::TrainConfig cfg;  // defaults: N=16, seed 42, 1200 epochs
  const auto result = pann::train_pann(cfg);
  const double secs = seconds_since(t0);
  const double final_total = result.state.history.back().total;
  std::ostringstream os;
  os << "final L_total = " << final_total << " (limit 1e-8) after " << cfg.epochs
     << " epochs";
  c.require(final_total <= 1e-8, os.str());
  os.str("");
  os << "training time " << secs << " s (limit 120 s)";
  c.require(secs <= 120.0, os.str());
  return c;
}

Check criterion2_adaptive_benefit() {
  Check c;
  int wins = 0;
  for (std::uint64_t seed = 42; seed <= 46; ++seed) {
    pann::TrainConfig cfg;
    cfg.seed = seed;
    const auto adaptive = pann::train_pann(cfg);
    cfg.adaptive = false;
    const auto fixed = pann::train_pann(cfg);
    const double la = adaptive.state.history.back().total;
    const double lf = fixed.state.history.back().total;
    const bool win = la <= lf;
    wins += win ? 1 : 0;
    std::ostringstream os;
    os << "seed " << seed << ": adaptive " << la << " vs fixed " << lf;
    c.require(true, os.str() + (win ? "  (adaptive <=)" : "  (fixed wins)"));
  }
  std::ostringstream os;
  os << "adaptive wins " << wins << "/5 (need >= 4)";
  c.require(wins >= 4, os.str());
  return c;
}

Check criterion3_table_targets() {
  Check c;
  const double f = 3e9;
  const double lambda = wavelength(f);
  const DipoleSpec dipole = reference_dipole_3ghz();
  const struct {
    const char* name;
    double d_lambda;
    cdouble z11, z12;
  } cases[] = {{"case 1 (d=0.052 lambda)", 0.052, {87.11, 39.20}, {85.42, 18.69}},
               {"case 2 (d=0.206 lambda)", 0.206, {80.55, 41.58}, {53.46, -30.06}}};
  for (const auto& cs : cases) {
    const auto t0 = Clock::now();
    const auto g = ArrayGeometry::from_spacings(dipole, {cs.d_lambda * lambda}, f);
    const auto zp = mom::port_reduce(mom::assemble_impedance(g));
    const double secs = seconds_since(t0);
    const double e11 = testutil::complex_rel_err(zp.entries(0, 0), cs.z11);
    const double e12 = testutil::complex_rel_err(zp.entries(0, 1), cs.z12);
    std::ostringstream os;
    os << cs.name << ": Z11 error " << 100 * e11 << "%, Z12 error " << 100 * e12
       << "% (limit 15%)";
    c.require(e11 <= 0.15 && e12 <= 0.15, os.str());
    os.str("");
    os << cs.name << ": solve time " << secs << " s (limit 10 s)";
    c.require(secs <= 10.0, os.str());
  }
  return c;
}

Check criterion4_mna_oracle() {
  Check c;
  nn::Rng rng(4242);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + rng.below(11);
    const int p = 1 + rng.below(std::min(3, n));
    CMatrix z(n, n);
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < n; ++col)
        z(r, col) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    z += 4.0 * CMatrix::Identity(n, n);
    std::vector<int> ports;
    while (static_cast<int>(ports.size()) < p) {
      const int candidate = rng.below(n);
      if (std::find(ports.begin(), ports.end(), candidate) == ports.end())
        ports.push_back(candidate);
    }
    mom::MoMSystem system;
    system.impedance = z;
    system.port_basis = ports;
    system.excitation = CVector::Ones(p);
    const auto zp = mom::port_reduce(system);

    CMatrix block = CMatrix::Zero(n + p, n + p);
    block.topLeftCorner(n, n) = z;
    for (int j = 0; j < p; ++j) {
      block(ports[j], n + j) = -1.0;
      block(n + j, ports[j]) = 1.0;
    }
    const Eigen::PartialPivLU<CMatrix> lu(block);
    CMatrix oracle(p, p);
    for (int j = 0; j < p; ++j) {
      CVector rhs = CVector::Zero(n + p);
      rhs(n + j) = 1.0;
      oracle.col(j) = lu.solve(rhs).tail(p);
    }
    worst = std::max(worst, (zp.entries - oracle).cwiseAbs().maxCoeff() /
                                oracle.cwiseAbs().maxCoeff());
  }
  std::ostringstream os;
  os << "100 random instances, worst deviation " << worst << " (limit 1e-10)";
  c.require(worst <= 1e-10, os.str());
  return c;
}

Check criterion5_reciprocity() {
  Check c;
  nn::Rng rng(5555);
  double worst_z = 0.0, worst_port = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double f = rng.uniform(1.5e9, 3.5e9);
    const double lambda = wavelength(f);
    const int elements = 1 + rng.below(3);
    const DipoleSpec dip{rng.uniform(0.4, 0.55) * lambda, 0.002 * lambda,
                         6 + 2 * rng.below(6)};
    ArrayGeometry g;
    if (elements == 1) {
      g.dipole = dip;
      g.frequency_hz = f;
      g.positions_m = {0.0};
    } else {
      std::vector<double> spacings;
      for (int e = 1; e < elements; ++e)
        spacings.push_back(rng.uniform(0.1, 0.8) * lambda);
      g = ArrayGeometry::from_spacings(dip, spacings, f);
    }
    const auto system = mom::assemble_impedance(g);
    const auto zp = mom::port_reduce(system);
    const double ez = (system.impedance - system.impedance.transpose())
                          .cwiseAbs()
                          .maxCoeff() /
                      system.impedance.cwiseAbs().maxCoeff();
    worst_z = std::max(worst_z, ez);
    if (zp.entries.rows() > 1) {
      const double ep = (zp.entries - zp.entries.transpose()).cwiseAbs().maxCoeff() /
                        zp.entries.cwiseAbs().maxCoeff();
      worst_port = std::max(worst_port, ep);
    }
  }
  std::ostringstream os;
  os << "50 geometries: worst Z asymmetry " << worst_z << ", worst Z_port asymmetry "
     << worst_port << " (limit 1e-10)";
  c.require(worst_z <= 1e-10 && worst_port <= 1e-10, os.str());
  return c;
}

Check criterion6_gradient_suite() {
  Check c;
  double worst_dense = 0.0, worst_conv = 0.0, worst_softmax = 0.0, worst_fusion = 0.0,
         worst_lstm = 0.0, worst_head = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    nn::Rng rng(seed);

    {  // dense layers, every activation
      for (nn::Activation act : {nn::Activation::ReLU, nn::Activation::Tanh,
                                 nn::Activation::Sigmoid, nn::Activation::Identity}) {
        auto layer = nn::DenseLayer::init(4, 3, act, rng);
        Vector x(3), target(4);
        for (int i = 0; i < 3; ++i) x(i) = rng.uniform(-1, 1);
        for (int i = 0; i < 4; ++i) target(i) = rng.uniform(-1, 1);
        auto loss = [&]() { return nn::mse(nn::dense_forward(layer, x), target); };
        nn::DenseCache cache;
        const Vector out = nn::dense_forward(layer, x, &cache);
        const auto grads = nn::dense_backward(layer, cache, nn::mse_grad(out, target));
        Matrix gw = grads.d_weights;
        worst_dense =
            std::max(worst_dense, testutil::fd_max_rel_err(layer.weights, gw, loss));
      }
    }
    {  // convolution
      Matrix input(5, 5), kernel(3, 3), target(3, 3);
      for (int i = 0; i < 25; ++i) input(i / 5, i % 5) = rng.uniform(-1, 1);
      for (int i = 0; i < 9; ++i) kernel(i / 3, i % 3) = rng.uniform(-1, 1);
      for (int i = 0; i < 9; ++i) target(i / 3, i % 3) = rng.uniform(-1, 1);
      auto loss = [&]() { return (nn::conv2d(input, kernel) - target).squaredNorm(); };
      const Matrix upstream = 2.0 * (nn::conv2d(input, kernel) - target);
      Matrix dk = nn::conv2d_kernel_grad(input, upstream, 3);
      worst_conv = std::max(worst_conv, testutil::fd_max_rel_err(kernel, dk, loss));
      Matrix din = nn::conv2d_input_grad(upstream, kernel, 5, 5);
      worst_conv = std::max(worst_conv, testutil::fd_max_rel_err(input, din, loss));
    }
    {  // softmax
      Vector z(5), probe(5);
      for (int i = 0; i < 5; ++i) {
        z(i) = rng.uniform(-2, 2);
        probe(i) = rng.uniform(-1, 1);
      }
      auto loss = [&]() { return probe.dot(nn::softmax(z)); };
      Vector g = nn::softmax_backward(nn::softmax(z), probe);
      worst_softmax = std::max(worst_softmax, testutil::fd_max_rel_err_vec(z, g, loss));
    }
    {  // fusion block
      auto params = fusion::FusionParams::init(3, rng);
      Matrix x_r(3, 3), x_i(3, 3), probe(3, 3);
      for (int i = 0; i < 9; ++i) {
        x_r(i / 3, i % 3) = rng.uniform(-1, 1);
        x_i(i / 3, i % 3) = rng.uniform(-1, 1);
        probe(i / 3, i % 3) = rng.uniform(-1, 1);
      }
      auto loss = [&]() {
        return fusion::fuse(x_r, x_i, params).fused.cwiseProduct(probe).sum();
      };
      fusion::FusionCache cache;
      fusion::fuse(x_r, x_i, params, &cache);
      const auto grads = fusion::fusion_grads(params, cache, probe);
      Matrix g = grads.d_attn_w;
      worst_fusion =
          std::max(worst_fusion, testutil::fd_max_rel_err(params.attn.weights, g, loss));
      g = grads.d_map_r_w;
      worst_fusion = std::max(worst_fusion,
                              testutil::fd_max_rel_err(params.map_r.weights, g, loss));
    }
    {  // LSTM cell stack and output head
      const int in = 3, hidden = 8, steps = 4;
      nn::Rng stack_rng(seed + 1000);
      auto stack = pclstm::LstmStack::init(in, hidden, 2, stack_rng);
      for (auto& layer : stack.layers)
        for (int i = 0; i < layer.b.size(); ++i) layer.b(i) += stack_rng.uniform(-0.3, 0.3);
      auto head = nn::DenseLayer::init(2, hidden, nn::Activation::Identity, stack_rng);
      std::vector<Matrix> xs(steps, Matrix(in, 1));
      for (int t = 0; t < steps; ++t)
        for (int i = 0; i < in; ++i) xs[t](i, 0) = stack_rng.uniform(-1, 1);
      Vector target(2);
      target << stack_rng.uniform(-1, 1), stack_rng.uniform(-1, 1);

      auto loss = [&]() {
        const Vector h = pclstm::lstm_forward_batch(stack, xs).back().col(0);
        return nn::mse(head.weights * h + head.bias, target);
      };
      pclstm::LstmCache cache;
      const Vector h = pclstm::lstm_forward_batch(stack, xs, &cache).back().col(0);
      const Vector out = head.weights * h + head.bias;
      const Vector d_out = nn::mse_grad(out, target);
      const Matrix d_head_w = d_out * h.transpose();
      std::vector<Matrix> d_h(steps, Matrix::Zero(hidden, 1));
      d_h.back() = head.weights.transpose() * d_out;
      const auto grads = pclstm::lstm_backward_batch(stack, cache, d_h);

      Matrix ghw = d_head_w;
      worst_head = std::max(worst_head, testutil::fd_max_rel_err(head.weights, ghw, loss));
      for (int l = 0; l < 2; ++l) {
        Matrix gw = grads.d_w[l];
        worst_lstm =
            std::max(worst_lstm, testutil::fd_max_rel_err(stack.layers[l].w, gw, loss));
      }
    }
  }
  auto line = [&](const char* name, double worst) {
    std::ostringstream os;
    os << name << " worst relative error " << worst << " (limit 1e-4)";
    c.require(worst <= 1e-4, os.str());
  };
  line("dense", worst_dense);
  line("conv", worst_conv);
  line("softmax", worst_softmax);
  line("fusion", worst_fusion);
  line("lstm", worst_lstm);
  line("output head", worst_head);
  return c;
}

Check criterion7_two_port_learning() {
  Check c;
  const auto& result = two_port_3ghz();
  const double final_loss = result.bundle.final_loss;
  {
    std::ostringstream os;
    os << "final normalized training loss " << final_loss << " (limit 5e-3)";
    c.require(final_loss <= 5e-3, os.str());
  }

  const pclstm::TwoPortEvaluator evaluator(result.bundle);
  double err_sum = 0.0, err_worst = 0.0;
  for (const auto& sample : g_state.holdout_3ghz->samples) {
    const double d = sample.geometry.spacings()[0];
    const auto pred = evaluator.predict(d);
    const double err =
        (pred.reconstructed - sample.z_port).norm() / sample.z_port.norm();
    err_sum += err;
    err_worst = std::max(err_worst, err);
  }
  const double err_mean = err_sum / g_state.holdout_3ghz->samples.size();
  {
    std::ostringstream os;
    os << "holdout (20 unseen spacings): mean error " << 100 * err_mean
       << "%, worst " << 100 * err_worst << "% (limit 5% mean)";
    c.require(err_mean <= 0.05, os.str());
  }

  // Reference two-element cases, model vs its own solver oracle.
  const double lambda = wavelength(3e9);
  const DipoleSpec dipole = reference_dipole_3ghz();
  for (double d_lambda : {0.052, 0.206}) {
    const auto g = ArrayGeometry::from_spacings(dipole, {d_lambda * lambda}, 3e9);
    const auto zp = mom::port_reduce(mom::assemble_impedance(g));
    const auto pred = evaluator.predict(d_lambda * lambda);
    const double e11 = testutil::complex_rel_err(pred.z11, zp.entries(0, 0));
    const double e12 = testutil::complex_rel_err(pred.z12, zp.entries(0, 1));
    std::ostringstream os;
    os << "d=" << d_lambda << " lambda: model-vs-solver Z11 " << 100 * e11
       << "%, Z12 " << 100 * e12 << "% (limit 5%)";
    c.require(e11 <= 0.05 && e12 <= 0.05, os.str());
  }

  {
    std::ostringstream os;
    os << "training wall time " << g_state.two_port_train_seconds
       << " s (limit 900 s)";
    c.require(g_state.two_port_train_seconds <= 900.0, os.str());
  }
  return c;
}

Check criterion8_synthesis() {
  Check c;
  const auto& bundle = synthesis_bundle();
  const struct {
    int m;
    double loss_limit, holdout_limit;
  } rows[] = {{10, 5e-3, 0.05}, {30, 1e-2, 0.08}};
  for (const auto& row : rows) {
    const double loss = g_state.synth_losses.at(row.m);
    {
      std::ostringstream os;
      os << "M=" << row.m << " final normalized loss " << loss << " (limit "
         << row.loss_limit << ")";
      c.require(loss <= row.loss_limit, os.str());
    }
    double num = 0.0, den = 0.0;
    for (const auto& sample : g_state.synth_holdouts.at(row.m).samples) {
      const auto refined = synth::synthesize_array(
          bundle, sample.geometry.spacings(), bundle.dipole, bundle.frequency_hz);
      const Vector truth = pack_symmetric(sample.z_port);
      num += (refined.packed - truth).squaredNorm();
      den += truth.squaredNorm();
    }
    const double rel = std::sqrt(num / den);
    {
      std::ostringstream os;
      os << "M=" << row.m << " holdout (20 layouts) relative RMS " << 100 * rel
         << "% (limit " << 100 * row.holdout_limit << "%)";
      c.require(rel <= row.holdout_limit, os.str());
    }

    // Loss curves settle monotonically once smoothed (window 20).
    const auto& history = g_state.synth_histories.at(row.m);
    std::vector<double> smooth;
    for (std::size_t i = 19; i < history.size(); ++i) {
      double acc = 0.0;
      for (std::size_t k = i + 1 - 20; k <= i; ++k) acc += history[k].loss;
      smooth.push_back(acc / 20.0);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < smooth.size(); ++i)
      if (smooth[i] > smooth[i - 1] * (1.0 + 1e-6)) monotone = false;
    std::ostringstream os;
    os << "M=" << row.m << " smoothed loss curve is non-increasing";
    c.require(monotone, os.str());
  }
  std::ostringstream os;
  os << "pipeline wall time " << g_state.synth_total_seconds << " s (limit 1800 s)";
  c.require(g_state.synth_total_seconds <= 1800.0, os.str());
  return c;
}

Check criterion9_coupling_cutoff() {
  Check c;
  const DipoleSpec dipole{6.25e-2, 5e-4, 16};
  const double f = 2.4e9;
  const double lambda = wavelength(f);

  std::vector<double> d_grid, z12_abs, ratio;
  for (int i = 0; i <= 45; ++i) {
    const double d = 0.1 + 0.02 * i;
    const auto g = ArrayGeometry::from_spacings(dipole, {d * lambda}, f);
    const auto zp = mom::port_reduce(mom::assemble_impedance(g));
    d_grid.push_back(d);
    z12_abs.push_back(std::abs(zp.entries(0, 1)));
    ratio.push_back(std::abs(zp.entries(0, 1)) / std::abs(zp.entries(0, 0)));
  }

  // Moving-average smoothing, window 5.
  std::vector<double> smooth(z12_abs.size());
  for (std::size_t i = 0; i < z12_abs.size(); ++i) {
    double acc = 0.0;
    int count = 0;
    for (int k = -2; k <= 2; ++k) {
      const long j = static_cast<long>(i) + k;
      if (j >= 0 && j < static_cast<long>(z12_abs.size())) {
        acc += z12_abs[j];
        ++count;
      }
    }
    smooth[i] = acc / count;
  }
  bool monotone = true;
  for (std::size_t i = 1; i < smooth.size(); ++i)
    if (smooth[i] > smooth[i - 1] + 1e-9) monotone = false;
  c.require(monotone, "smoothed |Z12| is monotone non-increasing over 0.1-1.0 lambda");

  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < d_grid.size(); ++i)
    if (d_grid[i] > 0.6) worst_ratio = std::max(worst_ratio, ratio[i]);
  std::ostringstream os;
  os << "|Z12|/|Z11| beyond 0.6 lambda: worst " << 100 * worst_ratio
     << "% (limit 10%; solver physics gives 20-35% here, so this clause "
        "documents the gap)";
  c.require(worst_ratio < 0.10, os.str());
  return c;
}

Check criterion10_timing() {
  Check c;
  const auto& bundle = synthesis_bundle();
  const double lambda = wavelength(bundle.frequency_hz);
  nn::Rng rng(1042);

  double mom30 = 0.0, inf30 = 0.0;
  for (int m : {2, 10, 30}) {
    std::vector<double> spacings;
    if (m == 2) {
      spacings = {0.3 * lambda};
    } else {
      spacings = synth::sample_spacings(m, {}, lambda, rng);
    }
    const auto g = ArrayGeometry::from_spacings(bundle.dipole, spacings,
                                                bundle.frequency_hz);
    const auto t_mom = Clock::now();
    const auto zp = mom::port_reduce(mom::assemble_impedance(g));
    const double mom_s = seconds_since(t_mom);
    (void)zp;

    const auto t_inf = Clock::now();
    if (m == 2) {
      const pclstm::TwoPortEvaluator evaluator(bundle);
      (void)evaluator.predict(spacings[0]);
    } else {
      (void)synth::synthesize_array(bundle, spacings, bundle.dipole,
                                    bundle.frequency_hz);
    }
    const double inf_s = seconds_since(t_inf);
    std::ostringstream os;
    os << "M=" << m << ": solver " << mom_s << " s, inference " << inf_s
       << " s, ratio " << mom_s / inf_s;
    c.require(true, os.str());
    if (m == 30) {
      mom30 = mom_s;
      inf30 = inf_s;
    }
  }
  std::ostringstream os;
  os << "M=30 inference faster than the solver (" << inf30 << " s < " << mom30
     << " s); published speedups vs external solvers are context only";
  c.require(inf30 < mom30, os.str());
  return c;
}

Check criterion11_structural() {
  Check c;
  nn::Rng rng(1111);

  // Attention simplex and convexity over random instances.
  double worst_simplex = 0.0;
  bool convex = true;
  for (int trial = 0; trial < 10; ++trial) {
    const auto params = fusion::FusionParams::init(4, rng);
    Matrix x_r(4, 4), x_i(4, 4);
    for (int i = 0; i < 16; ++i) {
      x_r(i / 4, i % 4) = rng.uniform(-2, 2);
      x_i(i / 4, i % 4) = rng.uniform(-2, 2);
    }
    fusion::FusionCache cache;
    const auto out = fusion::fuse(x_r, x_i, params, &cache);
    for (int p = 0; p < 16; ++p) {
      worst_simplex = std::max(
          worst_simplex,
          std::abs(out.alpha_r(p / 4, p % 4) + out.alpha_i(p / 4, p % 4) - 1.0));
      const double lo = std::min(cache.feat_r(p), cache.feat_i(p));
      const double hi = std::max(cache.feat_r(p), cache.feat_i(p));
      const double v = out.fused(p / 4, p % 4);
      convex = convex && v >= lo - 1e-12 && v <= hi + 1e-12;
    }
  }
  {
    std::ostringstream os;
    os << "per-position weight sums off by at most " << worst_simplex
       << " (limit 1e-12)";
    c.require(worst_simplex <= 1e-12, os.str());
  }
  c.require(convex, "fused outputs stay inside the branch envelope");

  // Kernel normalization and rotation symmetry.
  double worst_sum = 0.0;
  bool rotation_exact = true;
  for (int side : {3, 5, 7}) {
    for (double decay : {0.5, 1.0, 2.0}) {
      const auto kernel = pclstm::build_kernel(side, decay);
      worst_sum = std::max(worst_sum, std::abs(kernel.weights.sum() - 1.0));
      for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
          rotation_exact = rotation_exact &&
                           kernel.weights(i, j) ==
                               kernel.weights(side - 1 - i, side - 1 - j);
    }
  }
  {
    std::ostringstream os;
    os << "kernel sums off by at most " << worst_sum << " (limit 1e-12)";
    c.require(worst_sum <= 1e-12, os.str());
  }
  c.require(rotation_exact, "kernels are exactly symmetric under 180-degree rotation");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      std::istringstream is(argv[++i]);
      std::string tok;
      while (std::getline(is, tok, ',')) only.insert(std::stoi(tok));
    }
  }

  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"Green-network convergence", criterion1_pann_convergence},
      {"adaptive loss beats fixed weights", criterion2_adaptive_benefit},
      {"two-element solver vs published values", criterion3_table_targets},
      {"port reduction equals the block solve", criterion4_mna_oracle},
      {"reciprocity of Z and Z_port", criterion5_reciprocity},
      {"gradient suite vs finite differences", criterion6_gradient_suite},
      {"two-port learning", criterion7_two_port_learning},
      {"large-array synthesis", criterion8_synthesis},
      {"mutual-coupling cutoff", criterion9_coupling_cutoff},
      {"inference vs solver timing", criterion10_timing},
      {"attention and kernel structure", criterion11_structural},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Check result;
    try {
      result = criteria[i].second();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail << "    threw: " << e.what() << '\n';
    }
    const double secs = seconds_since(t0);
    std::printf("[%s] criterion %d: %s (%.1f s)\n", result.pass ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), secs);
    std::fputs(result.detail.str().c_str(), stdout);
    std::fflush(stdout);
    failures += result.pass ? 0 : 1;
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
