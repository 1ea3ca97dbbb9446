// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#include "dipolearray/mom.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <span>

namespace dpa::mom {

namespace {

struct GaussRule {
  std::span<const double> nodes;    // on [-1, 1]
  std::span<const double> weights;  // sum to 2
};

constexpr std::array<double, 1> kN1{0.0};
constexpr std::array<double, 1> kW1{2.0};
constexpr std::array<double, 2> kN2{-0.5773502691896257, 0.5773502691896257};
constexpr std::array<double, 2> kW2{1.0, 1.0};
constexpr std::array<double, 3> kN3{-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kW3{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
constexpr std::array<double, 4> kN4{-0.8611363115940526, -0.3399810435848563,
                                    0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kW4{0.3478548451374538, 0.6521451548625461,
                                    0.6521451548625461, 0.3478548451374538};
constexpr std::array<double, 5> kN5{-0.9061798459386640, -0.5384693101056831, 0.0,
                                    0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kW5{0.2369268850561891, 0.4786286704993665,
                                    0.5688888888888889, 0.4786286704993665,
                                    0.2369268850561891};
constexpr std::array<double, 6> kN6{-0.9324695142031521, -0.6612093864662645,
                                    -0.2386191860831969, 0.2386191860831969,
                                    0.6612093864662645,  0.9324695142031521};
constexpr std::array<double, 6> kW6{0.1713244923791704, 0.3607615730481386,
                                    0.4679139345726910, 0.4679139345726910,
                                    0.3607615730481386, 0.1713244923791704};
constexpr std::array<double, 8> kN8{-0.9602898564975363, -0.7966664774136267,
                                    -0.5255324099163290, -0.1834346424956498,
                                    0.1834346424956498,  0.5255324099163290,
                                    0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kW8{0.1012285362903763, 0.2223810344533745,
                                    0.3137066458778873, 0.3626837833783620,
                                    0.3626837833783620, 0.3137066458778873,
                                    0.2223810344533745, 0.1012285362903763};

GaussRule gauss_rule(int order) {
  switch (order) {
    case 1: return {kN1, kW1};
    case 2: return {kN2, kW2};
    case 3: return {kN3, kW3};
    case 4: return {kN4, kW4};
    case 5: return {kN5, kW5};
    case 6: return {kN6, kW6};
    case 7:
    case 8: return {kN8, kW8};
    default:
      throw std::domain_error("quadrature order must be in 1..8");
  }
}

cdouble sign_or_one(const cdouble& v) {
  const double a = std::abs(v);
  return a == 0.0 ? cdouble{1.0, 0.0} : v / a;
}

}  // namespace

double BasisSet::value(int b, double z) const {
  const auto& f = functions.at(b);
  const double t = 1.0 - std::abs(z - f.peak_z) / segment_length;
  return t > 0.0 ? t : 0.0;
}

double BasisSet::slope(int b, int global_segment) const {
  const auto& f = functions.at(b);
  if (global_segment == f.seg_left) return 1.0 / segment_length;
  if (global_segment == f.seg_right) return -1.0 / segment_length;
  return 0.0;
}

BasisSet build_basis(const ArrayGeometry& geometry) {
  geometry.validate();
  const int n_seg = geometry.dipole.segments;
  if (n_seg < 2) throw std::domain_error("rooftop bases need at least 2 segments");

  BasisSet set;
  set.segment_length = geometry.dipole.segment_length();
  const int elements = geometry.element_count();
  set.functions.reserve(static_cast<std::size_t>(elements) * (n_seg - 1));
  for (int e = 0; e < elements; ++e) {
    for (int node = 1; node < n_seg; ++node) {
      BasisFunction f;
      f.element = e;
      f.seg_left = e * n_seg + node - 1;
      f.seg_right = e * n_seg + node;
      f.peak_z = -0.5 * geometry.dipole.length_m + node * set.segment_length;
      set.functions.push_back(f);
    }
  }
  return set;
}

QuadratureWeights::QuadratureWeights(const BasisSet& basis, const ArrayGeometry& geometry,
                                     double wave_impedance)
    : basis_(basis), geometry_(geometry), z0_(wave_impedance),
      k_(geometry.wavenumber()) {}

cdouble QuadratureWeights::weight(int basis_m, int seg_m, int basis_n, int seg_n) const {
  const auto& fm = basis_.functions.at(basis_m);
  const auto& fn = basis_.functions.at(basis_n);
  if (seg_m != fm.seg_left && seg_m != fm.seg_right)
    throw std::domain_error("segment outside the support of basis m");
  if (seg_n != fn.seg_left && seg_n != fn.seg_right)
    throw std::domain_error("segment outside the support of basis n");

  const int n_seg = geometry_.dipole.segments;
  const double dl = basis_.segment_length;
  const double mid_m = geometry_.segment_center_z(seg_m % n_seg);
  const double mid_n = geometry_.segment_center_z(seg_n % n_seg);
  const double psi = basis_.value(basis_m, mid_m) * basis_.value(basis_n, mid_n);
  const double dpsi = basis_.slope(basis_m, seg_m) * basis_.slope(basis_n, seg_n);
  return kImagUnit * k_ * z0_ * dl * dl * (psi - dpsi / (k_ * k_));
}

Eigen::MatrixXd MoMSystem::port_matrix() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(port_count(), impedance.rows());
  for (int p = 0; p < port_count(); ++p) m(p, port_basis[p]) = 1.0;
  return m;
}

MoMSystem assemble_impedance(const ArrayGeometry& geometry, const SolveOptions& options) {
  geometry.validate();
  const BasisSet basis = build_basis(geometry);
  const int n_seg = geometry.dipole.segments;
  const int n_basis = basis.count();
  const double dl = basis.segment_length;
  const double half_len = 0.5 * geometry.dipole.length_m;
  const double k = geometry.wavenumber();
  const double a2 = geometry.dipole.radius_m * geometry.dipole.radius_m;
  const GaussRule rule = gauss_rule(options.quadrature_order);
  const int q = static_cast<int>(rule.nodes.size());
  const cdouble jkz0 = kImagUnit * k * kFreeSpaceImpedance;
  const double inv_k2 = 1.0 / (k * k);

  // Per-segment Gauss abscissae along the axis, shared by every element.
  std::vector<double> gz(static_cast<std::size_t>(n_seg) * q);
  std::vector<double> gw(q);
  for (int i = 0; i < q; ++i) gw[i] = 0.5 * dl * rule.weights[i];
  for (int s = 0; s < n_seg; ++s) {
    const double z0 = -half_len + s * dl;
    for (int i = 0; i < q; ++i)
      gz[static_cast<std::size_t>(s) * q + i] = z0 + 0.5 * dl * (rule.nodes[i] + 1.0);
  }

  MoMSystem system;
  system.frequency_hz = geometry.frequency_hz;
  system.impedance.resize(n_basis, n_basis);

  for (int m = 0; m < n_basis; ++m) {
    const auto& fm = basis.functions[m];
    for (int n = m; n < n_basis; ++n) {
      const auto& fn = basis.functions[n];
      const double dx = geometry.positions_m[fn.element] - geometry.positions_m[fm.element];
      const double dx2 = dx * dx + a2;  // thin-wire regularized transverse distance

      cdouble acc{0.0, 0.0};
      for (int sm : {fm.seg_left, fm.seg_right}) {
        const int lm = sm % n_seg;
        const double slope_m = basis.slope(m, sm);
        for (int sn : {fn.seg_left, fn.seg_right}) {
          const int ln = sn % n_seg;
          const double slope_n = basis.slope(n, sn);
          const double charge = slope_m * slope_n * inv_k2;
          for (int i = 0; i < q; ++i) {
            const double zm = gz[static_cast<std::size_t>(lm) * q + i];
            const double vm = basis.value(m, zm);
            for (int j = 0; j < q; ++j) {
              const double zn = gz[static_cast<std::size_t>(ln) * q + j];
              const double dz = zm - zn;
              const double r = std::sqrt(dz * dz + dx2);
              const cdouble g = std::polar(1.0 / (4.0 * kPi * r), -k * r);
              acc += (vm * basis.value(n, zn) - charge) * g * (gw[i] * gw[j]);
            }
          }
        }
      }
      const cdouble z_mn = jkz0 * acc;
      system.impedance(m, n) = z_mn;
      system.impedance(n, m) = z_mn;
    }
  }

  // Port = basis whose peak is nearest the dipole center (node N/2).
  const int center_node = n_seg / 2;
  for (int e = 0; e < geometry.element_count(); ++e)
    system.port_basis.push_back(e * (n_seg - 1) + center_node - 1);
  system.excitation = CVector::Ones(geometry.element_count());
  return system;
}

double condition_estimate_1norm(const CMatrix& a, const Eigen::PartialPivLU<CMatrix>& lu) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return 0.0;
  const double norm_a = a.cwiseAbs().colwise().sum().maxCoeff();

  CVector x = CVector::Constant(n, cdouble{1.0 / n, 0.0});
  double est = 0.0;
  int last_j = -1;
  for (int iter = 0; iter < 5; ++iter) {
    const CVector y = lu.solve(x);
    est = y.cwiseAbs().sum();
    const CVector xi = y.unaryExpr([](const cdouble& v) { return sign_or_one(v); });
    const CVector z = lu.adjoint().solve(xi);
    int j = 0;
    const double zmax = z.cwiseAbs().maxCoeff(&j);
    if (iter > 0 && (j == last_j || zmax <= std::abs(z.dot(x)))) break;
    x.setZero();
    x(j) = 1.0;
    last_j = j;
  }
  return norm_a * est;
}

CVector solve_currents(const MoMSystem& system, const CVector& voltage,
                       const SolveOptions& options) {
  if (voltage.size() != system.impedance.rows())
    throw std::domain_error("voltage vector length must match the basis count");
  const Eigen::PartialPivLU<CMatrix> lu(system.impedance);
  const double cond = condition_estimate_1norm(system.impedance, lu);
  if (!std::isfinite(cond) || cond > options.condition_limit)
    throw SolverError("impedance matrix is singular or ill-conditioned", cond);
  CVector current = lu.solve(voltage);
  // One step of iterative refinement keeps the residual at rounding level.
  current += lu.solve(voltage - system.impedance * current);
  return current;
}

PortImpedance port_reduce(const MoMSystem& system, const SolveOptions& options) {
  const int n = static_cast<int>(system.impedance.rows());
  const int p = system.port_count();
  if (p == 0) throw std::domain_error("system has no ports");

  const Eigen::PartialPivLU<CMatrix> lu(system.impedance);
  const double cond = condition_estimate_1norm(system.impedance, lu);
  if (!std::isfinite(cond) || cond > options.condition_limit)
    throw SolverError("impedance matrix is singular or ill-conditioned", cond);

  CMatrix selector = CMatrix::Zero(n, p);
  for (int i = 0; i < p; ++i) selector(system.port_basis[i], i) = 1.0;

  const CMatrix x = lu.solve(selector);  // Z^-1 M^T
  CMatrix y(p, p);                       // M Z^-1 M^T
  for (int i = 0; i < p; ++i) y.row(i) = x.row(system.port_basis[i]);

  const Eigen::PartialPivLU<CMatrix> lu_y(y);
  const double cond_y = condition_estimate_1norm(y, lu_y);
  if (!std::isfinite(cond_y) || cond_y > options.condition_limit)
    throw SolverError("port admittance matrix is singular", cond_y);

  PortImpedance out;
  out.frequency_hz = system.frequency_hz;
  out.entries = lu_y.solve(CMatrix::Identity(p, p));
  return out;
}

CMatrix z_to_s(const PortImpedance& zport, double ref_ohms) {
  if (ref_ohms <= 0.0) throw std::domain_error("reference impedance must be positive");
  const int p = static_cast<int>(zport.entries.rows());
  const CMatrix id = CMatrix::Identity(p, p);
  const CMatrix zp = zport.entries + ref_ohms * id;
  const Eigen::PartialPivLU<CMatrix> lu(zp);
  const double cond = condition_estimate_1norm(zp, lu);
  if (!std::isfinite(cond) || cond > 1e12)
    throw SolverError("Z + Z0*I is singular; cannot form S-parameters", cond);
  // S = (Z - Z0 I)(Z + Z0 I)^-1, computed as a transposed solve.
  const CMatrix zm_t = (zport.entries - ref_ohms * id).transpose();
  const CMatrix s_t = lu.transpose().solve(zm_t);
  return s_t.transpose();
}

std::vector<SweepPoint> frequency_sweep(const ArrayGeometry& geometry, double f_start,
                                        double f_stop, int n_points, double ref_ohms,
                                        const SolveOptions& options) {
  if (!(f_start < f_stop)) throw std::domain_error("sweep needs f_start < f_stop");
  if (n_points < 2) throw std::domain_error("sweep needs at least 2 points");

  std::vector<SweepPoint> out;
  out.reserve(n_points);
  for (int i = 0; i < n_points; ++i) {
    ArrayGeometry g = geometry;
    g.frequency_hz = f_start + (f_stop - f_start) * i / (n_points - 1);
    SweepPoint pt;
    pt.frequency_hz = g.frequency_hz;
    pt.zport = port_reduce(assemble_impedance(g, options), options);
    pt.s = z_to_s(pt.zport, ref_ohms);
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace dpa::mom
