// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#ifndef DIPOLEARRAY_MOM_HPP
#define DIPOLEARRAY_MOM_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "dipolearray/geometry.hpp"

namespace dpa::mom {

/// Numerical failure in a factorization or reduction step.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what, double condition_estimate = 0.0)
      : std::runtime_error(what), condition_(condition_estimate) {}
  double condition_estimate() const { return condition_; }

 private:
  double condition_;
};

/// Triangular (rooftop) basis spanning two adjacent segments, peak 1 at the
/// shared interior node. Currents vanish at the wire ends, so each dipole
/// carries segments-1 bases.
struct BasisFunction {
  int element = 0;
  int seg_left = 0;   // global segment index
  int seg_right = 0;  // global segment index
  double peak_z = 0.0;
};

struct BasisSet {
  std::vector<BasisFunction> functions;
  double segment_length = 0.0;

  int count() const { return static_cast<int>(functions.size()); }
  /// Triangle value of basis b at axis coordinate z (0 outside support).
  double value(int b, double z) const;
  /// d/dz of basis b on a global segment: +-1/dl on its support, else 0.
  double slope(int b, int global_segment) const;
};

BasisSet build_basis(const ArrayGeometry& geometry);

/// Weighting coefficients pairing Green samples at segment midpoints:
/// w = j*k*Z0*dl^2 * (psi_m*psi_n - slope_m*slope_n/k^2).
class QuadratureWeights {
 public:
  QuadratureWeights(const BasisSet& basis, const ArrayGeometry& geometry,
                    double wave_impedance = kFreeSpaceImpedance);

  /// Weight for the (seg_m, seg_n) midpoint sample of basis pair (m, n).
  /// Segments must lie in the respective supports.
  cdouble weight(int basis_m, int seg_m, int basis_n, int seg_n) const;

  double wave_impedance() const { return z0_; }

 private:
  BasisSet basis_;
  ArrayGeometry geometry_;
  double z0_;
  double k_;
};

/// Full MoM system: basis impedance matrix, port selection, port excitation.
struct MoMSystem {
  CMatrix impedance;            // T' x T'
  std::vector<int> port_basis;  // one basis index per element, all distinct
  CVector excitation;           // per-port delta-gap volts
  double frequency_hz = 0.0;

  int port_count() const { return static_cast<int>(port_basis.size()); }
  /// Dense 0/1 port selection matrix, P x T'.
  Eigen::MatrixXd port_matrix() const;
};

struct PortImpedance {
  CMatrix entries;  // P x P
  double frequency_hz = 0.0;
};

struct SolveOptions {
  int quadrature_order = 3;        // Gauss points per segment, 1..8
  double condition_limit = 1e12;   // reject factorizations beyond this
};

/// Galerkin assembly of the thin-wire impedance matrix. The port of each
/// dipole is the basis whose peak is nearest the dipole center; the default
/// excitation is a 1 V delta gap at each port.
MoMSystem assemble_impedance(const ArrayGeometry& geometry,
                             const SolveOptions& options = {});

/// Solve Z*I = V for the basis currents. V has one entry per basis.
CVector solve_currents(const MoMSystem& system, const CVector& voltage,
                       const SolveOptions& options = {});

/// Reduce to the port impedance matrix (M Z^-1 M^T)^-1.
PortImpedance port_reduce(const MoMSystem& system, const SolveOptions& options = {});

/// Scattering matrix (Z - Z0*I)(Z + Z0*I)^-1 for a real reference impedance.
CMatrix z_to_s(const PortImpedance& zport, double ref_ohms = 50.0);

struct SweepPoint {
  double frequency_hz = 0.0;
  PortImpedance zport;
  CMatrix s;
};

std::vector<SweepPoint> frequency_sweep(const ArrayGeometry& geometry, double f_start,
                                        double f_stop, int n_points,
                                        double ref_ohms = 50.0,
                                        const SolveOptions& options = {});

/// 1-norm condition estimate of a square complex matrix from its LU
/// factorization (Higham's estimator).
double condition_estimate_1norm(const CMatrix& a,
                                const Eigen::PartialPivLU<CMatrix>& lu);

}  // namespace dpa::mom

#endif  // DIPOLEARRAY_MOM_HPP
