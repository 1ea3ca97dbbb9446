// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#ifndef DIPOLEARRAY_GEOMETRY_HPP
#define DIPOLEARRAY_GEOMETRY_HPP

#include <Eigen/Dense>
#include <vector>

#include "dipolearray/constants.hpp"

namespace dpa {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Thin-wire dipole: length l, wire radius r, N equal segments along the axis.
struct DipoleSpec {
  double length_m = 0.0;
  double radius_m = 0.0;
  int segments = 0;

  double segment_length() const { return length_m / segments; }
  void validate() const;
};

/// Parallel z-directed dipoles, element axes at x = positions_m[i], all centered
/// on z = 0, driven at a single operating frequency.
struct ArrayGeometry {
  DipoleSpec dipole;
  std::vector<double> positions_m;
  double frequency_hz = 0.0;

  int element_count() const { return static_cast<int>(positions_m.size()); }
  int total_segments() const { return element_count() * dipole.segments; }
  double wavelength() const;
  double wavenumber() const { return 2.0 * kPi * frequency_hz / kSpeedOfLight; }
  /// Axis coordinate of the center of local segment s (0-based).
  double segment_center_z(int s) const;
  std::vector<double> spacings() const;
  void validate() const;

  static ArrayGeometry from_spacings(const DipoleSpec& dipole,
                                     const std::vector<double>& spacings_m,
                                     double frequency_hz);
};

enum class GreenKind {
  Full,               // exp(-jkR)/(4*pi*R), units 1/m
  FrequencyFactored,  // exp(-j*pi*delta/N)/delta, dimensionless
};

/// Symmetric T x T matrix of Green's function samples over segment centers,
/// T = element_count * segments. Diagonal uses the thin-wire self term
/// (distance regularized to the wire radius).
struct GreenMatrix {
  CMatrix entries;
  GreenKind kind = GreenKind::Full;
  int side() const { return static_cast<int>(entries.rows()); }
};

/// Free-space wavelength c/f. Throws std::domain_error for f <= 0.
double wavelength(double frequency_hz);

/// Scalar free-space Green's function exp(-j*k*R)/(4*pi*R), R > 0.
cdouble scalar_green(double distance_m, double wavenumber);

/// Frequency factor f*N/(2*pi*c), 1/m.
double k_factor(double frequency_hz, int segments);

/// Dimensionless factored Green term exp(-j*pi*delta/N)/delta for integer
/// segment offset delta >= 1 on the uniform per-dipole grid.
cdouble factored_green(int delta, int segments);

/// Factored term at a real-valued offset (cross-element distances and the
/// thin-wire self term, both expressed in units of the segment length).
cdouble factored_green_at(double delta, int segments);

GreenMatrix green_matrix(const ArrayGeometry& geometry, GreenKind kind);

}  // namespace dpa

#endif  // DIPOLEARRAY_GEOMETRY_HPP
