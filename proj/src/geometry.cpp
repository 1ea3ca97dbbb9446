// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#include "dipolearray/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpa {

void DipoleSpec::validate() const {
  if (length_m <= 0.0) throw std::domain_error("dipole length must be positive");
  if (radius_m <= 0.0) throw std::domain_error("dipole radius must be positive");
  if (radius_m >= length_m / 50.0)
    throw std::domain_error("thin-wire model requires radius < length/50");
  if (segments < 2) throw std::domain_error("dipole needs at least 2 segments");
}

double ArrayGeometry::wavelength() const { return dpa::wavelength(frequency_hz); }

double ArrayGeometry::segment_center_z(int s) const {
  const double dl = dipole.segment_length();
  return -0.5 * dipole.length_m + (s + 0.5) * dl;
}

std::vector<double> ArrayGeometry::spacings() const {
  std::vector<double> d;
  d.reserve(positions_m.size() > 0 ? positions_m.size() - 1 : 0);
  for (std::size_t i = 1; i < positions_m.size(); ++i)
    d.push_back(positions_m[i] - positions_m[i - 1]);
  return d;
}

void ArrayGeometry::validate() const {
  dipole.validate();
  if (frequency_hz <= 0.0) throw std::domain_error("frequency must be positive");
  if (positions_m.empty()) throw std::domain_error("array needs at least one element");
  for (std::size_t i = 1; i < positions_m.size(); ++i) {
    if (positions_m[i] <= positions_m[i - 1])
      throw std::domain_error("element positions must be strictly increasing");
  }
}

ArrayGeometry ArrayGeometry::from_spacings(const DipoleSpec& dipole,
                                           const std::vector<double>& spacings_m,
                                           double frequency_hz) {
  ArrayGeometry g;
  g.dipole = dipole;
  g.frequency_hz = frequency_hz;
  g.positions_m.reserve(spacings_m.size() + 1);
  double x = 0.0;
  g.positions_m.push_back(x);
  for (double d : spacings_m) {
    if (d <= 0.0) throw std::domain_error("spacings must be positive");
    x += d;
    g.positions_m.push_back(x);
  }
  g.validate();
  return g;
}

double wavelength(double frequency_hz) {
  if (frequency_hz <= 0.0) throw std::domain_error("frequency must be positive");
  return kSpeedOfLight / frequency_hz;
}

cdouble scalar_green(double distance_m, double wavenumber) {
  if (distance_m <= 0.0)
    throw std::domain_error("scalar Green's function needs a positive distance");
  return std::polar(1.0, -wavenumber * distance_m) / (4.0 * kPi * distance_m);
}

double k_factor(double frequency_hz, int segments) {
  if (frequency_hz <= 0.0) throw std::domain_error("frequency must be positive");
  if (segments < 1) throw std::domain_error("segments must be >= 1");
  return frequency_hz * segments / (2.0 * kPi * kSpeedOfLight);
}

cdouble factored_green(int delta, int segments) {
  if (delta < 1)
    throw std::domain_error("factored Green term undefined at delta = 0 "
                            "(self term is a solver policy)");
  if (segments < 1) throw std::domain_error("segments must be >= 1");
  return factored_green_at(static_cast<double>(delta), segments);
}

cdouble factored_green_at(double delta, int segments) {
  if (delta <= 0.0) throw std::domain_error("offset must be positive");
  return std::polar(1.0, -kPi * delta / segments) / delta;
}

GreenMatrix green_matrix(const ArrayGeometry& geometry, GreenKind kind) {
  geometry.validate();
  const int n_seg = geometry.dipole.segments;
  const int total = geometry.total_segments();
  const double dl = geometry.dipole.segment_length();
  const double k = geometry.wavenumber();
  const double radius = geometry.dipole.radius_m;

  GreenMatrix out;
  out.kind = kind;
  out.entries.resize(total, total);

  for (int m = 0; m < total; ++m) {
    const int em = m / n_seg;
    const int sm = m % n_seg;
    for (int n = m; n < total; ++n) {
      const int en = n / n_seg;
      const int sn = n % n_seg;
      cdouble value;
      if (em == en) {
        const int delta = sn - sm;
        if (delta == 0) {
          // Thin-wire self term: distance regularized to the wire radius.
          value = (kind == GreenKind::Full)
                      ? scalar_green(radius, k)
                      : factored_green_at(radius / dl, n_seg);
        } else {
          value = (kind == GreenKind::Full)
                      ? scalar_green(delta * dl, k)
                      : factored_green(delta, n_seg);
        }
      } else {
        const double dz = geometry.segment_center_z(sn) - geometry.segment_center_z(sm);
        const double dx = geometry.positions_m[en] - geometry.positions_m[em];
        const double r = std::hypot(dz, dx);
        value = (kind == GreenKind::Full) ? scalar_green(r, k)
                                          : factored_green_at(r / dl, n_seg);
      }
      out.entries(m, n) = value;
      out.entries(n, m) = value;
    }
  }
  return out;
}

}  // namespace dpa
