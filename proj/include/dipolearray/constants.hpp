// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#ifndef DIPOLEARRAY_CONSTANTS_HPP
#define DIPOLEARRAY_CONSTANTS_HPP

#include <complex>
#include <numbers>

namespace dpa {

using cdouble = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

/// Speed of light in vacuum, m/s (exact, SI).
inline constexpr double kSpeedOfLight = 299'792'458.0;

/// Vacuum permeability, H/m (legacy exact value 4*pi*1e-7).
inline constexpr double kMu0 = 4.0 * kPi * 1e-7;

/// Free-space wave impedance, ohms: Z0 = mu0 * c.
inline constexpr double kFreeSpaceImpedance = kMu0 * kSpeedOfLight;

inline constexpr cdouble kImagUnit{0.0, 1.0};

}  // namespace dpa

#endif  // DIPOLEARRAY_CONSTANTS_HPP
