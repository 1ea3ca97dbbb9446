// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#ifndef DIPOLEARRAY_PACKING_HPP
#define DIPOLEARRAY_PACKING_HPP

#include <Eigen/Dense>
#include <stdexcept>

#include "dipolearray/constants.hpp"

namespace dpa {

/// Upper-triangle packing of a symmetric n x n complex matrix: the first
/// n(n+1)/2 reals are the real parts (row-major, diagonal included), the
/// second n(n+1)/2 the imaginary parts.

inline int upper_tri_count(int n) { return n * (n + 1) / 2; }

inline int upper_tri_index(int i, int j, int n) {
  if (i > j || i < 0 || j >= n) throw std::out_of_range("upper_tri_index: need 0 <= i <= j < n");
  return i * n - i * (i - 1) / 2 + (j - i);
}

inline Eigen::VectorXd pack_symmetric(const Eigen::MatrixXcd& m) {
  const int n = static_cast<int>(m.rows());
  if (m.cols() != n) throw std::invalid_argument("pack_symmetric: matrix must be square");
  const int h = upper_tri_count(n);
  Eigen::VectorXd out(2 * h);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const int k = upper_tri_index(i, j, n);
      out(k) = m(i, j).real();
      out(h + k) = m(i, j).imag();
    }
  return out;
}

inline Eigen::MatrixXcd unpack_symmetric(const Eigen::VectorXd& packed, int n) {
  const int h = upper_tri_count(n);
  if (packed.size() != 2 * h)
    throw std::invalid_argument("unpack_symmetric: packed length must be n(n+1)");
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const int k = upper_tri_index(i, j, n);
      const cdouble v{packed(k), packed(h + k)};
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

/// Mirror an upper-triangle real vector (length n(n+1)/2) into a full
/// symmetric n x n matrix.
inline Eigen::MatrixXd unpack_upper_real(const Eigen::VectorXd& upper, int n) {
  if (upper.size() != upper_tri_count(n))
    throw std::invalid_argument("unpack_upper_real: length must be n(n+1)/2");
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = upper(upper_tri_index(i, j, n));
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

}  // namespace dpa

#endif  // DIPOLEARRAY_PACKING_HPP
