// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#ifndef DIPOLEARRAY_DATASET_HPP
#define DIPOLEARRAY_DATASET_HPP

#include <cstdint>
#include <vector>

#include "dipolearray/geometry.hpp"

namespace dpa {

/// One training example: a layout and its solver-computed port impedance.
struct DatasetSample {
  ArrayGeometry geometry;
  CMatrix z_port;
};

struct Dataset {
  std::vector<DatasetSample> samples;
  std::uint64_t seed = 0;

  int element_count() const {
    return samples.empty() ? 0 : samples.front().geometry.element_count();
  }
};

}  // namespace dpa

#endif  // DIPOLEARRAY_DATASET_HPP
