// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#ifndef DIPOLEARRAY_IO_HPP
#define DIPOLEARRAY_IO_HPP

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dipolearray/dataset.hpp"
#include "dipolearray/mom.hpp"
#include "dipolearray/pann.hpp"
#include "dipolearray/pclstm.hpp"
#include "dipolearray/synth.hpp"

namespace dpa::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Eigen helpers: matrices are stored row-major with explicit shape.
json matrix_to_json(const nn::Matrix& m);
nn::Matrix matrix_from_json(const json& j);
json vector_to_json(const nn::Vector& v);
nn::Vector vector_from_json(const json& j);

json geometry_to_json(const ArrayGeometry& geometry);
/// Accepts either positions_m or spacings_m.
ArrayGeometry geometry_from_json(const json& j);
ArrayGeometry load_geometry(const std::filesystem::path& path);

std::string green_to_csv(const GreenMatrix& green);
json green_to_json(const ArrayGeometry& geometry, const GreenMatrix& green);

/// Complex matrix as `p,q,re,im` rows.
std::string cmatrix_to_csv(const CMatrix& m);
json cmatrix_to_json(const CMatrix& m);
CMatrix cmatrix_from_json(const json& j);

/// Sweep CSV: frequency, upper-triangle S entries, upper-triangle Z entries.
std::string sweep_to_csv(const std::vector<mom::SweepPoint>& sweep);

json pann_to_json(const pann::PannModel& model);
pann::PannModel pann_from_json(const json& j);

std::string pann_history_to_csv(const pann::AdaptiveLossState& state);
std::string epoch_history_to_csv(const std::vector<pclstm::EpochLoss>& history);

json bundle_to_json(const pclstm::ModelBundle& bundle);
pclstm::ModelBundle bundle_from_json(const json& j);
void save_bundle(const pclstm::ModelBundle& bundle, const std::filesystem::path& path);
pclstm::ModelBundle load_bundle(const std::filesystem::path& path);

/// JSON-lines dataset: one {geometry, z_port, meta} object per line.
std::string dataset_to_jsonl(const Dataset& dataset);
Dataset dataset_from_jsonl(const std::string& text);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

std::string synthesized_to_csv(const synth::SynthesizedMatrix& result);
json synthesized_to_json(const synth::SynthesizedMatrix& result);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j, int indent = 2);
json read_json(const std::filesystem::path& path);

}  // namespace dpa::io

#endif  // DIPOLEARRAY_IO_HPP
