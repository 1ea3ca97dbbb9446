// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 dipolearray contributors

#include "dipolearray/io.hpp"

#include <fstream>
#include <sstream>

#include "dipolearray/packing.hpp"

namespace dpa::io {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

json dense_layer_to_json(const std::string& name, const nn::DenseLayer& layer) {
  return json{{"name", name},
              {"rows", layer.out_size()},
              {"cols", layer.in_size()},
              {"weights", matrix_to_json(layer.weights)["data"]},
              {"bias", vector_to_json(layer.bias)},
              {"activation", nn::activation_name(layer.activation)}};
}

nn::DenseLayer dense_layer_from_json(const json& j) {
  nn::DenseLayer layer;
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  json m{{"rows", rows}, {"cols", cols}, {"data", j.at("weights")}};
  layer.weights = matrix_from_json(m);
  layer.bias = vector_from_json(j.at("bias"));
  layer.activation = nn::activation_from_name(j.at("activation").get<std::string>());
  return layer;
}

json lstm_to_json(const pclstm::LstmStack& stack) {
  json layers = json::array();
  for (const auto& layer : stack.layers)
    layers.push_back(
        {{"w", matrix_to_json(layer.w)}, {"b", vector_to_json(layer.b)}});
  return json{{"hidden", stack.hidden}, {"layers", layers}};
}

pclstm::LstmStack lstm_from_json(const json& j) {
  pclstm::LstmStack stack;
  stack.hidden = j.at("hidden").get<int>();
  for (const auto& layer_json : j.at("layers")) {
    pclstm::LstmLayer layer;
    layer.w = matrix_from_json(layer_json.at("w"));
    layer.b = vector_from_json(layer_json.at("b"));
    stack.layers.push_back(std::move(layer));
  }
  return stack;
}

}  // namespace

json matrix_to_json(const nn::Matrix& m) {
  json data = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

nn::Matrix matrix_from_json(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto& data = j.at("data");
  if (static_cast<int>(data.size()) != rows * cols)
    throw std::invalid_argument("matrix_from_json: shape/data mismatch");
  nn::Matrix m(rows, cols);
  int k = 0;
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = data[k++].get<double>();
  return m;
}

json vector_to_json(const nn::Vector& v) {
  json data = json::array();
  for (int i = 0; i < v.size(); ++i) data.push_back(v(i));
  return data;
}

nn::Vector vector_from_json(const json& j) {
  nn::Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

json geometry_to_json(const ArrayGeometry& geometry) {
  return json{{"schema_version", kSchemaVersion},
              {"length_m", geometry.dipole.length_m},
              {"radius_m", geometry.dipole.radius_m},
              {"segments", geometry.dipole.segments},
              {"frequency_hz", geometry.frequency_hz},
              {"positions_m", geometry.positions_m}};
}

ArrayGeometry geometry_from_json(const json& j) {
  ArrayGeometry g;
  g.dipole.length_m = j.at("length_m").get<double>();
  g.dipole.radius_m = j.at("radius_m").get<double>();
  g.dipole.segments = j.at("segments").get<int>();
  g.frequency_hz = j.at("frequency_hz").get<double>();
  if (j.contains("positions_m")) {
    g.positions_m = j.at("positions_m").get<std::vector<double>>();
  } else if (j.contains("spacings_m")) {
    return ArrayGeometry::from_spacings(
        g.dipole, j.at("spacings_m").get<std::vector<double>>(), g.frequency_hz);
  } else {
    throw std::invalid_argument("geometry needs positions_m or spacings_m");
  }
  g.validate();
  return g;
}

ArrayGeometry load_geometry(const std::filesystem::path& path) {
  return geometry_from_json(read_json(path));
}

std::string green_to_csv(const GreenMatrix& green) {
  std::ostringstream os;
  os << "m,n,re,im\n";
  for (int m = 0; m < green.side(); ++m)
    for (int n = 0; n < green.side(); ++n)
      os << m << ',' << n << ',' << fmt(green.entries(m, n).real()) << ','
         << fmt(green.entries(m, n).imag()) << '\n';
  return os.str();
}

json green_to_json(const ArrayGeometry& geometry, const GreenMatrix& green) {
  json entries = json::array();
  for (int m = 0; m < green.side(); ++m)
    for (int n = 0; n < green.side(); ++n)
      entries.push_back({green.entries(m, n).real(), green.entries(m, n).imag()});
  return json{{"schema_version", kSchemaVersion},
              {"geometry", geometry_to_json(geometry)},
              {"kind", green.kind == GreenKind::Full ? "full" : "frequency_factored"},
              {"side", green.side()},
              {"entries", entries}};
}

std::string cmatrix_to_csv(const CMatrix& m) {
  std::ostringstream os;
  os << "p,q,re,im\n";
  for (int p = 0; p < m.rows(); ++p)
    for (int q = 0; q < m.cols(); ++q)
      os << p << ',' << q << ',' << fmt(m(p, q).real()) << ',' << fmt(m(p, q).imag())
         << '\n';
  return os.str();
}

json cmatrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (int p = 0; p < m.rows(); ++p) {
    json row = json::array();
    for (int q = 0; q < m.cols(); ++q)
      row.push_back({m(p, q).real(), m(p, q).imag()});
    rows.push_back(row);
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", rows}};
}

CMatrix cmatrix_from_json(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  CMatrix m(rows, cols);
  const auto& entries = j.at("entries");
  for (int p = 0; p < rows; ++p)
    for (int q = 0; q < cols; ++q)
      m(p, q) = cdouble{entries[p][q][0].get<double>(), entries[p][q][1].get<double>()};
  return m;
}

std::string sweep_to_csv(const std::vector<mom::SweepPoint>& sweep) {
  std::ostringstream os;
  os << "f_hz";
  if (!sweep.empty()) {
    const int p = static_cast<int>(sweep.front().s.rows());
    for (int i = 0; i < p; ++i)
      for (int j = i; j < p; ++j)
        os << ",s" << i + 1 << j + 1 << "_re,s" << i + 1 << j + 1 << "_im";
    for (int i = 0; i < p; ++i)
      for (int j = i; j < p; ++j)
        os << ",z" << i + 1 << j + 1 << "_re,z" << i + 1 << j + 1 << "_im";
  }
  os << '\n';
  for (const auto& pt : sweep) {
    os << fmt(pt.frequency_hz);
    const int p = static_cast<int>(pt.s.rows());
    for (int i = 0; i < p; ++i)
      for (int j = i; j < p; ++j)
        os << ',' << fmt(pt.s(i, j).real()) << ',' << fmt(pt.s(i, j).imag());
    for (int i = 0; i < p; ++i)
      for (int j = i; j < p; ++j)
        os << ',' << fmt(pt.zport.entries(i, j).real()) << ','
           << fmt(pt.zport.entries(i, j).imag());
    os << '\n';
  }
  return os.str();
}

json pann_to_json(const pann::PannModel& model) {
  json layers = json::array();
  for (std::size_t i = 0; i < model.layers.size(); ++i)
    layers.push_back(
        dense_layer_to_json("layer" + std::to_string(i), model.layers[i]));
  return json{{"schema_version", kSchemaVersion},
              {"kind", "pann"},
              {"seed", model.seed},
              {"segments", model.segments},
              {"diag_delta", model.diag_delta},
              {"in_mean", vector_to_json(model.in_mean)},
              {"in_std", vector_to_json(model.in_std)},
              {"in_lo", vector_to_json(model.in_lo)},
              {"in_hi", vector_to_json(model.in_hi)},
              {"layers", layers},
              {"optimizer",
               {{"type", "sgd_momentum"},
                {"momentum", model.momentum},
                {"lr_start", model.lr_start},
                {"lr_end", model.lr_end}}},
              {"epoch", model.epochs_trained},
              {"loss", model.final_total}};
}

pann::PannModel pann_from_json(const json& j) {
  pann::PannModel model;
  model.seed = j.at("seed").get<std::uint64_t>();
  model.segments = j.at("segments").get<int>();
  model.diag_delta = j.at("diag_delta").get<double>();
  model.in_mean = vector_from_json(j.at("in_mean"));
  model.in_std = vector_from_json(j.at("in_std"));
  model.in_lo = vector_from_json(j.at("in_lo"));
  model.in_hi = vector_from_json(j.at("in_hi"));
  for (const auto& layer : j.at("layers")) model.layers.push_back(dense_layer_from_json(layer));
  model.epochs_trained = j.at("epoch").get<int>();
  model.final_total = j.at("loss").get<double>();
  const auto& opt = j.at("optimizer");
  model.momentum = opt.value("momentum", 0.9);
  model.lr_start = opt.value("lr_start", 2e-3);
  model.lr_end = opt.value("lr_end", 2e-3);
  return model;
}

std::string pann_history_to_csv(const pann::AdaptiveLossState& state) {
  std::ostringstream os;
  os << "epoch,L_r,L_i,w_r,w_i,L_total\n";
  for (const auto& r : state.history)
    os << r.epoch << ',' << fmt(r.loss_r) << ',' << fmt(r.loss_i) << ',' << fmt(r.w_r)
       << ',' << fmt(r.w_i) << ',' << fmt(r.total) << '\n';
  return os.str();
}

std::string epoch_history_to_csv(const std::vector<pclstm::EpochLoss>& history) {
  std::ostringstream os;
  os << "epoch,loss\n";
  for (const auto& r : history) os << r.epoch << ',' << fmt(r.loss) << '\n';
  return os.str();
}

json bundle_to_json(const pclstm::ModelBundle& bundle) {
  json j{{"schema_version", kSchemaVersion},
         {"kind", "model_bundle"},
         {"seed", bundle.seed},
         {"dipole",
          {{"length_m", bundle.dipole.length_m},
           {"radius_m", bundle.dipole.radius_m},
           {"segments", bundle.dipole.segments}}},
         {"frequency_hz", bundle.frequency_hz},
         {"cutoff_lambda", bundle.cutoff_lambda},
         {"green_net", pann_to_json(bundle.green_net)},
         {"fusion",
          {{"grid_side", bundle.fusion_params.grid_side},
           {"map_r", dense_layer_to_json("map_r", bundle.fusion_params.map_r)},
           {"map_i", dense_layer_to_json("map_i", bundle.fusion_params.map_i)},
           {"attn", dense_layer_to_json("attn", bundle.fusion_params.attn)}}},
         {"kernel",
          {{"side", bundle.kernel.side},
           {"decay", bundle.kernel.decay},
           {"weights", matrix_to_json(bundle.kernel.weights)}}},
         {"lstm", lstm_to_json(bundle.lstm)},
         {"head_w", matrix_to_json(bundle.head_w)},
         {"head_b", vector_to_json(bundle.head_b)},
         {"scalar_mean", vector_to_json(bundle.scalar_mean)},
         {"scalar_std", vector_to_json(bundle.scalar_std)},
         {"spacing_lo_m", bundle.spacing_lo_m},
         {"spacing_hi_m", bundle.spacing_hi_m},
         {"target_mean", vector_to_json(bundle.target_mean)},
         {"target_std", vector_to_json(bundle.target_std)},
         {"optimizer", {{"type", "adam"}, {"beta1", 0.9}, {"beta2", 0.999}, {"epsilon", 1e-8}}},
         {"epoch", bundle.epochs_trained},
         {"loss", bundle.final_loss},
         {"trained", bundle.trained}};
  if (bundle.stage2.trained) {
    j["stage2"] = json{{"max_elements", bundle.stage2.max_elements},
                       {"lstm", lstm_to_json(bundle.stage2.lstm)},
                       {"dec_hidden", dense_layer_to_json("dec_hidden",
                                                          bundle.stage2.dec_hidden)},
                       {"dec_out", dense_layer_to_json("dec_out", bundle.stage2.dec_out)},
                       {"re_mean", bundle.stage2.re_mean},
                       {"re_std", bundle.stage2.re_std},
                       {"im_mean", bundle.stage2.im_mean},
                       {"im_std", bundle.stage2.im_std}};
  }
  return j;
}

pclstm::ModelBundle bundle_from_json(const json& j) {
  pclstm::ModelBundle bundle;
  bundle.seed = j.at("seed").get<std::uint64_t>();
  bundle.dipole.length_m = j.at("dipole").at("length_m").get<double>();
  bundle.dipole.radius_m = j.at("dipole").at("radius_m").get<double>();
  bundle.dipole.segments = j.at("dipole").at("segments").get<int>();
  bundle.frequency_hz = j.at("frequency_hz").get<double>();
  bundle.cutoff_lambda = j.at("cutoff_lambda").get<double>();
  bundle.green_net = pann_from_json(j.at("green_net"));
  bundle.fusion_params.grid_side = j.at("fusion").at("grid_side").get<int>();
  bundle.fusion_params.map_r = dense_layer_from_json(j.at("fusion").at("map_r"));
  bundle.fusion_params.map_i = dense_layer_from_json(j.at("fusion").at("map_i"));
  bundle.fusion_params.attn = dense_layer_from_json(j.at("fusion").at("attn"));
  bundle.kernel.side = j.at("kernel").at("side").get<int>();
  bundle.kernel.decay = j.at("kernel").at("decay").get<double>();
  bundle.kernel.weights = matrix_from_json(j.at("kernel").at("weights"));
  bundle.lstm = lstm_from_json(j.at("lstm"));
  bundle.head_w = matrix_from_json(j.at("head_w"));
  bundle.head_b = vector_from_json(j.at("head_b"));
  bundle.scalar_mean = vector_from_json(j.at("scalar_mean"));
  bundle.scalar_std = vector_from_json(j.at("scalar_std"));
  bundle.spacing_lo_m = j.at("spacing_lo_m").get<double>();
  bundle.spacing_hi_m = j.at("spacing_hi_m").get<double>();
  bundle.target_mean = vector_from_json(j.at("target_mean"));
  bundle.target_std = vector_from_json(j.at("target_std"));
  bundle.epochs_trained = j.at("epoch").get<int>();
  bundle.final_loss = j.at("loss").get<double>();
  bundle.trained = j.at("trained").get<bool>();
  if (j.contains("stage2")) {
    const auto& s2 = j.at("stage2");
    bundle.stage2.trained = true;
    bundle.stage2.max_elements = s2.at("max_elements").get<int>();
    bundle.stage2.lstm = lstm_from_json(s2.at("lstm"));
    bundle.stage2.dec_hidden = dense_layer_from_json(s2.at("dec_hidden"));
    bundle.stage2.dec_out = dense_layer_from_json(s2.at("dec_out"));
    bundle.stage2.re_mean = s2.at("re_mean").get<double>();
    bundle.stage2.re_std = s2.at("re_std").get<double>();
    bundle.stage2.im_mean = s2.at("im_mean").get<double>();
    bundle.stage2.im_std = s2.at("im_std").get<double>();
  }
  return bundle;
}

void save_bundle(const pclstm::ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << bundle_to_json(bundle).dump();  // compact: bundles are large
}

pclstm::ModelBundle load_bundle(const std::filesystem::path& path) {
  return bundle_from_json(read_json(path));
}

std::string dataset_to_jsonl(const Dataset& dataset) {
  std::ostringstream os;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    const nn::Vector packed = pack_symmetric(s.z_port);
    json line{{"geometry", geometry_to_json(s.geometry)},
              {"z_port",
               {{"ports", s.z_port.rows()}, {"packed", vector_to_json(packed)}}},
              {"meta", {{"seed", dataset.seed}, {"index", i}}}};
    os << line.dump() << '\n';
  }
  return os.str();
}

Dataset dataset_from_jsonl(const std::string& text) {
  Dataset out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    DatasetSample sample;
    sample.geometry = geometry_from_json(j.at("geometry"));
    const int ports = j.at("z_port").at("ports").get<int>();
    sample.z_port =
        unpack_symmetric(vector_from_json(j.at("z_port").at("packed")), ports);
    out.seed = j.at("meta").at("seed").get<std::uint64_t>();
    out.samples.push_back(std::move(sample));
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_text(path, dataset_to_jsonl(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_jsonl(read_text(path));
}

std::string synthesized_to_csv(const synth::SynthesizedMatrix& result) {
  std::ostringstream os;
  os << "index,re_or_im,value\n";
  const int half = static_cast<int>(result.packed.size()) / 2;
  for (int i = 0; i < result.packed.size(); ++i)
    os << i << ',' << (i < half ? "re" : "im") << ',' << fmt(result.packed(i)) << '\n';
  return os.str();
}

json synthesized_to_json(const synth::SynthesizedMatrix& result) {
  return json{{"schema_version", kSchemaVersion},
              {"packed", vector_to_json(result.packed)},
              {"matrix", cmatrix_to_json(result.reconstructed)},
              {"extrapolation", result.extrapolation}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_json(const std::filesystem::path& path, const json& j, int indent) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(indent) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  return json::parse(in);
}

}  // namespace dpa::io
