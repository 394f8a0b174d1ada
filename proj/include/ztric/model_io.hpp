#pragma once

// Model file (JSON):
//
//   {"version":1,
//    "dims":[50,30,15,7,2],
//    "activations":["fused_linear_relu",...,"linear"],     one per weight layer
//    "float_weights":[ [[...],...], ... ],                  per layer, inputs x outputs
//    "float_biases":[ [...], ... ],
//    "q_weights":[ [[...],...], ... ],                      optional block: quantized model
//    "q_biases":[ [...], ... ],
//    "quant":[{"scale":s,"zero_point":z}, ...],             activation params: input, then each layer output
//    "weight_quant":[{"scale":s,"zero_point":z}, ...],      per layer
//    "requant":[{"multiplier":m,"shift":k}, ...]}           per hidden (fused) layer
//
// A file without "q_weights" describes only the float model. The loader
// rejects any file that violates the quantized-model invariants.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ztric/errors.hpp"
#include "ztric/matrix.hpp"
#include "ztric/quantizer.hpp"

namespace ztric {

struct ModelFile {
  FloatModel float_model;  // fused or unfused, as stored
  std::optional<QuantizedModel> quantized;
};

namespace model_io {

using nlohmann::json;

inline constexpr int kVersion = 1;

template <typename T>
json matrix_to_json(const Matrix<T>& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<T>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

template <typename T>
Matrix<T> matrix_from_json(const json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j.at(0).size() : 0;
  Matrix<T> m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (row.size() != cols) throw ParseError("model: ragged weight matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row.at(c).get<T>();
  }
  return m;
}

inline json qp_to_json(const QuantParams& qp) { return {{"scale", qp.scale}, {"zero_point", qp.zero_point}}; }

inline QuantParams qp_from_json(const json& j) {
  QuantParams qp{j.at("scale").get<double>(), j.at("zero_point").get<std::int64_t>()};
  if (!(qp.scale > 0.0)) throw ParseError("model: quant scale must be positive");
  return qp;
}

inline json to_json(const FloatModel& fm, const QuantizedModel* qm = nullptr) {
  json out;
  out["version"] = kVersion;
  out["dims"] = fm.dims();
  json acts = json::array(), fw = json::array(), fb = json::array();
  // Relu layers are recorded by tagging the preceding linear layer.
  for (std::size_t i = 0; i < fm.layers.size(); ++i) {
    const auto& l = fm.layers[i];
    if (!l.has_weights()) continue;
    const bool relu_next = i + 1 < fm.layers.size() && fm.layers[i + 1].kind == LayerKind::Relu;
    acts.push_back(relu_next ? "linear+relu" : to_string(l.kind));
    fw.push_back(matrix_to_json(l.weights));
    fb.push_back(l.bias);
  }
  out["activations"] = acts;
  out["float_weights"] = fw;
  out["float_biases"] = fb;
  if (qm) {
    json qw = json::array(), qb = json::array(), quant = json::array(), wq = json::array(), rq = json::array();
    quant.push_back(qp_to_json(qm->input_params()));
    for (const auto& l : qm->layers) {
      qw.push_back(matrix_to_json(l.q_weights));
      qb.push_back(l.q_bias);
      quant.push_back(qp_to_json(l.output));
      wq.push_back(qp_to_json(l.weight));
      if (l.fused_relu) rq.push_back({{"multiplier", l.requant.multiplier}, {"shift", l.requant.shift}});
    }
    out["q_weights"] = qw;
    out["q_biases"] = qb;
    out["quant"] = quant;
    out["weight_quant"] = wq;
    out["requant"] = rq;
  }
  return out;
}

// Throws ParseError naming the first violated invariant.
inline void validate_quantized(const QuantizedModel& qm) {
  if (qm.layers.size() < 1) throw ParseError("model: quantized model has no layers");
  for (std::size_t k = 0; k < qm.layers.size(); ++k) {
    const auto& l = qm.layers[k];
    const bool last = k + 1 == qm.layers.size();
    if (l.fused_relu == last) throw ParseError("model: only the final layer may be unfused");
    if (l.q_bias.size() != l.outputs()) throw ParseError("model: q_bias length mismatch at layer " + std::to_string(k));
    if (k > 0 && qm.layers[k - 1].outputs() != l.inputs()) throw ParseError("model: dims chain broken at layer " + std::to_string(k));
    for (const auto* qp : {&l.input, &l.weight, &l.output}) {
      if (!(qp->scale > 0.0)) throw ParseError("model: non-positive scale at layer " + std::to_string(k));
      if (qp->zero_point < kQuantMin || qp->zero_point > kQuantMax)
        throw ParseError("model: zero point outside [0, 255] at layer " + std::to_string(k));
    }
    if (k == 0) {
      if (l.weight.zero_point != 0) throw ParseError("model: first-layer weight zero point must be 0");
      if (l.input.zero_point != 0) throw ParseError("model: network input zero point must be 0");
      for (auto v : l.q_weights.flat())
        if (v < -kSignedWeightMax || v > kSignedWeightMax)
          throw ParseError("model: first-layer weight outside [-127, 127]");
    } else {
      for (auto v : l.q_weights.flat())
        if (v < kQuantMin || v > kQuantMax) throw ParseError("model: weight outside [0, 255] at layer " + std::to_string(k));
    }
    if (l.fused_relu && l.requant.multiplier <= 0) throw ParseError("model: missing requant multiplier at layer " + std::to_string(k));
  }
}

inline ModelFile from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kVersion) throw ParseError("model: unsupported version");
    const auto dims = j.at("dims").get<std::vector<std::size_t>>();
    const auto& acts = j.at("activations");
    const auto& fw = j.at("float_weights");
    const auto& fb = j.at("float_biases");
    if (dims.size() < 2) throw ParseError("model: dims needs input and output");
    const std::size_t L = dims.size() - 1;
    if (acts.size() != L || fw.size() != L || fb.size() != L) throw ParseError("model: per-layer arrays must match dims");
    if (dims.back() != 2) throw ParseError("model: output layer must have 2 classes");

    ModelFile mf;
    for (std::size_t k = 0; k < L; ++k) {
      FloatLayer fl;
      const auto tag = acts.at(k).get<std::string>();
      fl.kind = tag == "linear+relu" ? LayerKind::Linear : layer_kind_from_string(tag);
      fl.weights = matrix_from_json<double>(fw.at(k));
      fl.bias = fb.at(k).get<std::vector<double>>();
      if (fl.weights.rows() != dims[k] || fl.weights.cols() != dims[k + 1])
        throw ParseError("model: float weights of layer " + std::to_string(k) + " do not match dims");
      mf.float_model.layers.push_back(std::move(fl));
      if (tag == "linear+relu") mf.float_model.layers.push_back({LayerKind::Relu, {}, {}});
    }
    try {
      check_model(mf.float_model);
    } catch (const Error& e) {
      throw ParseError(std::string("model: ") + e.what());
    }

    if (j.contains("q_weights")) {
      const auto& qw = j.at("q_weights");
      const auto& qb = j.at("q_biases");
      const auto& quant = j.at("quant");
      const auto& wq = j.at("weight_quant");
      const auto& rq = j.at("requant");
      if (qw.size() != L || qb.size() != L || wq.size() != L || quant.size() != L + 1 || rq.size() != L - 1)
        throw ParseError("model: quantized arrays do not match dims");
      QuantizedModel qm;
      for (std::size_t k = 0; k < L; ++k) {
        QuantizedLayer ql;
        ql.fused_relu = k + 1 < L;
        ql.q_weights = matrix_from_json<std::int64_t>(qw.at(k));
        if (ql.q_weights.rows() != dims[k] || ql.q_weights.cols() != dims[k + 1])
          throw ParseError("model: q_weights of layer " + std::to_string(k) + " do not match dims");
        ql.q_bias = qb.at(k).get<std::vector<std::int64_t>>();
        ql.input = qp_from_json(quant.at(k));
        ql.output = qp_from_json(quant.at(k + 1));
        ql.weight = qp_from_json(wq.at(k));
        if (ql.fused_relu) {
          ql.requant.multiplier = rq.at(k).at("multiplier").get<std::int64_t>();
          ql.requant.shift = rq.at(k).at("shift").get<int>();
        }
        qm.layers.push_back(std::move(ql));
      }
      validate_quantized(qm);
      mf.quantized = std::move(qm);
    }
    return mf;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline ModelFile load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

inline void save(const std::filesystem::path& path, const FloatModel& fm, const QuantizedModel* qm = nullptr) {
  write_json_file(path, to_json(fm, qm));
}

}  // namespace model_io
}  // namespace ztric
