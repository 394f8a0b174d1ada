#pragma once

// Post-training quantization of a small MLP into an integer-only network.
//
// Activations are unsigned 8-bit with per-tensor (scale, zero_point).
// First-layer weights are symmetric signed in [-127, 127] with zero point 0
// so that <x_q, w_q> is exactly what an inner-product functional key
// reveals. Later layers use unsigned [0, 255] weights with a zero point.
// Hidden accumulators are requantized with a 32-bit fixed-point multiplier;
// the output layer emits its raw accumulators as logits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ztric/errors.hpp"
#include "ztric/matrix.hpp"

namespace ztric {

inline constexpr std::int64_t kQuantMin = 0;
inline constexpr std::int64_t kQuantMax = 255;
inline constexpr std::int64_t kSignedWeightMax = 127;
// Floor applied to degenerate (constant-zero) ranges.
inline constexpr double kScaleFloor = 1.0 / (1 << 24);

struct QuantParams {
  double scale = 1.0;
  std::int64_t zero_point = 0;

  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

// Round half away from zero; std::round already does this.
inline std::int64_t round_half_away(double v) { return static_cast<std::int64_t>(std::round(v)); }

inline std::int64_t quantize_value(double x, const QuantParams& qp, std::size_t* clamps = nullptr) {
  const double v = std::round(x / qp.scale + static_cast<double>(qp.zero_point));
  if (v < kQuantMin || v > kQuantMax) {
    if (clamps) ++*clamps;
    return v < kQuantMin ? kQuantMin : kQuantMax;
  }
  return static_cast<std::int64_t>(v);
}

inline std::vector<std::int64_t> quantize_vector(std::span<const double> x, const QuantParams& qp,
                                                 std::size_t* clamps = nullptr) {
  std::vector<std::int64_t> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = quantize_value(x[i], qp, clamps);
  return out;
}

// ---------------------------------------------------------------- float model

enum class LayerKind { Linear, Relu, FusedLinearRelu };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Linear: return "linear";
    case LayerKind::Relu: return "relu";
    case LayerKind::FusedLinearRelu: return "fused_linear_relu";
  }
  return "?";
}

inline LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "linear") return LayerKind::Linear;
  if (s == "relu") return LayerKind::Relu;
  if (s == "fused_linear_relu") return LayerKind::FusedLinearRelu;
  throw ParseError("unknown layer kind '" + s + "'");
}

struct FloatLayer {
  LayerKind kind = LayerKind::Linear;
  RealMatrix weights;  // inputs x outputs; empty for Relu
  std::vector<double> bias;

  bool has_weights() const { return kind != LayerKind::Relu; }
  std::size_t inputs() const { return weights.rows(); }
  std::size_t outputs() const { return weights.cols(); }
};

struct FloatModel {
  std::vector<FloatLayer> layers;

  // input, hidden..., output
  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d;
    for (const auto& layer : layers) {
      if (!layer.has_weights()) continue;
      if (d.empty()) d.push_back(layer.inputs());
      d.push_back(layer.outputs());
    }
    return d;
  }

  std::size_t input_dim() const { return dims().front(); }

  bool is_fused() const {
    return std::none_of(layers.begin(), layers.end(),
                        [](const FloatLayer& l) { return l.kind == LayerKind::Relu; });
  }
};

inline std::size_t parameter_count(std::span<const std::size_t> dims) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) n += dims[i] * dims[i + 1] + dims[i + 1];
  return n;
}

inline void check_model(const FloatModel& m) {
  if (m.layers.empty()) throw TopologyError("model has no layers");
  std::optional<std::size_t> width;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& layer = m.layers[i];
    if (!layer.has_weights()) {
      if (i == 0 || m.layers[i - 1].kind != LayerKind::Linear)
        throw TopologyError("relu at position " + std::to_string(i) + " does not follow a linear layer");
      continue;
    }
    if (layer.bias.size() != layer.outputs())
      throw ShapeError("layer " + std::to_string(i) + ": bias length does not match outputs");
    if (width && *width != layer.inputs())
      throw ShapeError("layer " + std::to_string(i) + ": expected " + std::to_string(*width) + " inputs, got " +
                       std::to_string(layer.inputs()));
    width = layer.outputs();
  }
  if (m.layers.back().kind != LayerKind::Linear) throw TopologyError("final layer must be linear");
}

// Builds Linear, Relu, ..., Linear with zero-initialized parameters.
inline FloatModel make_mlp(std::span<const std::size_t> dims) {
  if (dims.size() < 2) throw ShapeError("an MLP needs at least input and output dims");
  FloatModel m;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] == 0 || dims[i + 1] == 0) throw ShapeError("zero-width layer");
    m.layers.push_back({LayerKind::Linear, RealMatrix(dims[i], dims[i + 1]), std::vector<double>(dims[i + 1])});
    if (i + 2 < dims.size()) m.layers.push_back({LayerKind::Relu, {}, {}});
  }
  return m;
}

inline std::vector<double> affine(const FloatLayer& layer, std::span<const double> x) {
  std::vector<double> z(layer.bias.begin(), layer.bias.end());
  for (std::size_t j = 0; j < layer.inputs(); ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    auto row = layer.weights.row(j);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += xj * row[i];
  }
  return z;
}

inline void relu_inplace(std::vector<double>& v) {
  for (auto& e : v) e = std::max(e, 0.0);
}

inline std::vector<double> float_forward(const FloatModel& m, std::span<const double> x) {
  if (x.size() != m.input_dim())
    throw ShapeError("float_forward: input has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(m.input_dim()));
  std::vector<double> a(x.begin(), x.end());
  for (const auto& layer : m.layers) {
    switch (layer.kind) {
      case LayerKind::Linear: a = affine(layer, a); break;
      case LayerKind::Relu: relu_inplace(a); break;
      case LayerKind::FusedLinearRelu:
        a = affine(layer, a);
        relu_inplace(a);
        break;
    }
  }
  return a;
}

// Lowest index wins ties.
template <typename T>
std::size_t argmax(std::span<const T> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline FloatModel fuse_linear_relu(const FloatModel& m) {
  check_model(m);
  FloatModel out;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& layer = m.layers[i];
    const bool last = i + 1 == m.layers.size();
    if (layer.kind == LayerKind::FusedLinearRelu) {
      out.layers.push_back(layer);
      continue;
    }
    if (layer.kind == LayerKind::Linear && !last) {
      if (m.layers[i + 1].kind != LayerKind::Relu)
        throw TopologyError("interior linear layer " + std::to_string(i) + " is not followed by relu");
      FloatLayer fused = layer;
      fused.kind = LayerKind::FusedLinearRelu;
      out.layers.push_back(std::move(fused));
      ++i;
      continue;
    }
    out.layers.push_back(layer);
  }
  return out;
}

// ---------------------------------------------------------------- calibration

struct CalibrationSet {
  std::vector<std::vector<double>> samples;
};

struct LayerCalibration {
  QuantParams input;
  QuantParams weight;
  QuantParams output;
  double output_min = 0.0;  // observed pre-activation range
  double output_max = 0.0;
  bool degenerate = false;
};

struct CalibrationReport {
  std::vector<LayerCalibration> layers;

  bool any_degenerate() const {
    return std::any_of(layers.begin(), layers.end(), [](const auto& l) { return l.degenerate; });
  }
};

namespace detail {

inline QuantParams unsigned_range_params(double lo, double hi, bool* degenerate) {
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  double scale = (hi - lo) / static_cast<double>(kQuantMax);
  if (!(scale > kScaleFloor)) {
    if (degenerate) *degenerate = true;
    return {kScaleFloor, 0};
  }
  std::int64_t zp = std::clamp<std::int64_t>(round_half_away(-lo / scale), kQuantMin, kQuantMax);
  return {scale, zp};
}

inline QuantParams symmetric_weight_params(const RealMatrix& w) {
  double max_abs = 0.0;
  for (double v : w.flat()) max_abs = std::max(max_abs, std::abs(v));
  double scale = max_abs / static_cast<double>(kSignedWeightMax);
  return {scale > kScaleFloor ? scale : kScaleFloor, 0};
}

inline QuantParams unsigned_weight_params(const RealMatrix& w) {
  double lo = 0.0, hi = 0.0;
  for (double v : w.flat()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return unsigned_range_params(lo, hi, nullptr);
}

}  // namespace detail

// Observes float ranges over the calibration set. The network input uses
// scale max|x| / 255 with zero point 0; fused layers clip their range at 0.
inline CalibrationReport calibrate(const FloatModel& model_in, const CalibrationSet& cal) {
  if (cal.samples.empty()) throw ParameterError("calibration set is empty");
  const FloatModel model = model_in.is_fused() ? model_in : fuse_linear_relu(model_in);
  check_model(model);
  const std::size_t in_dim = model.input_dim();
  for (std::size_t s = 0; s < cal.samples.size(); ++s)
    if (cal.samples[s].size() != in_dim)
      throw ShapeError("calibration sample " + std::to_string(s) + " has wrong length");

  const std::size_t L = model.layers.size();
  std::vector<double> lo(L, std::numeric_limits<double>::infinity());
  std::vector<double> hi(L, -std::numeric_limits<double>::infinity());
  double input_max_abs = 0.0;
  for (const auto& x : cal.samples) {
    for (double v : x) input_max_abs = std::max(input_max_abs, std::abs(v));
    std::vector<double> a = x;
    for (std::size_t k = 0; k < L; ++k) {
      a = affine(model.layers[k], a);
      for (double v : a) {
        lo[k] = std::min(lo[k], v);
        hi[k] = std::max(hi[k], v);
      }
      if (model.layers[k].kind == LayerKind::FusedLinearRelu) relu_inplace(a);
    }
  }

  CalibrationReport report;
  QuantParams input{input_max_abs / static_cast<double>(kQuantMax), 0};
  bool input_degenerate = false;
  if (!(input.scale > kScaleFloor)) {
    input.scale = kScaleFloor;
    input_degenerate = true;
  }
  for (std::size_t k = 0; k < L; ++k) {
    const auto& layer = model.layers[k];
    LayerCalibration lc;
    lc.input = input;
    lc.degenerate = k == 0 && input_degenerate;
    lc.weight = k == 0 ? detail::symmetric_weight_params(layer.weights) : detail::unsigned_weight_params(layer.weights);
    lc.output_min = lo[k];
    lc.output_max = hi[k];
    const bool fused = layer.kind == LayerKind::FusedLinearRelu;
    bool degenerate = false;
    lc.output = fused ? detail::unsigned_range_params(0.0, hi[k], &degenerate)
                      : detail::unsigned_range_params(lo[k], hi[k], &degenerate);
    lc.degenerate = lc.degenerate || degenerate;
    report.layers.push_back(lc);
    input = lc.output;
  }
  return report;
}

// ---------------------------------------------------------------- integer model

// Real multiplier M ~= multiplier * 2^-shift with multiplier in [2^30, 2^31).
struct Requant {
  std::int64_t multiplier = 0;
  int shift = 0;

  static Requant from_real(double m) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ParameterError("requant multiplier must be positive");
    int exp = 0;
    const double frac = std::frexp(m, &exp);  // m = frac * 2^exp, frac in [0.5, 1)
    std::int64_t q = round_half_away(frac * static_cast<double>(std::int64_t{1} << 31));
    if (q == (std::int64_t{1} << 31)) {
      q /= 2;
      ++exp;
    }
    return {q, 31 - exp};
  }

  double real() const { return std::ldexp(static_cast<double>(multiplier), -shift); }

  // round_half_away(acc * M), computed exactly in 128-bit.
  std::int64_t apply(std::int64_t acc) const {
    __int128 v = static_cast<__int128>(acc) * multiplier;
    if (shift <= 0) {
      const int s = std::min(-shift, 62);
      v <<= s;
    } else if (shift >= 126) {
      return 0;
    } else {
      const __int128 half = static_cast<__int128>(1) << (shift - 1);
      v = v >= 0 ? (v + half) >> shift : -((-v + half) >> shift);
    }
    constexpr __int128 lim = std::numeric_limits<std::int64_t>::max();
    return static_cast<std::int64_t>(std::clamp<__int128>(v, -lim, lim));
  }

  friend bool operator==(const Requant&, const Requant&) = default;
};

struct QuantizedLayer {
  bool fused_relu = true;  // false for the output layer
  IntMatrix q_weights;     // inputs x outputs
  std::vector<std::int64_t> q_bias;  // at scale input.scale * weight.scale
  QuantParams input;
  QuantParams weight;
  QuantParams output;  // for the output layer: the accumulator scale, zero point 0
  Requant requant;     // unused on the output layer

  std::size_t inputs() const { return q_weights.rows(); }
  std::size_t outputs() const { return q_weights.cols(); }

  friend bool operator==(const QuantizedLayer&, const QuantizedLayer&) = default;
};

struct QuantizedModel {
  std::vector<QuantizedLayer> layers;

  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d;
    if (layers.empty()) return d;
    d.push_back(layers.front().inputs());
    for (const auto& l : layers) d.push_back(l.outputs());
    return d;
  }
  std::size_t input_dim() const { return layers.front().inputs(); }
  const QuantParams& input_params() const { return layers.front().input; }
  const IntMatrix& first_layer_weights() const { return layers.front().q_weights; }

  friend bool operator==(const QuantizedModel&, const QuantizedModel&) = default;
};

// Counters gathered during a traced forward pass.
struct ForwardTrace {
  std::size_t clamps_high = 0;  // requantized values above 255 before clamping
  std::vector<std::int64_t> max_requant;  // per hidden layer, before clamping
};

// Integer accumulator for one layer: sum_j (x_j - zp_x)(w_ji - zp_w) + b_i.
inline std::vector<std::int64_t> layer_accumulate(const QuantizedLayer& layer, std::span<const std::int64_t> x) {
  if (x.size() != layer.inputs())
    throw ShapeError("layer input has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(layer.inputs()));
  std::vector<std::int64_t> acc(layer.q_bias.begin(), layer.q_bias.end());
  const std::int64_t zx = layer.input.zero_point;
  const std::int64_t zw = layer.weight.zero_point;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const std::int64_t xj = x[j] - zx;
    if (xj == 0) continue;
    auto row = layer.q_weights.row(j);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += xj * (row[i] - zw);
  }
  return acc;
}

// Fused ReLU + requantize of a hidden-layer accumulator into [0, 255].
inline std::vector<std::int64_t> requantize(const Requant& rq, std::int64_t zero_point,
                                            std::span<const std::int64_t> acc, ForwardTrace* trace = nullptr,
                                            std::size_t hidden_index = 0) {
  std::vector<std::int64_t> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const std::int64_t v = rq.apply(acc[i]) + zero_point;
    if (trace) {
      if (trace->max_requant.size() <= hidden_index) trace->max_requant.resize(hidden_index + 1, 0);
      trace->max_requant[hidden_index] = std::max(trace->max_requant[hidden_index], v);
      if (v > kQuantMax) ++trace->clamps_high;
    }
    out[i] = std::clamp(v, kQuantMin, kQuantMax);
  }
  return out;
}

inline std::vector<std::int64_t> requantize(const QuantizedLayer& layer, std::span<const std::int64_t> acc,
                                            ForwardTrace* trace = nullptr, std::size_t hidden_index = 0) {
  return requantize(layer.requant, layer.output.zero_point, acc, trace, hidden_index);
}

struct ForwardResult {
  std::vector<std::int64_t> logits;
  std::size_t cls = 0;
};

// Runs `layers` on an already-quantized activation vector; the last layer
// must be the unfused output layer. `index_base` offsets trace indices.
inline ForwardResult forward_layers(std::span<const QuantizedLayer> layers, std::vector<std::int64_t> a,
                                    ForwardTrace* trace = nullptr, std::size_t index_base = 0) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& layer = layers[k];
    auto acc = layer_accumulate(layer, a);
    if (!layer.fused_relu) {
      ForwardResult r;
      r.logits = std::move(acc);
      r.cls = argmax<std::int64_t>(r.logits);
      return r;
    }
    a = requantize(layer, acc, trace, index_base + k);
  }
  throw TopologyError("quantized model has no output layer");
}

inline ForwardResult forward_from(const QuantizedModel& m, std::size_t first, std::vector<std::int64_t> a,
                                  ForwardTrace* trace = nullptr) {
  return forward_layers(std::span(m.layers).subspan(first), std::move(a), trace, first);
}

inline void check_quantized_input(const QuantizedModel& m, std::span<const std::int64_t> x_q) {
  if (m.layers.empty()) throw TopologyError("quantized model has no layers");
  if (x_q.size() != m.input_dim())
    throw ShapeError("quantized_forward: input has " + std::to_string(x_q.size()) + " entries, expected " +
                     std::to_string(m.input_dim()));
  for (auto v : x_q)
    if (v < kQuantMin || v > kQuantMax) throw RangeError("quantized input outside [0, 255]");
}

inline ForwardResult quantized_forward(const QuantizedModel& m, std::span<const std::int64_t> x_q,
                                       ForwardTrace* trace = nullptr) {
  check_quantized_input(m, x_q);
  return forward_from(m, 0, std::vector<std::int64_t>(x_q.begin(), x_q.end()), trace);
}

// Quantizes the float input with the model's input parameters first.
inline ForwardResult quantized_forward_float(const QuantizedModel& m, std::span<const double> x,
                                             ForwardTrace* trace = nullptr) {
  return quantized_forward(m, quantize_vector(x, m.input_params()), trace);
}

// Dequantized logits, for reports only.
inline std::vector<double> dequantize_logits(const QuantizedModel& m, std::span<const std::int64_t> logits) {
  const auto& out = m.layers.back().output;
  std::vector<double> v(logits.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(logits[i]) * out.scale;
  return v;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (auto& v : p) sum += (v = std::exp(v - mx));
  for (auto& v : p) v /= sum;
  return p;
}

namespace detail {

inline IntMatrix quantize_weights(const RealMatrix& w, const QuantParams& qp, bool symmetric) {
  IntMatrix q(w.rows(), w.cols());
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) {
      const std::int64_t v = round_half_away(w(r, c) / qp.scale) + qp.zero_point;
      q(r, c) = symmetric ? std::clamp<std::int64_t>(v, -kSignedWeightMax, kSignedWeightMax)
                          : std::clamp<std::int64_t>(v, kQuantMin, kQuantMax);
    }
  return q;
}

}  // namespace detail

// Quantizes a fused float model. Each hidden layer's output scale is the
// larger of its float-calibrated scale and the scale needed so that no
// integer activation on the calibration set exceeds 255; the fixed-point
// multiplier is then nudged down until the calibration maximum fits.
inline QuantizedModel quantize_model(const FloatModel& model, const CalibrationSet& cal) {
  if (!model.is_fused()) throw TopologyError("quantize_model expects a fused model; run fuse_linear_relu first");
  const CalibrationReport report = calibrate(model, cal);
  QuantizedModel qm;

  std::vector<std::vector<std::int64_t>> acts;
  acts.reserve(cal.samples.size());
  for (const auto& x : cal.samples) acts.push_back(quantize_vector(x, report.layers.front().input));

  QuantParams input = report.layers.front().input;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& fl = model.layers[k];
    const auto& lc = report.layers[k];
    QuantizedLayer ql;
    ql.fused_relu = fl.kind == LayerKind::FusedLinearRelu;
    ql.input = input;
    ql.weight = lc.weight;
    ql.q_weights = detail::quantize_weights(fl.weights, lc.weight, k == 0);
    const double acc_scale = input.scale * lc.weight.scale;
    ql.q_bias.resize(fl.bias.size());
    for (std::size_t i = 0; i < fl.bias.size(); ++i) ql.q_bias[i] = round_half_away(fl.bias[i] / acc_scale);

    if (!ql.fused_relu) {
      ql.output = {acc_scale, 0};
      qm.layers.push_back(std::move(ql));
      break;
    }

    std::int64_t max_acc = 0;
    std::vector<std::vector<std::int64_t>> accs;
    accs.reserve(acts.size());
    for (const auto& a : acts) {
      accs.push_back(layer_accumulate(ql, a));
      for (auto v : accs.back()) max_acc = std::max(max_acc, v);
    }
    QuantParams out = lc.output;
    const double needed = static_cast<double>(max_acc) * acc_scale / static_cast<double>(kQuantMax);
    if (needed > out.scale) out.scale = needed;
    ql.output = out;
    ql.requant = Requant::from_real(acc_scale / out.scale);
    while (ql.requant.apply(max_acc) + out.zero_point > kQuantMax && ql.requant.multiplier > 0) --ql.requant.multiplier;

    for (std::size_t s = 0; s < acts.size(); ++s) acts[s] = requantize(ql, accs[s]);
    input = out;
    qm.layers.push_back(std::move(ql));
  }
  return qm;
}

inline std::size_t parameter_count(const QuantizedModel& m) {
  auto d = m.dims();
  return parameter_count(d);
}

inline std::size_t parameter_count(const FloatModel& m) {
  auto d = m.dims();
  return parameter_count(d);
}

}  // namespace ztric
