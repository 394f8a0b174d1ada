#pragma once

// Synthetic KPM windows, a plain-SGD MLP trainer, and the dataset CSV format.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "ztric/errors.hpp"
#include "ztric/matrix.hpp"
#include "ztric/quantizer.hpp"

namespace ztric {

inline constexpr std::size_t kKpmCount = 5;
inline constexpr std::array<const char*, kKpmCount> kKpmNames = {"bitrate", "mcs", "bler", "sinr", "bsr"};

// t x m readings flattened row-major (time-major), length l = t * m.
struct KpmWindow {
  std::vector<double> readings;
  bool jammer = false;

  friend bool operator==(const KpmWindow&, const KpmWindow&) = default;
};

using Dataset = std::vector<KpmWindow>;

// Canonical model stacks per time-window count (m = 5 KPMs).
inline std::vector<std::size_t> canonical_dims(std::size_t t) {
  switch (t) {
    case 5: return {25, 15, 10, 5, 2};
    case 10: return {50, 30, 15, 7, 2};
    case 20: return {100, 48, 42, 35, 2};
    default: throw ParameterError("no canonical model for t = " + std::to_string(t) + " (use 5, 10 or 20)");
  }
}

struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t t = 10;
  // bitrate [Mbps], MCS index, BLER [%], SINR [dB], BSR [kB]
  std::array<double, kKpmCount> benign_mean = {12.0, 20.0, 4.0, 18.0, 3.0};
  std::array<double, kKpmCount> benign_std = {2.0, 2.5, 1.5, 3.0, 1.2};
  std::array<double, kKpmCount> jammer_shift = {-4.0, -6.0, 6.0, -8.0, 3.0};
  double jammer_std_inflation = 1.5;
  // Per-window fading along the jammer direction, shared by both classes.
  double fading_std = 0.1;
  // Jammer severity is uniform in [severity_min, 1].
  double severity_min = 0.3;
  double balance = 0.5;  // fraction of jammer windows

  std::size_t input_dim() const { return t * kKpmCount; }
};

inline void check_config(const SynthConfig& c) {
  if (c.t == 0) throw ParameterError("synth: t must be positive");
  for (double s : c.benign_std)
    if (!(s > 0)) throw ParameterError("synth: variances must be positive");
  if (!(c.jammer_std_inflation > 0)) throw ParameterError("synth: std inflation must be positive");
  if (!(c.balance > 0 && c.balance < 1)) throw ParameterError("synth: balance must lie in (0, 1)");
  if (c.severity_min < 0 || c.severity_min > 1) throw ParameterError("synth: severity_min must lie in [0, 1]");
}

// Platform-independent variates on top of mt19937_64 (whose output sequence
// is fixed by the standard, unlike std::normal_distribution's).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Window `index` depends only on (seed, index, label), so any chunking of the
// generation yields the same dataset.
inline KpmWindow synth_window(const SynthConfig& cfg, std::uint64_t index, bool jammer) {
  Rng rng(derive_seed(cfg.seed, index));
  KpmWindow w;
  w.jammer = jammer;
  w.readings.resize(cfg.input_dim());
  const double fading = cfg.fading_std * rng.normal();
  const double severity = jammer ? rng.uniform(cfg.severity_min, 1.0) : 0.0;
  const std::size_t onset = jammer ? rng.below(std::max<std::size_t>(cfg.t / 2, 1)) : cfg.t;
  for (std::size_t step = 0; step < cfg.t; ++step) {
    const bool active = jammer && step >= onset;
    for (std::size_t k = 0; k < kKpmCount; ++k) {
      double sd = cfg.benign_std[k] * (active ? cfg.jammer_std_inflation : 1.0);
      double mean = cfg.benign_mean[k] + cfg.jammer_shift[k] * (fading + (active ? severity : 0.0));
      w.readings[step * kKpmCount + k] = std::max(0.0, mean + sd * rng.normal());
    }
  }
  return w;
}

inline Dataset generate_dataset(const SynthConfig& cfg, std::size_t count) {
  check_config(cfg);
  if (count < 1) throw ParameterError("generate_dataset: count must be at least 1");
  const auto jammers = static_cast<std::size_t>(std::llround(cfg.balance * static_cast<double>(count)));
  std::vector<char> labels(count, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(jammers), 1);
  Rng order(derive_seed(cfg.seed, std::numeric_limits<std::uint64_t>::max()));
  order.shuffle(labels);
  Dataset out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(synth_window(cfg, i, labels[i] != 0));
  return out;
}

inline CalibrationSet to_calibration_set(std::span<const KpmWindow> data) {
  CalibrationSet cal;
  cal.samples.reserve(data.size());
  for (const auto& w : data) cal.samples.push_back(w.readings);
  return cal;
}

// ---------------------------------------------------------------- CSV

inline std::string csv_header(std::size_t l) {
  std::string h;
  for (std::size_t i = 0; i < l; ++i) {
    h += "t" + std::to_string(i / kKpmCount) + "_" + kKpmNames[i % kKpmCount];
    h += ',';
  }
  return h + "label";
}

inline void export_dataset(const std::filesystem::path& path, std::span<const KpmWindow> data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  if (!data.empty()) out << csv_header(data.front().readings.size()) << '\n';
  out << std::setprecision(17);
  for (const auto& w : data) {
    for (double v : w.readings) out << v << ',';
    out << (w.jammer ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline Dataset parse_dataset(std::istream& in) {
  Dataset out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (line.back() == ',') fields.emplace_back();
    if (columns == 0) {
      if (fields.size() < 2 || fields.back() != "label") throw ParseError("missing header ending in 'label'", lineno);
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns)
      throw ParseError("expected " + std::to_string(columns) + " columns, found " + std::to_string(fields.size()),
                       lineno);
    KpmWindow w;
    w.readings.reserve(columns - 1);
    for (std::size_t i = 0; i + 1 < columns; ++i) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(fields[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != fields[i].size() || fields[i].empty())
        throw ParseError("column " + std::to_string(i + 1) + " is not a number", lineno);
      w.readings.push_back(v);
    }
    if (fields.back() == "0") w.jammer = false;
    else if (fields.back() == "1") w.jammer = true;
    else throw ParseError("label must be 0 or 1", lineno);
    out.push_back(std::move(w));
  }
  return out;
}

inline Dataset import_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_dataset(in);
}

// ---------------------------------------------------------------- training

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  std::uint64_t seed = 42;
  double val_fraction = 0.2;
};

struct TrainResult {
  FloatModel model;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  std::vector<double> epoch_loss;
};

struct Gradients {
  std::vector<RealMatrix> weights;  // one per layer; empty for Relu
  std::vector<std::vector<double>> bias;

  explicit Gradients(const FloatModel& m) {
    for (const auto& l : m.layers) {
      weights.emplace_back(l.weights.rows(), l.weights.cols());
      bias.emplace_back(l.bias.size(), 0.0);
    }
  }
};

// He-uniform initialization, deterministic in the seed.
inline void init_weights(FloatModel& m, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : m.layers) {
    if (!l.has_weights()) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(l.inputs()));
    for (auto& v : l.weights.flat()) v = rng.uniform(-limit, limit);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

// Mean softmax cross-entropy over the batch; accumulates mean gradients into
// `grad` when given.
inline double loss_and_gradients(const FloatModel& m, std::span<const std::vector<double>> xs,
                                 std::span<const std::size_t> labels, Gradients* grad) {
  if (xs.size() != labels.size() || xs.empty()) throw ShapeError("loss: batch and labels disagree");
  const std::size_t L = m.layers.size();
  const double inv = 1.0 / static_cast<double>(xs.size());
  double loss = 0.0;
  std::vector<std::vector<double>> acts(L + 1);
  std::vector<std::vector<double>> pre(L);
  for (std::size_t s = 0; s < xs.size(); ++s) {
    acts[0] = xs[s];
    for (std::size_t k = 0; k < L; ++k) {
      const auto& layer = m.layers[k];
      if (layer.has_weights()) {
        pre[k] = affine(layer, acts[k]);
        acts[k + 1] = pre[k];
      } else {
        pre[k] = acts[k];
        acts[k + 1] = acts[k];
      }
      if (layer.kind != LayerKind::Linear) relu_inplace(acts[k + 1]);
    }
    const auto probs = softmax(acts[L]);
    loss -= std::log(std::max(probs[labels[s]], 1e-300)) * inv;
    if (!grad) continue;
    std::vector<double> delta = probs;
    delta[labels[s]] -= 1.0;
    for (std::size_t k = L; k-- > 0;) {
      const auto& layer = m.layers[k];
      if (layer.kind != LayerKind::Linear)
        for (std::size_t i = 0; i < delta.size(); ++i)
          if (pre[k][i] <= 0.0) delta[i] = 0.0;
      if (!layer.has_weights()) continue;
      auto& gw = grad->weights[k];
      auto& gb = grad->bias[k];
      for (std::size_t i = 0; i < delta.size(); ++i) gb[i] += delta[i] * inv;
      std::vector<double> next(layer.inputs(), 0.0);
      for (std::size_t j = 0; j < layer.inputs(); ++j) {
        const double a = acts[k][j];
        auto wrow = layer.weights.row(j);
        auto grow = gw.row(j);
        double back = 0.0;
        for (std::size_t i = 0; i < delta.size(); ++i) {
          grow[i] += a * delta[i] * inv;
          back += wrow[i] * delta[i];
        }
        next[j] = back;
      }
      delta = std::move(next);
    }
  }
  return loss;
}

inline double accuracy(const FloatModel& m, std::span<const KpmWindow> data) {
  if (data.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& w : data) {
    const auto logits = float_forward(m, w.readings);
    ok += argmax<double>(logits) == static_cast<std::size_t>(w.jammer);
  }
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

inline double accuracy(const QuantizedModel& m, std::span<const KpmWindow> data) {
  if (data.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& w : data) ok += quantized_forward_float(m, w.readings).cls == static_cast<std::size_t>(w.jammer);
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

// Seeded shuffle then split; the tail fraction becomes validation.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double val_fraction, std::uint64_t seed) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, 0x5917));
  rng.shuffle(idx);
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(data.size())));
  Dataset train, val;
  for (std::size_t i = 0; i < idx.size(); ++i) (i < idx.size() - n_val ? train : val).push_back(data[idx[i]]);
  return {std::move(train), std::move(val)};
}

inline TrainResult train_mlp(const Dataset& data, std::span<const std::size_t> dims, const TrainConfig& cfg) {
  if (data.empty()) throw ParameterError("train: dataset is empty");
  if (!(cfg.learning_rate > 0) || cfg.epochs == 0 || cfg.batch_size == 0)
    throw ParameterError("train: learning rate, epochs and batch size must be positive");
  if (cfg.val_fraction < 0 || cfg.val_fraction >= 1) throw ParameterError("train: val_fraction must lie in [0, 1)");
  if (dims.empty() || data.front().readings.size() != dims.front())
    throw ShapeError("train: input dim does not match dataset");

  TrainResult res;
  res.model = make_mlp(dims);
  init_weights(res.model, cfg.seed);
  auto [train, val] = data.size() > 1 ? split_dataset(data, cfg.val_fraction, cfg.seed)
                                      : std::pair<Dataset, Dataset>{data, {}};
  if (train.empty()) train = data;

  Rng rng(derive_seed(cfg.seed, 0xba7c));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> xs;
  std::vector<std::size_t> ys;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      xs.clear();
      ys.clear();
      for (std::size_t i = start; i < end; ++i) {
        xs.push_back(train[order[i]].readings);
        ys.push_back(train[order[i]].jammer ? 1 : 0);
      }
      Gradients g(res.model);
      const double loss = loss_and_gradients(res.model, xs, ys, &g);
      if (!std::isfinite(loss)) throw TrainingError("loss diverged at epoch " + std::to_string(epoch));
      epoch_loss += loss;
      ++batches;
      for (std::size_t k = 0; k < res.model.layers.size(); ++k) {
        auto& layer = res.model.layers[k];
        if (!layer.has_weights()) continue;
        auto w = layer.weights.flat();
        auto gw = g.weights[k].flat();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * gw[i];
        for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= cfg.learning_rate * g.bias[k][i];
      }
    }
    res.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  res.train_accuracy = accuracy(res.model, train);
  res.val_accuracy = val.empty() ? res.train_accuracy : accuracy(res.model, val);
  return res;
}

// ---------------------------------------------------------------- reference model

inline constexpr std::size_t kReferenceSamples = 5000;

struct ReferenceModel {
  Dataset train;
  Dataset val;
  TrainResult trained;
  FloatModel fused;
  QuantizedModel quantized;
};

// Synthetic data -> SGD -> fusion -> quantization calibrated on the training
// split. Everything follows from (t, seed).
inline ReferenceModel build_reference_model(std::size_t t, std::uint64_t seed = 42,
                                            std::size_t samples = kReferenceSamples, TrainConfig tc = {}) {
  SynthConfig sc;
  sc.t = t;
  sc.seed = seed;
  const Dataset data = generate_dataset(sc, samples);
  tc.seed = seed;
  ReferenceModel out;
  out.trained = train_mlp(data, canonical_dims(t), tc);
  std::tie(out.train, out.val) = split_dataset(data, tc.val_fraction, tc.seed);
  out.fused = fuse_linear_relu(out.trained.model);
  out.quantized = quantize_model(out.fused, to_calibration_set(out.train));
  return out;
}

}  // namespace ztric
