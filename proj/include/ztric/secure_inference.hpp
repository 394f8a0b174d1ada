#pragma once

// xApp-side evaluation of a quantized MLP on an IPFE ciphertext. Only the
// first layer touches encrypted data: each functional key yields one inner
// product <x_q, w_i>, and everything after that runs in the clear.

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <future>
#include <memory>
#include <string>
#include <vector>

#include "ztric/bsgs.hpp"
#include "ztric/envelope.hpp"
#include "ztric/errors.hpp"
#include "ztric/ipfe.hpp"
#include "ztric/model_io.hpp"
#include "ztric/quantizer.hpp"
#include "ztric/security_validator.hpp"

namespace ztric {

// First hidden layer minus its weight matrix: what the xApp needs to turn
// decrypted inner products into activations.
struct FirstLayerPublic {
  std::size_t inputs = 0;
  std::vector<std::int64_t> q_bias;
  QuantParams input;
  QuantParams output;
  Requant requant;

  friend bool operator==(const FirstLayerPublic&, const FirstLayerPublic&) = default;
};

// Everything the xApp receives besides its functional keys.
struct XappModel {
  FirstLayerPublic first;
  std::vector<QuantizedLayer> tail;  // layers 2..L, plaintext weights

  friend bool operator==(const XappModel&, const XappModel&) = default;
};

inline XappModel split_for_xapp(const QuantizedModel& m) {
  if (m.layers.size() < 2 || !m.layers.front().fused_relu)
    throw TopologyError("encrypted inference needs a fused first hidden layer followed by more layers");
  const auto& l1 = m.layers.front();
  XappModel x;
  x.first = {l1.inputs(), l1.q_bias, l1.input, l1.output, l1.requant};
  x.tail.assign(m.layers.begin() + 1, m.layers.end());
  return x;
}

struct StageTimings {
  std::int64_t decrypt_us = 0;  // n inner products incl. discrete logs
  std::int64_t tail_us = 0;     // plaintext layers 2..L
  std::int64_t total_us = 0;
};

struct InferenceResult {
  std::size_t cls = 0;  // 1 = jammer present
  std::vector<std::int64_t> logits;
  StageTimings timings;
};

class EncryptedInferenceContext {
 public:
  // Rejects key sets that fail the issuance checks, so a context can only
  // exist for n < l and a basis-free first layer.
  EncryptedInferenceContext(GroupParams group, std::vector<FunctionalKey> keys, XappModel model,
                            std::size_t threads = 1)
      : group_(std::move(group)), keys_(std::move(keys)), model_(std::move(model)), threads_(threads ? threads : 1) {
    if (keys_.empty()) throw ShapeError("context: no functional keys");
    const std::size_t l = model_.first.inputs;
    if (keys_.size() != model_.first.q_bias.size())
      throw ShapeError("context: " + std::to_string(keys_.size()) + " keys for a first layer of width " +
                       std::to_string(model_.first.q_bias.size()));
    IntMatrix W(l, keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      if (keys_[i].w.size() != l) throw ShapeError("context: key " + std::to_string(i) + " has wrong length");
      W.set_column(i, keys_[i].w);
    }
    if (model_.tail.empty() || model_.tail.front().inputs() != keys_.size())
      throw ShapeError("context: second layer does not consume the first layer's outputs");
    const IssuanceReport report = validate_for_issuance(W);
    if (!report.budget.passed) throw ValidationError("context: key budget violated (n >= l)");
    if (!report.basis.passed)
      throw ValidationError("context: standard basis vector e_" + std::to_string(*report.basis.offending_basis_index) +
                            " lies in the key span");
    bound_ = bound_for_weights(W);
    table_ = std::make_shared<const BsgsTable>(group_, group_.g, bound_);
  }

  const GroupParams& group() const { return group_; }
  std::size_t input_length() const { return model_.first.inputs; }
  std::size_t key_count() const { return keys_.size(); }
  const DlogBound& bound() const { return bound_; }
  const XappModel& model() const { return model_; }
  const std::vector<FunctionalKey>& keys() const { return keys_; }

  // <x_q, w_i> for every key, in column order.
  std::vector<std::int64_t> inner_products(const Ciphertext& ct) const {
    if (ct.length() != input_length())
      throw ShapeError("ciphertext carries " + std::to_string(ct.length()) + " components, expected " +
                       std::to_string(input_length()));
    std::vector<std::int64_t> out(keys_.size());
    auto run = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        try {
          out[i] = decrypt_inner_product(ct, keys_[i], *table_, group_);
        } catch (const BoundExceededError& e) {
          throw InferenceError(i, e.what());
        }
      }
    };
    if (threads_ <= 1) {
      run(0, keys_.size());
      return out;
    }
    std::vector<std::future<void>> jobs;
    const std::size_t chunk = (keys_.size() + threads_ - 1) / threads_;
    for (std::size_t b = 0; b < keys_.size(); b += chunk)
      jobs.push_back(std::async(std::launch::async, run, b, std::min(keys_.size(), b + chunk)));
    for (auto& j : jobs) j.get();  // rethrows the first failure in column order
    return out;
  }

 private:
  GroupParams group_;
  std::vector<FunctionalKey> keys_;
  XappModel model_;
  std::size_t threads_;
  DlogBound bound_;
  std::shared_ptr<const BsgsTable> table_;
};

// Bias add, fused ReLU and requantization on decrypted inner products.
inline std::vector<std::int64_t> first_layer_activation(const FirstLayerPublic& first,
                                                        std::span<const std::int64_t> inner) {
  std::vector<std::int64_t> acc(inner.begin(), inner.end());
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += first.q_bias[i];
  return requantize(first.requant, first.output.zero_point, acc);
}

inline std::vector<std::int64_t> first_layer_from_ciphertext(const EncryptedInferenceContext& ctx,
                                                             const Ciphertext& ct) {
  return first_layer_activation(ctx.model().first, ctx.inner_products(ct));
}

inline InferenceResult evaluate_encrypted(const EncryptedInferenceContext& ctx, const Ciphertext& ct) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto inner = ctx.inner_products(ct);
  const auto t1 = clock::now();
  auto act = first_layer_activation(ctx.model().first, inner);
  ForwardResult fr = forward_layers(ctx.model().tail, std::move(act));
  const auto t2 = clock::now();
  auto us = [](auto d) { return std::chrono::duration_cast<std::chrono::microseconds>(d).count(); };
  InferenceResult r;
  r.cls = fr.cls;
  r.logits = std::move(fr.logits);
  r.timings = {us(t1 - t0), us(t2 - t1), us(t2 - t0)};
  return r;
}

// ---------------------------------------------------------------- JSON

namespace xapp_io {

using nlohmann::json;

inline json layer_to_json(const QuantizedLayer& l) {
  json j{{"fused_relu", l.fused_relu},
         {"q_weights", model_io::matrix_to_json(l.q_weights)},
         {"q_bias", l.q_bias},
         {"input", model_io::qp_to_json(l.input)},
         {"weight", model_io::qp_to_json(l.weight)},
         {"output", model_io::qp_to_json(l.output)}};
  if (l.fused_relu) j["requant"] = {{"multiplier", l.requant.multiplier}, {"shift", l.requant.shift}};
  return j;
}

inline QuantizedLayer layer_from_json(const json& j) {
  QuantizedLayer l;
  l.fused_relu = j.at("fused_relu").get<bool>();
  l.q_weights = model_io::matrix_from_json<std::int64_t>(j.at("q_weights"));
  l.q_bias = j.at("q_bias").get<std::vector<std::int64_t>>();
  l.input = model_io::qp_from_json(j.at("input"));
  l.weight = model_io::qp_from_json(j.at("weight"));
  l.output = model_io::qp_from_json(j.at("output"));
  if (l.fused_relu) {
    l.requant.multiplier = j.at("requant").at("multiplier").get<std::int64_t>();
    l.requant.shift = j.at("requant").at("shift").get<int>();
  }
  if (l.q_bias.size() != l.outputs()) throw ParseError("xapp model: bias length mismatch");
  return l;
}

inline json to_json(const XappModel& m) {
  json tail = json::array();
  for (const auto& l : m.tail) tail.push_back(layer_to_json(l));
  return {{"version", 1},
          {"first_layer",
           {{"inputs", m.first.inputs},
            {"q_bias", m.first.q_bias},
            {"input", model_io::qp_to_json(m.first.input)},
            {"output", model_io::qp_to_json(m.first.output)},
            {"requant", {{"multiplier", m.first.requant.multiplier}, {"shift", m.first.requant.shift}}}}},
          {"tail", tail}};
}

inline XappModel from_json(const json& j) {
  try {
    XappModel m;
    const auto& f = j.at("first_layer");
    if (f.contains("q_weights")) throw ParseError("xapp model must not carry first-layer weights");
    m.first.inputs = f.at("inputs").get<std::size_t>();
    m.first.q_bias = f.at("q_bias").get<std::vector<std::int64_t>>();
    m.first.input = model_io::qp_from_json(f.at("input"));
    m.first.output = model_io::qp_from_json(f.at("output"));
    m.first.requant.multiplier = f.at("requant").at("multiplier").get<std::int64_t>();
    m.first.requant.shift = f.at("requant").at("shift").get<int>();
    for (const auto& l : j.at("tail")) m.tail.push_back(layer_from_json(l));
    if (m.tail.empty() || m.tail.back().fused_relu) throw ParseError("xapp model: tail must end in the output layer");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("xapp model: ") + e.what());
  }
}

}  // namespace xapp_io
}  // namespace ztric
