#pragma once

// The three parties of the pipeline, independent of transport:
//   KDC        issues mpk to the encryptor and functional keys to the xApp
//   encryptor  quantizes and encrypts KPM windows into ENC_KPM frames
//   xApp       polls the RIC database and classifies ciphertexts

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ztric/envelope.hpp"
#include "ztric/ipfe.hpp"
#include "ztric/model_lab.hpp"
#include "ztric/pipeline/database.hpp"
#include "ztric/pipeline/frame.hpp"
#include "ztric/quantizer.hpp"
#include "ztric/secure_inference.hpp"
#include "ztric/security_validator.hpp"

namespace ztric::pipeline {

using nlohmann::json;

// ---------------------------------------------------------------- KDC

struct EncryptorBundle {
  MasterPublicKey mpk;
  QuantParams input_quant;
};

struct XappBundle {
  std::string group;
  std::vector<FunctionalKey> keys;
  XappModel model;
};

struct KdcIssue {
  EncryptorBundle encryptor;
  XappBundle xapp;
  IssuanceReport report;
  std::string mpk_fingerprint;
  std::vector<std::string> key_fingerprints;
};

class IssuanceRefused : public ValidationError {
 public:
  explicit IssuanceRefused(IssuanceReport report)
      : ValidationError(describe(report)), report_(std::move(report)) {}

  const IssuanceReport& report() const { return report_; }

  static std::string describe(const IssuanceReport& r) {
    std::string s = "key issuance refused:";
    if (!r.budget.passed)
      s += " key budget violated (" + std::to_string(r.budget.n) + " keys for " + std::to_string(r.budget.l) + " inputs)";
    if (!r.basis.passed) s += " standard basis vector e_" + std::to_string(*r.basis.offending_basis_index) + " in span";
    return s;
  }

 private:
  IssuanceReport report_;
};

// 64-bit FNV-1a, hex; identifies key material in logs without revealing it.
inline std::string fingerprint(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// Validates the first layer, runs setup and key derivation. The master
// secret never leaves this function.
template <EntropySource Rng>
KdcIssue kdc_issue(const QuantizedModel& model, const GroupParams& group, Rng& rng) {
  const IntMatrix& W = model.first_layer_weights();
  IssuanceReport report = validate_for_issuance(W);
  if (!report.passed) throw IssuanceRefused(report);

  KeyPair kp = setup(group, W.rows(), rng);
  KdcIssue out;
  out.report = report;
  out.encryptor = {kp.mpk, model.input_params()};
  out.xapp.group = group.name;
  out.xapp.keys = key_der(kp.msk, W, group);
  out.xapp.model = split_for_xapp(model);
  out.mpk_fingerprint = fingerprint(envelope::to_json(kp.mpk).dump());
  for (const auto& k : out.xapp.keys) out.key_fingerprints.push_back(fingerprint(envelope::to_json(k, group.name).dump()));
  for (auto& s : kp.msk.s) s = 0;
  return out;
}

inline json to_json(const EncryptorBundle& b) {
  return {{"role", "encryptor"}, {"mpk", envelope::to_json(b.mpk)}, {"input_quant", model_io::qp_to_json(b.input_quant)}};
}

inline EncryptorBundle encryptor_bundle_from_json(const json& j) {
  try {
    return {envelope::mpk_from_json(j.at("mpk")), model_io::qp_from_json(j.at("input_quant"))};
  } catch (const json::exception& e) {
    throw ParseError(std::string("encryptor bundle: ") + e.what());
  }
}

inline json to_json(const XappBundle& b) {
  return {{"role", "xapp"}, {"group", b.group}, {"keys", envelope::to_json(b.keys, b.group)}, {"model", xapp_io::to_json(b.model)}};
}

inline XappBundle xapp_bundle_from_json(const json& j) {
  try {
    return {j.at("group").get<std::string>(), envelope::fk_set_from_json(j.at("keys")), xapp_io::from_json(j.at("model"))};
  } catch (const json::exception& e) {
    throw ParseError(std::string("xapp bundle: ") + e.what());
  }
}

// What a party learned from the messages it received; the harness asserts
// key isolation on these.
struct ReceivedMaterial {
  std::set<std::string> envelope_kinds;
  bool first_layer_weights = false;

  void absorb(const json& j) {
    if (j.is_object()) {
      if (auto it = j.find("kind"); it != j.end() && it->is_string() && j.contains("data"))
        envelope_kinds.insert(it->get<std::string>());
      if (auto it = j.find("first_layer"); it != j.end() && it->is_object() && it->contains("q_weights"))
        first_layer_weights = true;
      if (j.contains("q_weights") && !j.contains("fused_relu")) first_layer_weights = true;
      for (const auto& [k, v] : j.items()) absorb(v);
    } else if (j.is_array()) {
      for (const auto& v : j) absorb(v);
    }
  }
};

// ---------------------------------------------------------------- encryptor

struct EncryptedWindow {
  std::uint64_t window_id = 0;
  std::int64_t start_us = 0;     // window handed to the encryptor
  std::int64_t enc_done_us = 0;  // ciphertext ready
  E2Frame frame;
};

inline json enc_kpm_payload(std::uint64_t window_id, const Ciphertext& ct, const std::string& group, std::int64_t sent_at) {
  return {{"window_id", window_id}, {"sent_at_us", sent_at}, {"ct", envelope::to_json(ct, group)}};
}

struct EncKpm {
  std::uint64_t window_id = 0;
  std::int64_t sent_at_us = 0;
  Ciphertext ct;
};

inline EncKpm parse_enc_kpm(std::string_view payload) {
  try {
    const json j = json::parse(payload);
    return {j.at("window_id").get<std::uint64_t>(), j.at("sent_at_us").get<std::int64_t>(),
            envelope::ct_from_json(j.at("ct"))};
  } catch (const json::exception& e) {
    throw ParseError(std::string("ENC_KPM: ") + e.what());
  }
}

template <EntropySource Rng>
class Encryptor {
 public:
  Encryptor(EncryptorBundle bundle, Rng& rng) : bundle_(std::move(bundle)), rng_(rng) {}

  const EncryptorBundle& bundle() const { return bundle_; }

  // Consumes the window; its plaintext does not outlive this call.
  EncryptedWindow encrypt_window(std::uint64_t window_id, KpmWindow window, bool corrupt = false) {
    EncryptedWindow out;
    out.window_id = window_id;
    out.start_us = now_us();
    std::vector<std::int64_t> xq = quantize_vector(window.readings, bundle_.input_quant);
    std::fill(window.readings.begin(), window.readings.end(), 0.0);
    Ciphertext ct = encrypt(bundle_.mpk, xq, rng_);
    std::fill(xq.begin(), xq.end(), 0);
    if (corrupt) ct.c0 = bundle_.mpk.group.mul(ct.c0, bundle_.mpk.group.g);  // fault injection
    out.enc_done_us = now_us();
    out.frame = {MsgType::EncKpm, window_id, enc_kpm_payload(window_id, ct, bundle_.mpk.group.name, out.enc_done_us).dump()};
    return out;
  }

 private:
  EncryptorBundle bundle_;
  Rng& rng_;
};

struct EncryptorStats {
  std::size_t sent = 0;
  std::size_t dropped = 0;
};

// Pulls windows from `source` until it returns nullopt. Windows that fail to
// encrypt are dropped and counted; ids stay monotone either way.
template <EntropySource Rng>
EncryptorStats encryptor_loop(const std::function<std::optional<KpmWindow>()>& source, Encryptor<Rng>& enc,
                              const std::function<void(EncryptedWindow&&)>& sink,
                              const std::function<bool(std::uint64_t)>& corrupt = {}) {
  EncryptorStats stats;
  for (std::uint64_t id = 0;; ++id) {
    std::optional<KpmWindow> w = source();
    if (!w) break;
    try {
      sink(enc.encrypt_window(id, std::move(*w), corrupt && corrupt(id)));
      ++stats.sent;
    } catch (const RangeError&) {
      ++stats.dropped;
    } catch (const ShapeError&) {
      ++stats.dropped;
    }
  }
  return stats;
}

// ---------------------------------------------------------------- xApp

struct ControlDecision {
  std::uint64_t window_id = 0;
  bool jammer_present = false;
  std::int64_t issued_at_us = 0;
};

struct XappOutcome {
  std::uint64_t window_id = 0;
  std::optional<ControlDecision> decision;  // nullopt: withheld
  std::string error;
  std::int64_t sent_at_us = 0;
  std::int64_t stored_at_us = 0;
  std::int64_t picked_at_us = 0;
  std::int64_t eval_us = 0;
};

struct XappStats {
  std::size_t decisions = 0;
  std::size_t alarms = 0;
};

inline json control_payload(const XappOutcome& o) {
  return {{"window_id", o.window_id},
          {"jammer_present", o.decision->jammer_present},
          {"issued_at_us", o.decision->issued_at_us},
          {"eval_us", o.eval_us},
          {"sent_at_us", o.sent_at_us},
          {"stored_at_us", o.stored_at_us},
          {"picked_at_us", o.picked_at_us}};
}

inline json dropped_payload(const XappOutcome& o) {
  return {{"window_id", o.window_id}, {"status", "dropped"}, {"reason", o.error}};
}

inline XappOutcome evaluate_record(const EncryptedInferenceContext& ctx, const DbRecord& rec) {
  XappOutcome out;
  out.window_id = rec.window_id;
  out.stored_at_us = rec.stored_at_us;
  out.picked_at_us = now_us();
  try {
    EncKpm msg = parse_enc_kpm(rec.payload);
    out.sent_at_us = msg.sent_at_us;
    const auto t0 = now_us();
    InferenceResult r = evaluate_encrypted(ctx, msg.ct);
    out.eval_us = now_us() - t0;
    out.decision = ControlDecision{rec.window_id, r.cls == 1, now_us()};
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

// Polls until `stop()` is true or the database is closed and drained.
// Failed windows are reported (decision withheld) and counted as alarms;
// the loop keeps going.
inline XappStats xapp_loop(RicDatabase& db, RicDatabase::Cursor& cur, const EncryptedInferenceContext& ctx,
                           const std::function<void(const XappOutcome&)>& sink,
                           const std::function<bool()>& stop = {},
                           std::chrono::milliseconds poll_interval = std::chrono::milliseconds(20)) {
  XappStats stats;
  for (;;) {
    if (stop && stop()) break;
    std::optional<DbRecord> rec = db.poll(cur, poll_interval);
    if (!rec) {
      if (db.drained(cur)) break;
      continue;
    }
    XappOutcome o = evaluate_record(ctx, *rec);
    if (o.decision) ++stats.decisions;
    else ++stats.alarms;
    sink(o);
  }
  return stats;
}

}  // namespace ztric::pipeline
