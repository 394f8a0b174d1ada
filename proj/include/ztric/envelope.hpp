#pragma once

// JSON envelopes for key material and ciphertexts:
//
//   {"version":1,"group":"<name>","kind":"mpk|msk|fk|ct","l":<int>,"data":[...]}
//
// Every entry of "data" is base64 of a 4-byte big-endian length followed by
// the minimal big-endian magnitude of one group element or exponent (zero is
// the 4-byte prefix 00 00 00 00 alone).
//
//   mpk: data = [h_1 .. h_l]
//   msk: data = [s_1 .. s_l]
//   fk:  data = [sk], plus "w": [w_1 .. w_l] as JSON integers
//   ct:  data = [c0, c_1 .. c_l]
//
// A functional key set is a JSON array of fk envelopes in column order.

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

#include "ztric/bigint.hpp"
#include "ztric/errors.hpp"
#include "ztric/group.hpp"
#include "ztric/ipfe.hpp"

namespace ztric::envelope {

using nlohmann::json;

inline constexpr int kVersion = 1;

inline std::string encode_element(const BigInt& v) { return base64::encode(encode_length_prefixed(v)); }

inline BigInt decode_element(const json& j) {
  if (!j.is_string()) throw ParseError("envelope: data entries must be base64 strings");
  return decode_length_prefixed(base64::decode(j.get<std::string>()));
}

inline json make(std::string_view group, std::string_view kind, std::size_t l,
                 const std::vector<BigInt>& data) {
  json out;
  out["version"] = kVersion;
  out["group"] = std::string(group);
  out["kind"] = std::string(kind);
  out["l"] = l;
  json arr = json::array();
  for (const auto& v : data) arr.push_back(encode_element(v));
  out["data"] = std::move(arr);
  return out;
}

struct Parsed {
  std::string group;
  std::size_t l = 0;
  std::vector<BigInt> data;
};

inline Parsed open(const json& j, std::string_view kind) {
  try {
    if (!j.is_object()) throw ParseError("envelope: expected a JSON object");
    if (j.at("version").get<int>() != kVersion) throw ParseError("envelope: unsupported version");
    if (j.at("kind").get<std::string>() != kind)
      throw ParseError("envelope: expected kind '" + std::string(kind) + "', got '" +
                       j.at("kind").get<std::string>() + "'");
    Parsed p;
    p.group = j.at("group").get<std::string>();
    p.l = j.at("l").get<std::size_t>();
    for (const auto& e : j.at("data")) p.data.push_back(decode_element(e));
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("envelope: ") + e.what());
  }
}

inline json to_json(const MasterPublicKey& mpk) { return make(mpk.group.name, "mpk", mpk.length(), mpk.h); }

inline json to_json(const MasterSecretKey& msk, std::string_view group) {
  return make(group, "msk", msk.length(), msk.s);
}

inline json to_json(const FunctionalKey& fk, std::string_view group) {
  json out = make(group, "fk", fk.w.size(), {fk.sk});
  out["w"] = fk.w;
  return out;
}

inline json to_json(const Ciphertext& ct, std::string_view group) {
  std::vector<BigInt> data;
  data.reserve(ct.element_count());
  data.push_back(ct.c0);
  data.insert(data.end(), ct.c.begin(), ct.c.end());
  return make(group, "ct", ct.length(), data);
}

inline json to_json(const std::vector<FunctionalKey>& keys, std::string_view group) {
  json arr = json::array();
  for (const auto& k : keys) arr.push_back(to_json(k, group));
  return arr;
}

inline void require_in_subgroup(const GroupParams& G, const BigInt& v, const char* what) {
  if (!G.in_subgroup(v)) throw ParseError(std::string("envelope: ") + what + " is not a subgroup element");
}

inline MasterPublicKey mpk_from_json(const json& j) {
  Parsed p = open(j, "mpk");
  if (p.data.size() != p.l) throw ParseError("envelope: mpk data length does not match l");
  MasterPublicKey mpk{named_group(p.group), std::move(p.data)};
  for (const auto& h : mpk.h) require_in_subgroup(mpk.group, h, "mpk component");
  return mpk;
}

inline MasterSecretKey msk_from_json(const json& j) {
  Parsed p = open(j, "msk");
  if (p.data.size() != p.l) throw ParseError("envelope: msk data length does not match l");
  const GroupParams& G = named_group(p.group);
  for (const auto& s : p.data)
    if (s < 1 || s >= G.q) throw ParseError("envelope: msk component outside [1, q-1]");
  return MasterSecretKey{std::move(p.data)};
}

inline FunctionalKey fk_from_json(const json& j) {
  Parsed p = open(j, "fk");
  if (p.data.size() != 1) throw ParseError("envelope: fk carries exactly one secret");
  FunctionalKey fk;
  try {
    fk.w = j.at("w").get<std::vector<std::int64_t>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("envelope: fk weights: ") + e.what());
  }
  if (fk.w.size() != p.l) throw ParseError("envelope: fk weight length does not match l");
  fk.sk = p.data[0];
  if (fk.sk >= named_group(p.group).q) throw ParseError("envelope: fk secret not reduced mod q");
  return fk;
}

inline std::vector<FunctionalKey> fk_set_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("envelope: functional key set must be an array");
  std::vector<FunctionalKey> out;
  for (const auto& e : j) out.push_back(fk_from_json(e));
  return out;
}

inline Ciphertext ct_from_json(const json& j) {
  Parsed p = open(j, "ct");
  if (p.data.size() != p.l + 1) throw ParseError("envelope: ct must carry l + 1 elements");
  const GroupParams& G = named_group(p.group);
  for (const auto& v : p.data)
    if (v < 1 || v >= G.p) throw ParseError("envelope: ct component outside [1, p-1]");
  Ciphertext ct;
  ct.c0 = p.data[0];
  ct.c.assign(p.data.begin() + 1, p.data.end());
  return ct;
}

inline std::string group_of(const json& j) {
  try {
    return j.at("group").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("envelope: ") + e.what());
  }
}

}  // namespace ztric::envelope
