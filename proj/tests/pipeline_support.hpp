#pragma once

// Plaintext-boundary probes shared by the pipeline tests and the acceptance
// binary.

#include <json.hpp>

#include <algorithm>
#include <mutex>
#include <string>
#include <vector>

#include "ztric/bigint.hpp"
#include "ztric/bsgs.hpp"
#include "ztric/envelope.hpp"
#include "ztric/model_lab.hpp"
#include "ztric/pipeline/database.hpp"
#include "ztric/pipeline/net.hpp"
#include "ztric/quantizer.hpp"

namespace probe {

using ztric::Bytes;

// Quantized sentinel: distinct, non-constant bytes so an accidental match is
// implausible.
inline std::vector<std::int64_t> sentinel_pattern(std::size_t l) {
  std::vector<std::int64_t> x(l);
  for (std::size_t j = 0; j < l; ++j) x[j] = static_cast<std::int64_t>((97 + 37 * j) % 251) + 3;
  return x;
}

// Readings that quantize exactly to `xq` under `qp`.
inline ztric::KpmWindow sentinel_window(const std::vector<std::int64_t>& xq, const ztric::QuantParams& qp) {
  ztric::KpmWindow w;
  for (auto v : xq) w.readings.push_back(static_cast<double>(v - qp.zero_point) * qp.scale);
  return w;
}

// Encodings of the sentinel a careless implementation could emit.
inline std::vector<std::string> sentinel_encodings(const std::vector<std::int64_t>& xq) {
  std::string raw, csv;
  for (std::size_t j = 0; j < xq.size(); ++j) {
    raw.push_back(static_cast<char>(xq[j]));
    csv += (j ? "," : "") + std::to_string(xq[j]);
  }
  // Eight consecutive values are enough to identify the pattern.
  const std::vector<std::int64_t> head(xq.begin(), xq.begin() + std::min<std::size_t>(8, xq.size()));
  std::string head_csv;
  for (std::size_t j = 0; j < head.size(); ++j) head_csv += (j ? "," : "") + std::to_string(head[j]);
  const Bytes raw_bytes(raw.begin(), raw.end());
  return {raw, csv, head_csv, nlohmann::json(xq).dump(), ztric::base64::encode(raw_bytes)};
}

inline bool contains_any(std::string_view hay, const std::vector<std::string>& needles) {
  return std::any_of(needles.begin(), needles.end(),
                     [&](const std::string& n) { return hay.find(n) != std::string_view::npos; });
}

// Records every frame seen on any channel.
struct Recorder {
  std::mutex mu;
  std::vector<std::string> frames;

  ztric::pipeline::WireTap tap() {
    return [this](const char*, bool, std::span<const std::uint8_t> bytes) {
      std::lock_guard lock(mu);
      frames.emplace_back(bytes.begin(), bytes.end());
    };
  }
};

// A consumer with database access but no keys. It tries the only attack open
// to it, a discrete log of every ciphertext component over the plaintext
// range, and reports how many plaintext values it learned.
struct SnoopReport {
  std::size_t records = 0;
  std::size_t ciphertexts = 0;
  std::size_t malformed = 0;
  std::size_t recovered = 0;
};

inline SnoopReport snoop(const std::vector<ztric::pipeline::DbRecord>& records, const ztric::GroupParams& G) {
  SnoopReport rep;
  const ztric::BsgsTable table(G, G.g, {0, 255});
  for (const auto& rec : records) {
    ++rep.records;
    try {
      const auto j = nlohmann::json::parse(rec.payload);
      std::vector<std::string> keys;
      for (const auto& [k, v] : j.items()) keys.push_back(k);
      if (keys != std::vector<std::string>{"ct", "sent_at_us", "window_id"}) {
        ++rep.malformed;
        continue;
      }
      const ztric::Ciphertext ct = ztric::envelope::ct_from_json(j.at("ct"));
      ++rep.ciphertexts;
      std::vector<ztric::BigInt> elems{ct.c0};
      elems.insert(elems.end(), ct.c.begin(), ct.c.end());
      for (const auto& e : elems) {
        try {
          table.solve(e);
          ++rep.recovered;
        } catch (const ztric::BoundExceededError&) {
        }
      }
    } catch (const std::exception&) {
      ++rep.malformed;
    }
  }
  return rep;
}

}  // namespace probe
