#pragma once

// E2-lite frame, all integers big-endian:
//
//   offset  size  field
//   0       4     magic "ZTRC"
//   4       1     version (1)
//   5       1     msg_type: KEY_ISSUE=1, ENC_KPM=2, CONTROL=3, ACK=4
//   6       8     correlation_id
//   14      4     payload_len
//   18      n     payload (UTF-8 JSON)

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ztric/bigint.hpp"
#include "ztric/errors.hpp"

namespace ztric::pipeline {

inline constexpr std::array<std::uint8_t, 4> kMagic = {'Z', 'T', 'R', 'C'};
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kHeaderSize = 18;
inline constexpr std::uint32_t kMaxPayload = 64u << 20;

enum class MsgType : std::uint8_t { KeyIssue = 1, EncKpm = 2, Control = 3, Ack = 4 };

inline const char* to_string(MsgType t) {
  switch (t) {
    case MsgType::KeyIssue: return "KEY_ISSUE";
    case MsgType::EncKpm: return "ENC_KPM";
    case MsgType::Control: return "CONTROL";
    case MsgType::Ack: return "ACK";
  }
  return "?";
}

struct E2Frame {
  MsgType type = MsgType::Ack;
  std::uint64_t correlation_id = 0;
  std::string payload;

  friend bool operator==(const E2Frame&, const E2Frame&) = default;
};

struct FrameHeader {
  MsgType type;
  std::uint64_t correlation_id;
  std::uint32_t payload_len;
};

inline Bytes encode_frame(const E2Frame& f) {
  if (f.payload.size() > kMaxPayload) throw ProtocolError("frame payload too large");
  Bytes out(kHeaderSize + f.payload.size());
  std::memcpy(out.data(), kMagic.data(), 4);
  out[4] = kFrameVersion;
  out[5] = static_cast<std::uint8_t>(f.type);
  for (int i = 0; i < 8; ++i) out[6 + i] = static_cast<std::uint8_t>(f.correlation_id >> (56 - 8 * i));
  const auto n = static_cast<std::uint32_t>(f.payload.size());
  for (int i = 0; i < 4; ++i) out[14 + i] = static_cast<std::uint8_t>(n >> (24 - 8 * i));
  std::memcpy(out.data() + kHeaderSize, f.payload.data(), f.payload.size());
  return out;
}

inline FrameHeader decode_header(std::span<const std::uint8_t> h) {
  if (h.size() < kHeaderSize) throw ProtocolError("truncated frame header");
  if (!std::equal(kMagic.begin(), kMagic.end(), h.begin())) throw ProtocolError("bad frame magic");
  if (h[4] != kFrameVersion) throw ProtocolError("unsupported frame version " + std::to_string(h[4]));
  const std::uint8_t t = h[5];
  if (t < 1 || t > 4) throw ProtocolError("unknown msg_type " + std::to_string(t));
  std::uint64_t id = 0;
  for (int i = 0; i < 8; ++i) id = (id << 8) | h[6 + i];
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n = (n << 8) | h[14 + i];
  if (n > kMaxPayload) throw ProtocolError("frame payload too large");
  return {static_cast<MsgType>(t), id, n};
}

inline E2Frame decode_frame(std::span<const std::uint8_t> bytes) {
  const FrameHeader h = decode_header(bytes);
  if (bytes.size() != kHeaderSize + h.payload_len) throw ProtocolError("payload_len does not match frame size");
  return {h.type, h.correlation_id,
          std::string(reinterpret_cast<const char*>(bytes.data() + kHeaderSize), h.payload_len)};
}

// Incremental decoder for a byte stream; feed() arbitrary chunks, next()
// yields complete frames in order.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> chunk) { buf_.insert(buf_.end(), chunk.begin(), chunk.end()); }

  std::optional<E2Frame> next() {
    if (buf_.size() - pos_ < kHeaderSize) return std::nullopt;
    const FrameHeader h = decode_header(std::span(buf_).subspan(pos_, kHeaderSize));
    if (buf_.size() - pos_ < kHeaderSize + h.payload_len) return std::nullopt;
    E2Frame f{h.type, h.correlation_id,
              std::string(reinterpret_cast<const char*>(buf_.data() + pos_ + kHeaderSize), h.payload_len)};
    pos_ += kHeaderSize + h.payload_len;
    if (pos_ == buf_.size()) {
      buf_.clear();
      pos_ = 0;
    }
    return f;
  }

  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  Bytes buf_;
  std::size_t pos_ = 0;
};

}  // namespace ztric::pipeline
