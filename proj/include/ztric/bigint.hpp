#pragma once

// Big-integer plumbing on top of GMP: entropy sources, uniform sampling,
// and the length-prefixed big-endian byte encoding used on disk and on the wire.

#include <gmpxx.h>
#include <sys/random.h>

#include <array>
#include <cerrno>
#include <concepts>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ztric/errors.hpp"

namespace ztric {

using BigInt = mpz_class;
using Bytes = std::vector<std::uint8_t>;

template <typename T>
concept EntropySource = requires(T& src, std::span<std::uint8_t> out) {
  { src.fill(out) } -> std::same_as<void>;
};

// Kernel CSPRNG.
class OsEntropy {
 public:
  void fill(std::span<std::uint8_t> out) {
    std::size_t done = 0;
    while (done < out.size()) {
      ssize_t got = ::getrandom(out.data() + done, out.size() - done, 0);
      if (got < 0) {
        if (errno == EINTR) continue;
        throw Error("getrandom failed");
      }
      done += static_cast<std::size_t>(got);
    }
  }
};

// Reproducible stream for tests and seeded CLI runs. Not cryptographic.
class SeededEntropy {
 public:
  explicit SeededEntropy(std::uint64_t seed) : engine_(seed) {}

  void fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
      if (avail_ == 0) {
        word_ = engine_();
        avail_ = 8;
      }
      b = static_cast<std::uint8_t>(word_ & 0xff);
      word_ >>= 8;
      --avail_;
    }
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t word_ = 0;
  int avail_ = 0;
};

static_assert(EntropySource<OsEntropy>);
static_assert(EntropySource<SeededEntropy>);

inline std::size_t bit_length(const BigInt& v) {
  return v == 0 ? 0 : mpz_sizeinbase(v.get_mpz_t(), 2);
}

inline BigInt from_bytes(std::span<const std::uint8_t> be) {
  BigInt v;
  if (!be.empty()) mpz_import(v.get_mpz_t(), be.size(), 1, 1, 1, 0, be.data());
  return v;
}

// Minimal big-endian magnitude; zero encodes as the empty array.
inline Bytes to_bytes(const BigInt& v) {
  if (v < 0) throw RangeError("negative value has no unsigned byte encoding");
  if (v == 0) return {};
  Bytes out((bit_length(v) + 7) / 8);
  std::size_t count = 0;
  mpz_export(out.data(), &count, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(count);
  return out;
}

// Uniform in [0, bound) by rejection on the top byte mask.
template <EntropySource Rng>
BigInt uniform_below(const BigInt& bound, Rng& rng) {
  if (bound <= 0) throw ParameterError("uniform_below: bound must be positive");
  const std::size_t bits = bit_length(bound);
  Bytes buf((bits + 7) / 8);
  const unsigned top_bits = static_cast<unsigned>(bits % 8);
  const std::uint8_t mask = top_bits == 0 ? 0xff : static_cast<std::uint8_t>((1u << top_bits) - 1);
  for (;;) {
    rng.fill(buf);
    buf[0] &= mask;
    BigInt v = from_bytes(buf);
    if (v < bound) return v;
  }
}

// Uniform in [lo, hi].
template <EntropySource Rng>
BigInt uniform_in(const BigInt& lo, const BigInt& hi, Rng& rng) {
  if (hi < lo) throw ParameterError("uniform_in: empty range");
  BigInt span = hi - lo + 1;
  return lo + uniform_below(span, rng);
}

inline BigInt powm(const BigInt& base, const BigInt& exp, const BigInt& mod) {
  BigInt r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

inline BigInt invert(const BigInt& a, const BigInt& mod) {
  BigInt r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0)
    throw RangeError("element has no modular inverse");
  return r;
}

// Non-negative residue of a signed machine integer.
inline BigInt mod_signed(std::int64_t v, const BigInt& mod) {
  BigInt r = BigInt(static_cast<long>(v)) % mod;
  if (r < 0) r += mod;
  return r;
}

namespace base64 {

inline constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string encode(std::span<const std::uint8_t> data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    std::uint32_t n = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  const std::size_t rest = data.size() - i;
  if (rest == 1) {
    std::uint32_t n = data[i] << 16;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    std::uint32_t n = (data[i] << 16) | (data[i + 1] << 8);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

inline Bytes decode(std::string_view text) {
  static const auto table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    for (std::size_t i = 0; i < kAlphabet.size(); ++i)
      t[static_cast<unsigned char>(kAlphabet[i])] = static_cast<int>(i);
    return t;
  }();
  if (text.size() % 4 != 0) throw ParseError("base64: length not a multiple of 4");
  Bytes out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) throw ParseError("base64: misplaced padding");
        v[k] = 0;
        ++pad;
      } else {
        if (pad) throw ParseError("base64: data after padding");
        v[k] = table[static_cast<unsigned char>(c)];
        if (v[k] < 0) throw ParseError("base64: invalid character");
      }
    }
    std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((n >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(n & 0xff));
  }
  return out;
}

}  // namespace base64

// 4-byte big-endian length followed by the minimal magnitude bytes.
inline Bytes encode_length_prefixed(const BigInt& v) {
  Bytes mag = to_bytes(v);
  Bytes out;
  out.reserve(4 + mag.size());
  const auto n = static_cast<std::uint32_t>(mag.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), mag.begin(), mag.end());
  return out;
}

inline BigInt decode_length_prefixed(std::span<const std::uint8_t> in) {
  if (in.size() < 4) throw ParseError("big integer: truncated length prefix");
  const std::uint32_t n = (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
                          (std::uint32_t{in[2]} << 8) | std::uint32_t{in[3]};
  if (in.size() != 4 + std::size_t{n}) throw ParseError("big integer: length prefix mismatch");
  if (n > 0 && in[4] == 0) throw ParseError("big integer: non-minimal encoding");
  return from_bytes(in.subspan(4));
}

}  // namespace ztric
