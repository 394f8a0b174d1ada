#pragma once

// DDH inner-product functional encryption.
//
//   setup:    s <- [1, q-1]^l,           h_j = g^{s_j}
//   key_der:  sk_w = <w, s> mod q
//   encrypt:  r <- [1, q-1],             ct = (g^r, h_j^r * g^{x_j})
//   decrypt:  prod_j c_j^{w_j} / c0^{sk_w} = g^{<x, w>}, then a bounded dlog.
//
// No constant-time guarantees: exponentiations use GMP's mpz_powm and the
// signed multi-exponentiation below branches on weight bits.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <vector>

#include "ztric/bigint.hpp"
#include "ztric/bsgs.hpp"
#include "ztric/errors.hpp"
#include "ztric/group.hpp"
#include "ztric/matrix.hpp"

namespace ztric {

inline constexpr std::int64_t kPlainMax = 255;   // quantized input range [0, 255]
inline constexpr std::int64_t kWeightMax = 127;  // first-layer weight range [-127, 127]

struct MasterSecretKey {
  std::vector<BigInt> s;

  std::size_t length() const { return s.size(); }
};

struct MasterPublicKey {
  GroupParams group;
  std::vector<BigInt> h;

  std::size_t length() const { return h.size(); }
};

struct FunctionalKey {
  std::vector<std::int64_t> w;
  BigInt sk;  // <w, s> mod q
};

struct Ciphertext {
  BigInt c0;
  std::vector<BigInt> c;

  std::size_t length() const { return c.size(); }
  std::size_t element_count() const { return c.size() + 1; }
};

struct KeyPair {
  MasterPublicKey mpk;
  MasterSecretKey msk;
};

// Derives the public half for a given secret vector; setup() draws s itself.
inline MasterPublicKey public_key_for(const GroupParams& group, const MasterSecretKey& msk) {
  MasterPublicKey mpk{group, {}};
  mpk.h.reserve(msk.s.size());
  for (const auto& sj : msk.s) {
    if (sj < 1 || sj >= group.q) throw RangeError("master secret component outside [1, q-1]");
    mpk.h.push_back(group.gpow(sj));
  }
  return mpk;
}

template <EntropySource Rng>
KeyPair setup(const GroupParams& group, std::size_t l, Rng& rng) {
  if (l < 1) throw ParameterError("setup: vector length must be at least 1");
  validate(group);
  MasterSecretKey msk;
  msk.s.reserve(l);
  for (std::size_t j = 0; j < l; ++j) msk.s.push_back(uniform_in(BigInt(1), group.q - 1, rng));
  MasterPublicKey mpk = public_key_for(group, msk);
  return {std::move(mpk), std::move(msk)};
}

inline FunctionalKey derive_key(const MasterSecretKey& msk, std::span<const std::int64_t> w,
                                const GroupParams& group) {
  if (w.size() != msk.length())
    throw ShapeError("key_der: weight vector has " + std::to_string(w.size()) + " entries, expected " +
                     std::to_string(msk.length()));
  BigInt acc = 0;
  for (std::size_t j = 0; j < w.size(); ++j) acc += BigInt(static_cast<long>(w[j])) * msk.s[j];
  acc %= group.q;
  if (acc < 0) acc += group.q;
  return FunctionalKey{std::vector<std::int64_t>(w.begin(), w.end()), acc};
}

// One functional key per column of the l x n matrix W.
inline std::vector<FunctionalKey> key_der(const MasterSecretKey& msk, const IntMatrix& W,
                                          const GroupParams& group) {
  if (W.rows() != msk.length())
    throw ShapeError("key_der: W has " + std::to_string(W.rows()) + " rows, expected " +
                     std::to_string(msk.length()));
  if (W.cols() < 1) throw ShapeError("key_der: W has no columns");
  std::vector<FunctionalKey> keys;
  keys.reserve(W.cols());
  for (std::size_t i = 0; i < W.cols(); ++i) keys.push_back(derive_key(msk, W.column(i), group));
  return keys;
}

inline void check_plaintext(const MasterPublicKey& mpk, std::span<const std::int64_t> x) {
  if (x.size() != mpk.length())
    throw ShapeError("encrypt: plaintext has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(mpk.length()));
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < 0 || x[j] > kPlainMax)
      throw RangeError("encrypt: x[" + std::to_string(j) + "] = " + std::to_string(x[j]) +
                       " outside [0, 255]");
  }
}

// Deterministic core of encrypt(); r must lie in [1, q-1].
inline Ciphertext encrypt_with_nonce(const MasterPublicKey& mpk, std::span<const std::int64_t> x,
                                     const BigInt& r) {
  check_plaintext(mpk, x);
  const GroupParams& G = mpk.group;
  if (r < 1 || r >= G.q) throw RangeError("encrypt: nonce outside [1, q-1]");
  Ciphertext ct;
  ct.c0 = G.gpow(r);
  ct.c.reserve(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    BigInt mask = G.pow(mpk.h[j], r);
    ct.c.push_back(G.mul(mask, G.gpow(BigInt(static_cast<long>(x[j])))));
  }
  return ct;
}

template <EntropySource Rng>
Ciphertext encrypt(const MasterPublicKey& mpk, std::span<const std::int64_t> x, Rng& rng) {
  check_plaintext(mpk, x);
  BigInt r = uniform_in(BigInt(1), mpk.group.q - 1, rng);
  return encrypt_with_nonce(mpk, x, r);
}

// prod_j bases[j]^{exps[j]} mod p for small signed exponents, sharing the
// squarings across all bases (Straus interleaving). Negative exponents are
// folded into a second product that is inverted once.
inline BigInt signed_multi_exp(const GroupParams& G, std::span<const BigInt> bases,
                               std::span<const std::int64_t> exps) {
  auto product = [&](bool negative) {
    std::uint64_t max_mag = 0;
    for (auto e : exps)
      if ((e < 0) == negative && e != 0) max_mag = std::max<std::uint64_t>(max_mag, std::llabs(e));
    BigInt acc = 1;
    if (max_mag == 0) return acc;
    int top = 63 - __builtin_clzll(max_mag);
    for (int bit = top; bit >= 0; --bit) {
      if (bit != top) acc = G.mul(acc, acc);
      for (std::size_t j = 0; j < bases.size(); ++j) {
        const std::int64_t e = exps[j];
        if (e == 0 || (e < 0) != negative) continue;
        if ((static_cast<std::uint64_t>(std::llabs(e)) >> bit) & 1u) acc = G.mul(acc, bases[j]);
      }
    }
    return acc;
  };
  BigInt pos = product(false);
  BigInt neg = product(true);
  return neg == 1 ? pos : G.mul(pos, G.inv(neg));
}

// g^{<x, w>}: the group element a functional key unlocks.
inline BigInt decrypt_to_element(const Ciphertext& ct, const FunctionalKey& fk, const GroupParams& G) {
  if (ct.length() != fk.w.size())
    throw ShapeError("decrypt: ciphertext length " + std::to_string(ct.length()) +
                     " does not match key length " + std::to_string(fk.w.size()));
  BigInt num = signed_multi_exp(G, ct.c, fk.w);
  BigInt den = G.pow(ct.c0, fk.sk);
  return G.mul(num, G.inv(den));
}

inline std::int64_t decrypt_inner_product(const Ciphertext& ct, const FunctionalKey& fk,
                                          const BsgsTable& table, const GroupParams& G) {
  return table.solve(decrypt_to_element(ct, fk, G));
}

inline std::int64_t decrypt_inner_product(const Ciphertext& ct, const FunctionalKey& fk,
                                          DlogBound bound, const GroupParams& G) {
  return decrypt_inner_product(ct, fk, BsgsTable(G, G.g, bound), G);
}

// Window guaranteed to contain <x, w> for x in [0, 255]^l, w in [-127, 127]^l.
inline DlogBound default_bound(std::size_t l) {
  return DlogBound::symmetric(static_cast<std::int64_t>(l) * kPlainMax * kWeightMax);
}

// Tightest window covering every column of W over x in [0, 255]^l.
inline DlogBound bound_for_weights(const IntMatrix& W) {
  DlogBound b{0, 0};
  for (std::size_t i = 0; i < W.cols(); ++i) {
    std::int64_t lo = 0, hi = 0;
    for (std::size_t j = 0; j < W.rows(); ++j) {
      const std::int64_t w = W(j, i);
      (w < 0 ? lo : hi) += w * kPlainMax;
    }
    b.lo = std::min(b.lo, lo);
    b.hi = std::max(b.hi, hi);
  }
  return b;
}

}  // namespace ztric
