#pragma once

// Prime-order subgroups of quadratic residues modulo a safe prime p = 2q + 1.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ztric/bigint.hpp"
#include "ztric/errors.hpp"

namespace ztric {

// Miller-Rabin rounds; false-positive probability below 4^-32 = 2^-64.
inline constexpr int kPrimalityReps = 32;

struct GroupParams {
  std::string name;
  BigInt p;  // safe prime
  BigInt q;  // (p - 1) / 2, order of the subgroup
  BigInt g;  // generator of the order-q subgroup

  BigInt mul(const BigInt& a, const BigInt& b) const {
    BigInt r = a * b;
    mpz_mod(r.get_mpz_t(), r.get_mpz_t(), p.get_mpz_t());
    return r;
  }
  BigInt pow(const BigInt& base, const BigInt& exp) const { return powm(base, exp, p); }
  BigInt gpow(const BigInt& exp) const { return powm(g, exp, p); }
  BigInt inv(const BigInt& a) const { return invert(a, p); }

  bool in_subgroup(const BigInt& x) const { return x > 0 && x < p && pow(x, q) == 1; }
};

inline bool is_probable_prime(const BigInt& n) {
  return mpz_probab_prime_p(n.get_mpz_t(), kPrimalityReps) > 0;
}

// Throws ParameterError naming the first violated condition.
inline void validate(const GroupParams& gp) {
  if (gp.p != 2 * gp.q + 1) throw ParameterError(gp.name + ": p != 2q + 1");
  if (gp.q < 2 || !is_probable_prime(gp.q)) throw ParameterError(gp.name + ": q is not prime");
  if (!is_probable_prime(gp.p)) throw ParameterError(gp.name + ": p is not prime");
  if (gp.g <= 1 || gp.g >= gp.p) throw ParameterError(gp.name + ": generator out of range");
  if (gp.pow(gp.g, gp.q) != 1) throw ParameterError(gp.name + ": g is not in the order-q subgroup");
}

namespace detail {

inline const std::vector<unsigned>& small_primes() {
  static const std::vector<unsigned> primes = [] {
    std::vector<unsigned> out;
    std::vector<bool> composite(2000, false);
    for (unsigned i = 3; i < composite.size(); i += 2) {
      if (composite[i]) continue;
      out.push_back(i);
      for (unsigned j = i * i; j < composite.size(); j += 2 * i) composite[j] = true;
    }
    return out;
  }();
  return primes;
}

// Cheap rejection: q or 2q+1 divisible by a small odd prime.
inline bool sieve_rejects(const BigInt& q) {
  for (unsigned sp : small_primes()) {
    unsigned long r = mpz_fdiv_ui(q.get_mpz_t(), sp);
    if (r == 0 && q != sp) return true;
    if ((2 * r + 1) % sp == 0) return true;
  }
  return false;
}

}  // namespace detail

// Searches for a safe prime whose q has exactly `q_bits` bits; deterministic
// for a deterministic entropy source. The generator is fixed to 4 = 2^2,
// which is a non-trivial quadratic residue for every safe prime p > 5.
template <EntropySource Rng>
GroupParams generate_safe_prime_group(std::string name, std::size_t q_bits, Rng& rng) {
  if (q_bits < 8) throw ParameterError("safe prime search needs at least 8 bits");
  Bytes buf((q_bits + 7) / 8);
  const unsigned excess = static_cast<unsigned>(buf.size() * 8 - q_bits);
  for (;;) {
    rng.fill(buf);
    buf[0] &= static_cast<std::uint8_t>(0xff >> excess);
    buf[0] |= static_cast<std::uint8_t>(0x80 >> excess);
    buf[buf.size() - 1] |= 1;
    BigInt q = from_bytes(buf);
    if (detail::sieve_rejects(q)) continue;
    if (!is_probable_prime(q)) continue;
    BigInt p = 2 * q + 1;
    if (!is_probable_prime(p)) continue;
    return GroupParams{std::move(name), p, q, BigInt(4)};
  }
}

namespace detail {

inline constexpr std::string_view kModp2048Hex =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
    "83655D23DCA3AD961C62F356208552BB9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
    "15728E5A8AACAA68FFFFFFFFFFFFFFFF";

inline constexpr std::string_view kModp3072Hex =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
    "83655D23DCA3AD961C62F356208552BB9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
    "15728E5A8AAAC42DAD33170D04507A33A85521ABDF1CBA64ECFB850458DBEF0A8AEA71575D060C7DB3970F85A6E1E4C7"
    "ABF5AE8CDB0933D71E8C94E04A25619DCEE3D2261AD2EE6BF12FFA06D98A0864D87602733EC86A64521F2B18177B200C"
    "BBE117577A615D6C770988C0BAD946E208E24FA074E5AB3143DB5BFCE0FD108E4B82D120A93AD2CAFFFFFFFFFFFFFFFF";

// Output of generate_safe_prime_group("test-160", 160, SeededEntropy(kTest160Seed)).
inline constexpr std::uint64_t kTest160Seed = 160;
inline constexpr std::string_view kTest160QHex = "9a1f2455b22864df1092e49b77e36faa0d33c2dd";

inline GroupParams from_safe_prime_hex(std::string name, std::string_view p_hex, long g) {
  GroupParams gp;
  gp.name = std::move(name);
  gp.p = BigInt(std::string(p_hex), 16);
  gp.q = (gp.p - 1) / 2;
  gp.g = g;
  return gp;
}

inline std::map<std::string, GroupParams, std::less<>> build_registry() {
  std::map<std::string, GroupParams, std::less<>> reg;
  reg.emplace("toy-p23", GroupParams{"toy-p23", BigInt(23), BigInt(11), BigInt(4)});
  {
    GroupParams gp;
    gp.name = "test-160";
    gp.q = BigInt(std::string(kTest160QHex), 16);
    gp.p = 2 * gp.q + 1;
    gp.g = 4;
    reg.emplace(gp.name, gp);
  }
  reg.emplace("modp2048", from_safe_prime_hex("modp2048", kModp2048Hex, 2));
  reg.emplace("modp3072", from_safe_prime_hex("modp3072", kModp3072Hex, 2));
  return reg;
}

}  // namespace detail

inline const std::map<std::string, GroupParams, std::less<>>& group_registry() {
  static const auto reg = detail::build_registry();
  return reg;
}

inline const GroupParams& named_group(std::string_view name) {
  const auto& reg = group_registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw ParameterError("unknown group '" + std::string(name) + "'");
  return it->second;
}

inline std::vector<std::string> group_names() {
  std::vector<std::string> out;
  for (const auto& [name, gp] : group_registry()) out.push_back(name);
  return out;
}

}  // namespace ztric
