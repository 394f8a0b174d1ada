#include <gtest/gtest.h>

#include <random>
#include <set>

#include "support.hpp"
#include "ztric/bsgs.hpp"
#include "ztric/envelope.hpp"
#include "ztric/group.hpp"
#include "ztric/ipfe.hpp"

using namespace ztric;

namespace {

const GroupParams& toy() { return named_group("toy-p23"); }

MasterSecretKey toy_msk() { return {{BigInt(3), BigInt(5)}}; }

std::vector<BigInt> big(std::initializer_list<long> v) {
  std::vector<BigInt> out;
  for (long x : v) out.emplace_back(x);
  return out;
}

}  // namespace

// ---------------------------------------------------------------- bigint codecs

TEST(Bytes, MinimalBigEndian) {
  EXPECT_TRUE(to_bytes(BigInt(0)).empty());
  EXPECT_EQ(to_bytes(BigInt(1)), (Bytes{0x01}));
  EXPECT_EQ(to_bytes(BigInt(256)), (Bytes{0x01, 0x00}));
  EXPECT_EQ(from_bytes(Bytes{0x01, 0x00}), BigInt(256));
}

TEST(Bytes, LengthPrefixed) {
  EXPECT_EQ(encode_length_prefixed(BigInt(0x1234)), (Bytes{0, 0, 0, 2, 0x12, 0x34}));
  EXPECT_EQ(encode_length_prefixed(BigInt(0)), (Bytes{0, 0, 0, 0}));
  EXPECT_EQ(decode_length_prefixed(Bytes{0, 0, 0, 2, 0x12, 0x34}), BigInt(0x1234));
  EXPECT_THROW(decode_length_prefixed(Bytes{0, 0, 0, 2, 0x00, 0x34}), ParseError);
  EXPECT_THROW(decode_length_prefixed(Bytes{0, 0, 0, 3, 0x12, 0x34}), ParseError);
  EXPECT_THROW(decode_length_prefixed(Bytes{0, 0}), ParseError);
  const BigInt p = named_group("modp2048").p;
  EXPECT_EQ(decode_length_prefixed(encode_length_prefixed(p)), p);
}

TEST(Base64, Rfc4648Vectors) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
      {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, enc] : cases) {
    Bytes b(plain.begin(), plain.end());
    EXPECT_EQ(base64::encode(b), enc);
    EXPECT_EQ(base64::decode(enc), b);
  }
  EXPECT_THROW(base64::decode("Zm9"), ParseError);
  EXPECT_THROW(base64::decode("Zm9*"), ParseError);
}

// ---------------------------------------------------------------- groups

TEST(Groups, RegistryEntriesAreValid) {
  for (const auto& name : group_names()) {
    SCOPED_TRACE(name);
    EXPECT_NO_THROW(validate(named_group(name)));
  }
  EXPECT_EQ(group_names().size(), 4u);
}

TEST(Groups, ToyParameters) {
  EXPECT_EQ(toy().p, 23);
  EXPECT_EQ(toy().q, 11);
  EXPECT_EQ(toy().g, 4);
  // 4 generates the 11 quadratic residues mod 23.
  std::set<std::uint64_t> seen;
  for (std::uint64_t e = 0; e < 11; ++e) seen.insert(oracle::powmod(4, e, 23));
  EXPECT_EQ(seen.size(), 11u);
}

TEST(Groups, Test160IsReproducibleFromItsSeed) {
  SeededEntropy rng(detail::kTest160Seed);
  const GroupParams gen = generate_safe_prime_group("test-160", 160, rng);
  const GroupParams& reg = named_group("test-160");
  EXPECT_EQ(gen.q, reg.q);
  EXPECT_EQ(gen.p, reg.p);
  EXPECT_EQ(bit_length(reg.q), 160u);
}

TEST(Groups, ModpPrimesHaveExpectedSize) {
  EXPECT_EQ(bit_length(named_group("modp2048").p), 2048u);
  EXPECT_EQ(bit_length(named_group("modp3072").p), 3072u);
  // g = 2 is a quadratic residue because p = 7 mod 8.
  EXPECT_EQ(BigInt(named_group("modp2048").p % 8), 7);
}

TEST(Groups, InvalidParametersRejected) {
  EXPECT_THROW(validate(GroupParams{"bad", BigInt(23), BigInt(11), BigInt(5)}), ParameterError);  // 5 is a non-residue
  EXPECT_THROW(validate(GroupParams{"bad", BigInt(23), BigInt(11), BigInt(1)}), ParameterError);
  EXPECT_THROW(validate(GroupParams{"bad", BigInt(25), BigInt(12), BigInt(4)}), ParameterError);
  EXPECT_THROW(named_group("nope"), ParameterError);
  SeededEntropy rng(1);
  EXPECT_THROW(setup(GroupParams{"bad", BigInt(23), BigInt(11), BigInt(5)}, 2, rng), ParameterError);
}

// ---------------------------------------------------------------- setup / key derivation

TEST(Setup, ToyPublicKey) {
  const MasterPublicKey mpk = public_key_for(toy(), toy_msk());
  EXPECT_EQ(mpk.h, big({18, 12}));
  EXPECT_EQ(oracle::powmod(4, 3, 23), 18u);
  EXPECT_EQ(oracle::powmod(4, 5, 23), 12u);
}

TEST(Setup, ExponentOneIsGenerator) {
  const MasterPublicKey mpk = public_key_for(toy(), MasterSecretKey{{BigInt(1)}});
  EXPECT_EQ(mpk.h, std::vector<BigInt>{toy().g});
}

TEST(Setup, Modp2048KeysInSubgroup) {
  SeededEntropy rng(7);
  const GroupParams& G = named_group("modp2048");
  const KeyPair kp = setup(G, 50, rng);
  ASSERT_EQ(kp.mpk.h.size(), 50u);
  for (std::size_t j = 0; j < 50; ++j) {
    EXPECT_EQ(powm(kp.mpk.h[j], G.q, G.p), 1);
    EXPECT_GE(kp.msk.s[j], 1);
    EXPECT_LT(kp.msk.s[j], G.q);
    EXPECT_EQ(kp.mpk.h[j], powm(G.g, kp.msk.s[j], G.p));
  }
}

TEST(Setup, RejectsEmptyVector) {
  SeededEntropy rng(1);
  EXPECT_THROW(setup(toy(), 0, rng), ParameterError);
}

TEST(KeyDer, ToyVectors) {
  const IntMatrix W{{2, 0, -1}, {1, 0, 1}};
  const auto keys = key_der(toy_msk(), W, toy());
  ASSERT_EQ(keys.size(), 3u);
  EXPECT_EQ(keys[0].sk, 0);  // (6 + 5) mod 11
  EXPECT_EQ(keys[1].sk, 0);  // zero column
  EXPECT_EQ(keys[2].sk, 2);  // (-3 + 5) mod 11
  EXPECT_EQ(keys[2].w, (std::vector<std::int64_t>{-1, 1}));
  EXPECT_EQ(oracle::exp_mod(-3 + 5, 11), 2u);
}

TEST(KeyDer, ShapeMismatch) {
  EXPECT_THROW(key_der(toy_msk(), IntMatrix{{1}, {2}, {3}}, toy()), ShapeError);
  EXPECT_THROW(key_der(toy_msk(), IntMatrix(2, 0), toy()), ShapeError);
}

// ---------------------------------------------------------------- encryption

TEST(Encrypt, ToyVectorWithFixedNonce) {
  const MasterPublicKey mpk = public_key_for(toy(), toy_msk());
  const Ciphertext ct = encrypt_with_nonce(mpk, std::vector<std::int64_t>{1, 2}, BigInt(2));
  const std::uint64_t c1 = oracle::mulmod(oracle::powmod(18, 2, 23), oracle::powmod(4, 1, 23), 23);
  const std::uint64_t c2 = oracle::mulmod(oracle::powmod(12, 2, 23), oracle::powmod(4, 2, 23), 23);
  EXPECT_EQ(ct.c0, 16);
  EXPECT_EQ(ct.c, big({static_cast<long>(c1), static_cast<long>(c2)}));
  EXPECT_EQ(c1, 8u);
  EXPECT_EQ(c2, 4u);
  EXPECT_EQ(ct.element_count(), 3u);
}

TEST(Encrypt, RangeAndShapeChecked) {
  const MasterPublicKey mpk = public_key_for(toy(), toy_msk());
  SeededEntropy rng(1);
  EXPECT_THROW(encrypt(mpk, std::vector<std::int64_t>{256, 0}, rng), RangeError);
  EXPECT_THROW(encrypt(mpk, std::vector<std::int64_t>{-1, 0}, rng), RangeError);
  EXPECT_THROW(encrypt(mpk, std::vector<std::int64_t>{1, 2, 3}, rng), ShapeError);
  EXPECT_THROW(encrypt_with_nonce(mpk, std::vector<std::int64_t>{1, 2}, BigInt(0)), RangeError);
  EXPECT_THROW(encrypt_with_nonce(mpk, std::vector<std::int64_t>{1, 2}, BigInt(11)), RangeError);
}

TEST(Encrypt, Randomized) {
  const GroupParams& G = named_group("test-160");
  SeededEntropy rng(3);
  const KeyPair kp = setup(G, 4, rng);
  const std::vector<std::int64_t> x{5, 0, 255, 17};
  std::set<std::string> seen;
  for (int i = 0; i < 20; ++i) {
    const Ciphertext a = encrypt(kp.mpk, x, rng);
    const Ciphertext b = encrypt(kp.mpk, x, rng);
    EXPECT_NE(a.c0, b.c0);
    for (std::size_t j = 0; j < x.size(); ++j) EXPECT_NE(a.c[j], b.c[j]);
    seen.insert(a.c0.get_str(16));
    seen.insert(b.c0.get_str(16));
  }
  EXPECT_EQ(seen.size(), 40u);
}

TEST(Encrypt, ComponentsInSubgroup) {
  const GroupParams& G = named_group("test-160");
  SeededEntropy rng(4);
  const KeyPair kp = setup(G, 8, rng);
  const Ciphertext ct = encrypt(kp.mpk, std::vector<std::int64_t>{0, 1, 2, 3, 252, 253, 254, 255}, rng);
  EXPECT_TRUE(G.in_subgroup(ct.c0));
  for (const auto& c : ct.c) EXPECT_TRUE(G.in_subgroup(c));
}

// ---------------------------------------------------------------- decryption

TEST(Decrypt, ToyVector) {
  const MasterPublicKey mpk = public_key_for(toy(), toy_msk());
  const auto keys = key_der(toy_msk(), IntMatrix{{2}, {1}}, toy());
  const Ciphertext ct = encrypt_with_nonce(mpk, std::vector<std::int64_t>{1, 2}, BigInt(2));
  EXPECT_EQ(decrypt_inner_product(ct, keys[0], DlogBound{0, 10}, toy()), 4);
}

TEST(Decrypt, ZeroPlaintextAndZeroKey) {
  const MasterPublicKey mpk = public_key_for(toy(), toy_msk());
  SeededEntropy rng(9);
  const auto keys = key_der(toy_msk(), IntMatrix{{2, 0, 1}, {1, 0, -1}}, toy());
  const Ciphertext zero = encrypt(mpk, std::vector<std::int64_t>{0, 0}, rng);
  for (const auto& k : keys) EXPECT_EQ(decrypt_inner_product(zero, k, DlogBound{-5, 5}, toy()), 0);
  const Ciphertext any = encrypt(mpk, std::vector<std::int64_t>{200, 31}, rng);
  EXPECT_EQ(decrypt_inner_product(any, keys[1], DlogBound{-5, 5}, toy()), 0);
}

TEST(Decrypt, ShapeMismatch) {
  const MasterPublicKey mpk = public_key_for(toy(), toy_msk());
  const Ciphertext ct = encrypt_with_nonce(mpk, std::vector<std::int64_t>{1, 2}, BigInt(2));
  FunctionalKey fk{{1, 1, 1}, BigInt(0)};
  EXPECT_THROW(decrypt_inner_product(ct, fk, DlogBound{-5, 5}, toy()), ShapeError);
}

// The toy group has order 11, so exponents only identify an inner product
// inside a window of width <= 11. Random small vectors keep <x, w> in [-5, 5].
TEST(Decrypt, ToyRoundTripWithinGroupOrder) {
  std::mt19937_64 gen(11);
  SeededEntropy rng(12);
  const MasterSecretKey msk = toy_msk();
  const MasterPublicKey mpk = public_key_for(toy(), msk);
  const BsgsTable table(toy(), toy().g, DlogBound{-5, 5});
  std::uniform_int_distribution<std::int64_t> xd(0, 255), wd(-127, 127);
  int checked = 0;
  while (checked < 1000) {
    std::vector<std::int64_t> x{xd(gen), xd(gen)}, w{wd(gen), wd(gen)};
    const std::int64_t ip = oracle::dot(x, w);
    if (ip < -5 || ip > 5) continue;
    const auto fk = derive_key(msk, w, toy());
    EXPECT_EQ(decrypt_inner_product(encrypt(mpk, x, rng), fk, table, toy()), ip);
    ++checked;
  }
}

TEST(Decrypt, Test160RoundTripFullRange) {
  const GroupParams& G = named_group("test-160");
  std::mt19937_64 gen(160);
  SeededEntropy rng(161);
  const std::size_t l = 8;
  const KeyPair kp = setup(G, l, rng);
  const BsgsTable table(G, G.g, default_bound(l));
  std::uniform_int_distribution<std::int64_t> xd(0, 255), wd(-127, 127);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::int64_t> x(l), w(l);
    for (auto& v : x) v = xd(gen);
    for (auto& v : w) v = wd(gen);
    const auto fk = derive_key(kp.msk, w, G);
    ASSERT_EQ(decrypt_inner_product(encrypt(kp.mpk, x, rng), fk, table, G), oracle::dot(x, w));
  }
  // Extremes of the window.
  std::vector<std::int64_t> hi(l, 255), wmax(l, 127), wmin(l, -127);
  EXPECT_EQ(decrypt_inner_product(encrypt(kp.mpk, hi, rng), derive_key(kp.msk, wmax, G), table, G),
            static_cast<std::int64_t>(l) * 255 * 127);
  EXPECT_EQ(decrypt_inner_product(encrypt(kp.mpk, hi, rng), derive_key(kp.msk, wmin, G), table, G),
            -static_cast<std::int64_t>(l) * 255 * 127);
}

TEST(Decrypt, OutOfBoundSignalled) {
  const GroupParams& G = named_group("test-160");
  SeededEntropy rng(5);
  const KeyPair kp = setup(G, 2, rng);
  const auto fk = derive_key(kp.msk, std::vector<std::int64_t>{100, 100}, G);
  const Ciphertext ct = encrypt(kp.mpk, std::vector<std::int64_t>{200, 200}, rng);
  EXPECT_THROW(decrypt_inner_product(ct, fk, DlogBound{-1000, 1000}, G), BoundExceededError);
  EXPECT_EQ(decrypt_inner_product(ct, fk, DlogBound{-40000, 40000}, G), 40000);
}

// Each line of the displayed correctness proof evaluated separately with
// 64-bit arithmetic, then compared with the library's decryption.
TEST(Decrypt, ProofLinesOnToyGroup) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 50; ++trial) {
    const oracle::ProofCase pc = oracle::proof_case(gen);
    EXPECT_EQ(pc.line1, pc.line2);
    EXPECT_EQ(pc.line2, pc.line3);
    EXPECT_EQ(pc.line3, pc.line4);

    MasterSecretKey msk;
    for (auto v : pc.s) msk.s.emplace_back(static_cast<long>(v));
    const MasterPublicKey mpk = public_key_for(toy(), msk);
    const Ciphertext ct = encrypt_with_nonce(mpk, pc.x, BigInt(static_cast<long>(pc.r)));
    EXPECT_EQ(ct.c0, static_cast<long>(pc.c0));
    const FunctionalKey fk = derive_key(msk, pc.w, toy());
    EXPECT_EQ(fk.sk, pc.sk);
    EXPECT_EQ(decrypt_to_element(ct, fk, toy()), static_cast<long>(pc.line1));
  }
}

// ---------------------------------------------------------------- BSGS

TEST(Bsgs, ToyVectors) {
  EXPECT_EQ(bsgs_dlog(toy().g, BigInt(1), DlogBound{-10, 10}, toy()), 0);
  EXPECT_EQ(oracle::powmod(4, 7, 23), 8u);
  EXPECT_EQ(bsgs_dlog(BigInt(4), BigInt(8), DlogBound{0, 10}, toy()), 7);
  const std::uint64_t inv43 = oracle::powmod(oracle::powmod(4, 3, 23), 21, 23);
  EXPECT_EQ(inv43, 9u);
  // In a group of order 11 the window [-10, 10] holds both -3 and 8; the
  // smallest exponent is returned.
  EXPECT_EQ(bsgs_dlog(BigInt(4), BigInt(9), DlogBound{-10, 10}, toy()), -3);
}

TEST(Bsgs, NotFound) {
  const GroupParams& G = named_group("test-160");
  EXPECT_THROW(bsgs_dlog(G.g, G.gpow(BigInt(1000)), DlogBound{-999, 999}, G), BoundExceededError);
  EXPECT_THROW(bsgs_dlog(G.g, G.gpow(BigInt(1000)), DlogBound{1, 999}, G), ParameterError);
}

TEST(Bsgs, AgreesWithExhaustiveScan) {
  const GroupParams& G = named_group("test-160");
  std::mt19937_64 gen(99);
  for (std::int64_t width : {1, 2, 3, 17, 100, 1000, 4097, 65536}) {
    std::uniform_int_distribution<std::int64_t> lo_d(-width + 1, 0);
    const std::int64_t lo = lo_d(gen);
    const DlogBound b{lo, lo + width - 1};
    const BsgsTable table(G, G.g, b);
    // Exhaustive table of the whole window.
    std::map<std::string, std::int64_t> scan;
    BigInt cur = G.pow(G.g, BigInt(static_cast<unsigned long>(-lo)));
    cur = G.inv(cur);
    for (std::int64_t e = b.lo; e <= b.hi; ++e) {
      scan.emplace(cur.get_str(16), e);
      cur = G.mul(cur, G.g);
    }
    std::uniform_int_distribution<std::int64_t> ed(b.lo, b.hi);
    for (int i = 0; i < 25; ++i) {
      const std::int64_t e = ed(gen);
      const BigInt target = e < 0 ? G.inv(G.gpow(BigInt(static_cast<long>(-e)))) : G.gpow(BigInt(static_cast<long>(e)));
      ASSERT_EQ(table.solve(target), scan.at(target.get_str(16)));
    }
    EXPECT_EQ(table.solve(G.inv(G.pow(G.g, BigInt(static_cast<unsigned long>(-b.lo))))), b.lo);
    EXPECT_EQ(table.solve(G.gpow(BigInt(static_cast<long>(b.hi)))), b.hi);
  }
}

// ---------------------------------------------------------------- envelopes

TEST(Envelope, RoundTrips) {
  const GroupParams& G = named_group("test-160");
  SeededEntropy rng(21);
  const KeyPair kp = setup(G, 3, rng);
  const IntMatrix W{{1, -2}, {0, 5}, {127, -127}};
  const auto keys = key_der(kp.msk, W, G);
  const Ciphertext ct = encrypt(kp.mpk, std::vector<std::int64_t>{1, 2, 3}, rng);

  const auto mpk_j = envelope::to_json(kp.mpk);
  EXPECT_EQ(mpk_j.at("version"), 1);
  EXPECT_EQ(mpk_j.at("kind"), "mpk");
  EXPECT_EQ(mpk_j.at("group"), "test-160");
  EXPECT_EQ(mpk_j.at("l"), 3);
  EXPECT_EQ(envelope::mpk_from_json(mpk_j).h, kp.mpk.h);
  EXPECT_EQ(envelope::msk_from_json(envelope::to_json(kp.msk, G.name)).s, kp.msk.s);
  const auto back = envelope::fk_set_from_json(envelope::to_json(keys, G.name));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].w, keys[1].w);
  EXPECT_EQ(back[1].sk, keys[1].sk);
  const auto ct_j = envelope::to_json(ct, G.name);
  EXPECT_EQ(ct_j.at("data").size(), 4u);
  const Ciphertext ct2 = envelope::ct_from_json(ct_j);
  EXPECT_EQ(ct2.c0, ct.c0);
  EXPECT_EQ(ct2.c, ct.c);
}

TEST(Envelope, ByteLayout) {
  // data entries are base64 of a 4-byte big-endian length and the magnitude.
  const MasterPublicKey mpk = public_key_for(toy(), toy_msk());
  const auto j = envelope::to_json(mpk);
  EXPECT_EQ(j.at("data")[0], base64::encode(Bytes{0, 0, 0, 1, 18}));
  EXPECT_EQ(j.at("data")[0], "AAAAARI=");
}

TEST(Envelope, Rejections) {
  const MasterPublicKey mpk = public_key_for(toy(), toy_msk());
  auto j = envelope::to_json(mpk);
  auto wrong_kind = j;
  wrong_kind["kind"] = "ct";
  EXPECT_THROW(envelope::mpk_from_json(wrong_kind), ParseError);
  auto wrong_version = j;
  wrong_version["version"] = 2;
  EXPECT_THROW(envelope::mpk_from_json(wrong_version), ParseError);
  auto not_member = j;
  not_member["data"][0] = envelope::encode_element(BigInt(5));  // non-residue mod 23
  EXPECT_THROW(envelope::mpk_from_json(not_member), ParseError);
  auto short_data = j;
  short_data["l"] = 3;
  EXPECT_THROW(envelope::mpk_from_json(short_data), ParseError);
  EXPECT_THROW(envelope::fk_set_from_json(j), ParseError);
}
