#pragma once

// Independent oracles and shared fixtures for the test binaries. Nothing here
// calls into the library's arithmetic: toy-group math uses plain 64-bit
// integers and ranks are computed modulo word-size primes.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ztric/matrix.hpp"
#include "ztric/model_lab.hpp"
#include "ztric/quantizer.hpp"

namespace oracle {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t powmod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  b %= m;
  for (; e; e >>= 1) {
    if (e & 1) r = mulmod(r, b, m);
    b = mulmod(b, b, m);
  }
  return r;
}

// Signed exponent reduced into [0, q).
inline std::uint64_t exp_mod(std::int64_t e, std::uint64_t q) {
  const auto sq = static_cast<std::int64_t>(q);
  return static_cast<std::uint64_t>(((e % sq) + sq) % sq);
}

inline std::int64_t dot(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Ten distinct primes just below 2^31. A nonzero integer below 2^300 has at
// most nine prime factors this large, so the maximum rank over these primes
// is the rational rank for every matrix in the tests (entries <= 127 in
// absolute value, at most 51 rows: Hadamard bound < 2^300).
inline const std::vector<std::uint64_t>& rank_primes() {
  static const std::vector<std::uint64_t> primes = [] {
    std::vector<std::uint64_t> out;
    for (std::uint64_t n = (1ULL << 31) - 1; out.size() < 10; n -= 2) {
      bool prime = true;
      for (std::uint64_t d = 3; d * d <= n; d += 2)
        if (n % d == 0) {
          prime = false;
          break;
        }
      if (prime) out.push_back(n);
    }
    return out;
  }();
  return primes;
}

// Rank of the column set `cols` (each of length l) modulo p.
inline std::size_t rank_mod(const std::vector<std::vector<std::int64_t>>& cols, std::uint64_t p) {
  if (cols.empty()) return 0;
  const std::size_t R = cols.size(), C = cols.front().size();
  std::vector<std::vector<std::uint64_t>> a(R, std::vector<std::uint64_t>(C));
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) a[r][c] = exp_mod(cols[r][c], p);
  std::size_t rank = 0;
  for (std::size_t c = 0; c < C && rank < R; ++c) {
    std::size_t piv = rank;
    while (piv < R && a[piv][c] == 0) ++piv;
    if (piv == R) continue;
    std::swap(a[piv], a[rank]);
    const std::uint64_t inv = powmod(a[rank][c], p - 2, p);
    for (std::size_t r = rank + 1; r < R; ++r) {
      if (a[r][c] == 0) continue;
      const std::uint64_t f = mulmod(a[r][c], inv, p);
      for (std::size_t k = c; k < C; ++k) a[r][k] = (a[r][k] + p - mulmod(f, a[rank][k], p)) % p;
    }
    ++rank;
  }
  return rank;
}

inline std::vector<std::vector<std::int64_t>> columns(const ztric::IntMatrix& W) {
  std::vector<std::vector<std::int64_t>> out;
  for (std::size_t i = 0; i < W.cols(); ++i) out.push_back(W.column(i));
  return out;
}

inline std::size_t rational_rank(const std::vector<std::vector<std::int64_t>>& cols) {
  std::size_t best = 0;
  for (auto p : rank_primes()) best = std::max(best, rank_mod(cols, p));
  return best;
}

// e_k in span(W) decided as rank(W) == rank([W | e_k]).
inline bool basis_in_span(const ztric::IntMatrix& W, std::size_t k, std::size_t rank_w) {
  auto cols = columns(W);
  std::vector<std::int64_t> e(W.rows(), 0);
  e[k] = 1;
  cols.push_back(e);
  // One prime showing a larger rank already proves e_k is outside the span.
  for (auto p : rank_primes())
    if (rank_mod(cols, p) > rank_w) return false;
  return true;
}

// Smallest k with e_k in span(W), or -1.
inline long first_basis_in_span(const ztric::IntMatrix& W) {
  const std::size_t r = rational_rank(columns(W));
  for (std::size_t k = 0; k < W.rows(); ++k)
    if (basis_in_span(W, k, r)) return static_cast<long>(k);
  return -1;
}

inline ztric::IntMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, std::int64_t lim = 127) {
  std::uniform_int_distribution<std::int64_t> d(-lim, lim);
  ztric::IntMatrix m(rows, cols);
  for (auto& v : m.flat()) v = d(rng);
  return m;
}

// One random case of the decryption proof on the toy group (p = 23, q = 11,
// g = 4), every line evaluated independently in 64-bit arithmetic:
//   line1  prod_j c_j^{w_j} / c0^{sk}
//   line2  prod_j g^{(s_j r + x_j) w_j} / g^{r <w,s>}
//   line3  g^{<w,s> r + <w,x> - r <w,s>}
//   line4  g^{<x,w>}
struct ProofCase {
  std::vector<std::int64_t> s, x, w;
  std::int64_t r = 0, sk = 0;
  std::uint64_t c0 = 0;
  std::uint64_t line1 = 0, line2 = 0, line3 = 0, line4 = 0;
};

inline ProofCase proof_case(std::mt19937_64& gen) {
  const std::uint64_t p = 23, q = 11, g = 4;
  ProofCase pc;
  const std::size_t l = 1 + gen() % 4;
  pc.s.resize(l);
  pc.x.resize(l);
  pc.w.resize(l);
  for (auto& v : pc.s) v = 1 + static_cast<std::int64_t>(gen() % (q - 1));
  for (auto& v : pc.x) v = static_cast<std::int64_t>(gen() % 256);
  for (auto& v : pc.w) v = static_cast<std::int64_t>(gen() % 255) - 127;
  pc.r = 1 + static_cast<std::int64_t>(gen() % (q - 1));
  pc.sk = static_cast<std::int64_t>(exp_mod(dot(pc.w, pc.s), q));
  const auto &s = pc.s, &x = pc.x, &w = pc.w;
  const std::int64_t r = pc.r, sk = pc.sk;
  auto inv = [&](std::uint64_t a) { return powmod(a, p - 2, p); };

  pc.c0 = powmod(g, r, p);
  std::uint64_t line1 = 1;
  for (std::size_t j = 0; j < l; ++j) {
    const std::uint64_t cj = mulmod(powmod(powmod(g, s[j], p), r, p), powmod(g, x[j], p), p);
    line1 = mulmod(line1, powmod(cj, exp_mod(w[j], q), p), p);
  }
  pc.line1 = mulmod(line1, inv(powmod(pc.c0, sk, p)), p);

  std::uint64_t num2 = 1;
  for (std::size_t j = 0; j < l; ++j) num2 = mulmod(num2, powmod(g, exp_mod((s[j] * r + x[j]) * w[j], q), p), p);
  pc.line2 = mulmod(num2, inv(powmod(g, exp_mod(r * dot(w, s), q), p)), p);
  pc.line3 = powmod(g, exp_mod(dot(w, s) * r + dot(w, x) - r * dot(w, s), q), p);
  pc.line4 = powmod(g, exp_mod(dot(x, w), q), p);
  return pc;
}

// Worst relative error between the analytic gradient and central
// differences, over every parameter of m.
inline double gradient_check(ztric::FloatModel m, const std::vector<std::vector<double>>& xs,
                             const std::vector<std::size_t>& ys, double h = 1e-6) {
  ztric::Gradients g(m);
  ztric::loss_and_gradients(m, xs, ys, &g);
  double worst = 0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = ztric::loss_and_gradients(m, xs, ys, nullptr);
    param = saved - h;
    const double down = ztric::loss_and_gradients(m, xs, ys, nullptr);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max(1e-6, std::abs(numeric) + std::abs(analytic));
    worst = std::max(worst, std::abs(numeric - analytic) / denom);
  };
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    auto w = m.layers[k].weights.flat();
    auto gw = g.weights[k].flat();
    for (std::size_t i = 0; i < w.size(); ++i) check(w[i], gw[i]);
    for (std::size_t i = 0; i < m.layers[k].bias.size(); ++i) check(m.layers[k].bias[i], g.bias[k][i]);
  }
  return worst;
}

// Toy net with weights and inputs drawn from `seed`, plus a fixed label set.
struct GradientCase {
  ztric::FloatModel model;
  std::vector<std::vector<double>> xs;
  std::vector<std::size_t> ys{0, 1, 1, 0};
};

inline GradientCase gradient_case(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  GradientCase c{ztric::make_mlp(dims), {}};
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& l : c.model.layers) {
    for (auto& v : l.weights.flat()) v = d(gen);
    for (auto& b : l.bias) b = d(gen);
  }
  c.xs.assign(c.ys.size(), std::vector<double>(dims.front()));
  for (auto& x : c.xs)
    for (auto& v : x) v = 2 * d(gen);
  return c;
}

}  // namespace oracle

namespace fixture {

// The seed-42 reference model per t, trained once per test binary.
inline const ztric::ReferenceModel& reference(std::size_t t) {
  static std::map<std::size_t, ztric::ReferenceModel> cache;
  auto it = cache.find(t);
  if (it == cache.end()) it = cache.emplace(t, ztric::build_reference_model(t)).first;
  return it->second;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "ztric-test-XXXXXX").string();
    path_ = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
