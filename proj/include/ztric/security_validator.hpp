#pragma once

// Checks the KDC runs on a first-layer weight matrix W (l inputs x n keys)
// before deriving functional keys.
//
// Key budget: n keys reveal n linear equations in l unknowns; issuance needs
// n < l, which leaves 256^(l - n) candidate 8-bit inputs.
//
// Standard basis: if some e_k lies in the column space of W, a key holder can
// combine inner products into x_k. Decided exactly with a fraction-free
// Gauss-Jordan reduction of W^T over the integers: e_k is in the row space
// of W^T iff column k is a pivot column whose reduced row has no other
// nonzero entry.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ztric/bigint.hpp"
#include "ztric/matrix.hpp"

namespace ztric {

struct KeyBudgetReport {
  std::size_t l = 0;
  std::size_t n = 0;
  std::size_t solution_space_bits = 0;  // 8 * (l - n) when passed
  bool passed = false;
};

struct BasisCheckReport {
  bool passed = false;
  std::optional<std::size_t> offending_basis_index;
  std::size_t rank = 0;
};

struct IssuanceReport {
  KeyBudgetReport budget;
  BasisCheckReport basis;
  bool passed = false;
};

inline KeyBudgetReport check_key_budget(std::size_t l, std::size_t n) {
  KeyBudgetReport r{l, n, 0, n < l};
  if (r.passed) r.solution_space_bits = 8 * (l - n);
  return r;
}

// Reduced row echelon form up to a positive-or-negative scale per row.
// Rows are kept primitive (content 1) so entries stay small.
struct ExactEchelon {
  Matrix<BigInt> rows;                // rank x cols, only the nonzero rows
  std::vector<std::size_t> pivots;    // pivot column of each row
};

namespace detail {

inline void make_primitive(std::span<BigInt> row) {
  BigInt g = 0;
  for (const auto& v : row)
    if (v != 0) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), v.get_mpz_t());
  if (g > 1)
    for (auto& v : row)
      if (v != 0) mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), g.get_mpz_t());
}

}  // namespace detail

inline ExactEchelon exact_rref(Matrix<BigInt> a) {
  const std::size_t R = a.rows(), C = a.cols();
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < C && r < R; ++c) {
    std::size_t sel = R;
    for (std::size_t i = r; i < R; ++i)
      if (a(i, c) != 0) {
        sel = i;
        break;
      }
    if (sel == R) continue;
    if (sel != r)
      for (std::size_t k = 0; k < C; ++k) std::swap(a(r, k), a(sel, k));
    const BigInt p = a(r, c);
    for (std::size_t i = 0; i < R; ++i) {
      if (i == r || a(i, c) == 0) continue;
      const BigInt f = a(i, c);
      for (std::size_t k = 0; k < C; ++k) a(i, k) = p * a(i, k) - f * a(r, k);
      detail::make_primitive(a.row(i));
    }
    detail::make_primitive(a.row(r));
    pivots.push_back(c);
    ++r;
  }
  ExactEchelon e;
  e.rows = Matrix<BigInt>(r, C);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k < C; ++k) e.rows(i, k) = a(i, k);
  e.pivots = std::move(pivots);
  return e;
}

inline BasisCheckReport check_no_standard_basis(const IntMatrix& W) {
  if (W.empty()) throw ShapeError("basis check: W is empty");
  // Column space of W = row space of W^T.
  Matrix<BigInt> wt(W.cols(), W.rows());
  for (std::size_t j = 0; j < W.rows(); ++j)
    for (std::size_t i = 0; i < W.cols(); ++i) wt(i, j) = BigInt(static_cast<long>(W(j, i)));
  const ExactEchelon e = exact_rref(std::move(wt));

  BasisCheckReport report;
  report.rank = e.pivots.size();
  for (std::size_t i = 0; i < e.pivots.size(); ++i) {
    auto row = e.rows.row(i);
    const auto nonzero = std::count_if(row.begin(), row.end(), [](const BigInt& v) { return v != 0; });
    if (nonzero == 1) {
      const std::size_t k = e.pivots[i];
      if (!report.offending_basis_index || k < *report.offending_basis_index) report.offending_basis_index = k;
    }
  }
  report.passed = !report.offending_basis_index.has_value();
  return report;
}

inline IssuanceReport validate_for_issuance(const IntMatrix& W) {
  IssuanceReport r;
  r.budget = check_key_budget(W.rows(), W.cols());
  r.basis = check_no_standard_basis(W);
  r.passed = r.budget.passed && r.basis.passed;
  return r;
}

}  // namespace ztric
