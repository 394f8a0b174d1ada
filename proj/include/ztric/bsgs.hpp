#pragma once

// Baby-step giant-step discrete logarithm over a signed exponent window.

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ztric/bigint.hpp"
#include "ztric/errors.hpp"
#include "ztric/group.hpp"

namespace ztric {

// Inclusive exponent window [lo, hi] with lo <= 0 <= hi.
struct DlogBound {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  static DlogBound symmetric(std::int64_t radius) { return {-radius, radius}; }

  std::uint64_t width() const { return static_cast<std::uint64_t>(hi - lo) + 1; }
  bool contains(std::int64_t e) const { return lo <= e && e <= hi; }

  friend bool operator==(const DlogBound&, const DlogBound&) = default;
};

inline void check_bound(const DlogBound& b) {
  if (!(b.lo <= 0 && 0 <= b.hi)) throw ParameterError("dlog bound must satisfy lo <= 0 <= hi");
  if (b.hi - b.lo > (std::int64_t{1} << 46)) throw ParameterError("dlog bound too wide for baby-step table");
}

// Baby steps base^j for j in [0, m) are computed once; solve() is read-only
// and may be called concurrently.
class BsgsTable {
 public:
  BsgsTable(const GroupParams& group, const BigInt& base, DlogBound bound)
      : group_(group), bound_(bound) {
    check_bound(bound);
    if (base <= 0 || base >= group.p) throw ParameterError("bsgs base out of range");
    const std::uint64_t width = bound.width();
    m_ = static_cast<std::uint64_t>(std::ceil(std::sqrt(static_cast<double>(width))));
    if (m_ == 0) m_ = 1;
    while (m_ * m_ < width) ++m_;

    baby_.reserve(m_);
    index_.reserve(m_);
    BigInt cur = 1;
    for (std::uint64_t j = 0; j < m_; ++j) {
      index_.emplace(key(cur), static_cast<std::uint32_t>(j));
      baby_.push_back(cur);
      cur = group.mul(cur, base);
    }
    // cur == base^m
    giant_step_ = group.inv(cur);
    BigInt lo_shift = bound.lo <= 0 ? BigInt(static_cast<unsigned long>(-bound.lo)) : BigInt(0);
    // target * base^(-lo) = base^(e - lo)
    offset_ = group.pow(base, lo_shift);
    giant_count_ = (width + m_ - 1) / m_;
  }

  const DlogBound& bound() const { return bound_; }
  std::uint64_t baby_steps() const { return m_; }

  // Smallest e in the window with base^e == target.
  std::int64_t solve(const BigInt& target) const {
    BigInt gamma = group_.mul(target, offset_);
    const std::uint64_t width = bound_.width();
    for (std::uint64_t i = 0; i < giant_count_; ++i) {
      auto [first, last] = index_.equal_range(key(gamma));
      std::uint64_t best = m_;
      for (auto it = first; it != last; ++it) {
        if (it->second < best && baby_[it->second] == gamma) best = it->second;
      }
      if (best < m_) {
        const std::uint64_t shifted = i * m_ + best;
        if (shifted < width) return bound_.lo + static_cast<std::int64_t>(shifted);
      }
      gamma = group_.mul(gamma, giant_step_);
    }
    throw BoundExceededError("discrete log not found in [" + std::to_string(bound_.lo) + ", " +
                             std::to_string(bound_.hi) + "]");
  }

 private:
  static std::uint64_t key(const BigInt& v) {
    return v == 0 ? 0 : static_cast<std::uint64_t>(mpz_getlimbn(v.get_mpz_t(), 0));
  }

  GroupParams group_;
  DlogBound bound_;
  std::uint64_t m_ = 1;
  std::uint64_t giant_count_ = 1;
  std::vector<BigInt> baby_;
  std::unordered_multimap<std::uint64_t, std::uint32_t> index_;
  BigInt giant_step_;
  BigInt offset_;
};

inline std::int64_t bsgs_dlog(const BigInt& base, const BigInt& target, DlogBound bound,
                              const GroupParams& group) {
  return BsgsTable(group, base, bound).solve(target);
}

}  // namespace ztric
