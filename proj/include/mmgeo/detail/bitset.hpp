#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace mmgeo::detail {

/// Minimal dynamic bitset for the combinatorial searches (clique, packing,
/// separation). Word-level operations only; sizes are fixed at construction.
class Bits {
 public:
  Bits() = default;
  explicit Bits(std::size_t n, bool value = false) : n_(n), w_((n + 63) / 64, value ? ~std::uint64_t{0} : 0) {
    trim();
  }

  std::size_t size() const { return n_; }
  bool test(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i) { w_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { w_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto x : w_) c += static_cast<std::size_t>(std::popcount(x));
    return c;
  }
  bool none() const {
    for (auto x : w_)
      if (x) return false;
    return true;
  }
  bool any() const { return !none(); }

  /// Index of the lowest set bit at or after `from`, or size() if none.
  std::size_t next(std::size_t from = 0) const {
    if (from >= n_) return n_;
    std::size_t k = from >> 6;
    std::uint64_t word = w_[k] & (~std::uint64_t{0} << (from & 63));
    while (true) {
      if (word) return (k << 6) + static_cast<std::size_t>(std::countr_zero(word));
      if (++k == w_.size()) return n_;
      word = w_[k];
    }
  }

  Bits& operator&=(const Bits& o) {
    for (std::size_t k = 0; k < w_.size(); ++k) w_[k] &= o.w_[k];
    return *this;
  }
  Bits& operator|=(const Bits& o) {
    for (std::size_t k = 0; k < w_.size(); ++k) w_[k] |= o.w_[k];
    return *this;
  }
  /// this &= ~o
  Bits& subtract(const Bits& o) {
    for (std::size_t k = 0; k < w_.size(); ++k) w_[k] &= ~o.w_[k];
    return *this;
  }
  friend Bits operator&(Bits a, const Bits& b) { return a &= b; }

  std::size_t intersection_count(const Bits& o) const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < w_.size(); ++k) c += static_cast<std::size_t>(std::popcount(w_[k] & o.w_[k]));
    return c;
  }

  bool operator==(const Bits&) const = default;

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < w_.size(); ++k)
      for (std::uint64_t word = w_[k]; word; word &= word - 1)
        f((k << 6) + static_cast<std::size_t>(std::countr_zero(word)));
  }

 private:
  void trim() {
    if (n_ % 64 && !w_.empty()) w_.back() &= (std::uint64_t{1} << (n_ % 64)) - 1;
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

}  // namespace mmgeo::detail
