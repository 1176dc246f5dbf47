// Multi-index bookkeeping for exterior algebra over R^n, n <= 8.
// Components of a k-form are indexed by increasing multi-indices, represented
// as bitmasks over the axis set; the table fixes the global component order.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace folcoh::mi {

inline constexpr int kMaxDim = 8;

inline int comb(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return static_cast<int>(r);
}

inline int popcount(unsigned m) { return __builtin_popcount(m); }

// Sign picked up when moving axis `a` past the axes of `mask` that precede it,
// i.e. (-1)^{#?b in mask : b < a?}.
inline int pos_sign(unsigned mask, int a) {
  int below = popcount(mask & ((1u << a) - 1u));
  return (below % 2 == 0) ? 1 : -1;
}

// Sign of the shuffle merging two disjoint increasing multi-indices:
// dx^A ^ dx^B = sign * dx^{A|B}. Zero if they overlap.
inline int merge_sign(unsigned A, unsigned B) {
  if (A & B) return 0;
  int inv = 0;
  for (unsigned b = B; b; b &= b - 1) {
    int axis = __builtin_ctz(b);
    inv += popcount(A >> (axis + 1));
  }
  return (inv % 2 == 0) ? 1 : -1;
}

// Component tables for one ambient dimension: masks of each degree in
// increasing numeric order, and the inverse lookup mask -> (degree, slot).
struct Table {
  int n = 0;
  std::array<std::vector<unsigned>, kMaxDim + 1> masks;  // per degree
  std::vector<int> slot_of;                              // indexed by mask

  explicit Table(int dim) : n(dim), slot_of(1u << dim, -1) {
    for (unsigned m = 0; m < (1u << n); ++m) masks[popcount(m)].push_back(m);
    for (int k = 0; k <= n; ++k)
      for (size_t s = 0; s < masks[k].size(); ++s) slot_of[masks[k][s]] = static_cast<int>(s);
  }
  int dim(int k) const { return (k < 0 || k > n) ? 0 : static_cast<int>(masks[k].size()); }
  unsigned mask(int k, int slot) const { return masks[k][slot]; }
  int slot(unsigned m) const { return slot_of[m]; }
};

}  // namespace folcoh::mi
