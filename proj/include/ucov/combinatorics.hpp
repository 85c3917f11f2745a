#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ucov {

/// Exact binomial coefficient; throws InvalidConfig on uint64 overflow.
/// Returns 0 when k < 0 or k > n.
std::uint64_t binomial(int n, int k);

/// Advances idx (a strictly increasing k-subset of {0..n-1}) to its
/// lexicographic successor. Returns false after the last subset.
bool next_k_subset(std::span<int> idx, int n);

/// The k-subset with the given lexicographic rank.
std::vector<int> unrank_k_subset(int n, int k, std::uint64_t rank);

/// Calls f(span<const int>) on every k-subset of {0..n-1} in lexicographic
/// order. k = 0 visits the empty subset once.
template <class F>
void for_each_k_subset(int n, int k, F&& f) {
  if (k < 0 || k > n) return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  do {
    f(std::span<const int>(idx));
  } while (next_k_subset(idx, n));
}

}  // namespace ucov
