#include "ucov/combinatorics.hpp"

#include "ucov/errors.hpp"

#include <limits>
#include <string>

namespace ucov {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  // result * (n - k + i) / i stays integral at every step; the product is
  // formed in 128 bits so only a result past 64 bits is an overflow
  unsigned __int128 result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (result > std::numeric_limits<std::uint64_t>::max()) {
      throw InvalidConfig("binomial(" + std::to_string(n) + ", " + std::to_string(k) +
                          ") overflows 64 bits");
    }
  }
  return static_cast<std::uint64_t>(result);
}

bool next_k_subset(std::span<int> idx, int n) {
  const int k = static_cast<int>(idx.size());
  int i = k - 1;
  while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
  if (i < 0) return false;
  ++idx[static_cast<std::size_t>(i)];
  for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  return true;
}

std::vector<int> unrank_k_subset(int n, int k, std::uint64_t rank) {
  if (rank >= binomial(n, k)) throw InvalidOrder("subset rank out of range");
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(k));
  int next = 0;
  for (int slot = 0; slot < k; ++slot) {
    for (int v = next;; ++v) {
      // subsets whose element at `slot` is v
      const std::uint64_t block = binomial(n - v - 1, k - slot - 1);
      if (rank < block) {
        idx.push_back(v);
        next = v + 1;
        break;
      }
      rank -= block;
    }
  }
  return idx;
}

}  // namespace ucov
