#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ucov {

/// SplitMix64 finalizer. Used only to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the stream addressed by `path` below `master`. Streams with
/// different paths are statistically independent; the mapping is fixed, so
/// a (master, path) pair names the same draws on every platform and for
/// every worker count.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// MT19937-64 stream with in-repo transforms. std::mt19937_64 output is
/// fixed by the standard; the standard distributions are not, so uniform,
/// normal and gamma variates are produced here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang (boosted for shape < 1).
  double gamma(double shape);

  double chi_square(double df) { return 2.0 * gamma(0.5 * df); }

  /// +1 or -1 with equal probability.
  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ucov
