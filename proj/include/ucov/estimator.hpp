#pragma once

#include "ucov/datagen.hpp"
#include "ucov/parallel.hpp"
#include "ucov/spaces.hpp"
#include "ucov/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string_view>

namespace ucov {

enum class KernelKind { Identity, Sign };
enum class Algorithm { Enumerate, ClosedForm, Auto };

std::string_view to_string(KernelKind kind);
std::string_view to_string(Algorithm algorithm);
KernelKind parse_kernel_kind(std::string_view text);
Algorithm parse_algorithm(std::string_view text);

struct EstimatorConfig {
  int m = 1;
  /// Known location; the zero element of the sample's space when absent.
  std::optional<Element> theta;
  KernelKind kernel = KernelKind::Identity;
  Algorithm algorithm = Algorithm::Auto;
  /// Replace theta by the sample mean. Outside the known-location theory;
  /// never used by the validation experiments.
  bool plug_in_theta = false;
};

/// The location actually used for `sample` under `cfg`.
Element resolve_theta(const Sample& sample, const EstimatorConfig& cfg);

/// Algorithm that `estimate` will run (resolves Auto).
Algorithm resolve_algorithm(const EstimatorConfig& cfg);

/// U-statistic covariance: the average over all m-subsets of the sample of
/// k(subset mean - theta) (x) k(subset mean - theta).
/// Enumerate visits subsets in lexicographic order; with Exec::Parallel the
/// subsets are split into fixed chunks combined in chunk order, so the result
/// depends only on the input, never on the worker count. ClosedForm is O(n d^2)
/// and identity-kernel only.
TensorRep estimate(const Sample& sample, const EstimatorConfig& cfg,
                   par::Exec exec = par::Exec::Serial);

/// Subsets per work chunk in the parallel enumeration.
inline constexpr std::int64_t kEnumerateChunk = 2048;

/// Population operator for scalar i.i.d. centered data: variance / m.
double population_cm_analytic(double variance, int m);

struct OracleResult {
  TensorRep value;
  /// Monte Carlo standard error of each grid entry.
  Eigen::MatrixXd se;
};

/// Monte Carlo population operator: the mean over `reps` independent draws
/// of (mean of m draws - theta) (x) (same). Replication r reads the stream
/// derive_seed(seed, {r}).
OracleResult population_cm_oracle(const GeneratorDescriptor& gen, int m, std::int64_t reps,
                                  std::uint64_t seed, const std::optional<Element>& theta = std::nullopt,
                                  par::Exec exec = par::Exec::Parallel);

}  // namespace ucov
