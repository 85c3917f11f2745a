#pragma once

#include "ucov/config.hpp"
#include "ucov/datagen.hpp"
#include "ucov/estimator.hpp"
#include "ucov/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ucov {

enum class TensorNormChoice { Hilbert, Injective, Projective };
std::string_view to_string(TensorNormChoice choice);
TensorNormChoice parse_tensor_norm(std::string_view text);

/// Norm of t under `choice`; method tags heuristic values.
NormResult tensor_norm(const TensorRep& t, TensorNormChoice choice);

struct Thresholds {
  double ks_alpha = 0.01;
  /// Relative tolerance for replicate variance vs its oracle.
  double var_tol = 0.10;
  /// Tolerance on the consistency-curve slope (target -1/2).
  double slope_tol = 0.10;
  /// Tolerance on the degenerate sd slope.
  double degenerate_slope_tol = 0.15;
};

using AnyGenerator = std::variant<GeneratorDescriptor, DependentGeneratorDescriptor>;

struct DirectionPair {
  Element u;
  Element v;
};

struct McPlan {
  std::int64_t L = 1000;
  std::vector<int> n_grid{100};
  std::vector<int> m_grid{1};
  std::uint64_t master_seed = 1;
  AnyGenerator gen = student_t(5.0);
  /// Template: m is taken from m_grid.
  EstimatorConfig estimator;
  Thresholds thresholds;

  /// Monte Carlo size for oracles (Hajek variance, long-run variance).
  std::int64_t oracle_reps = 200'000;
  std::int64_t degeneracy_reps = 20'000;
  double degeneracy_tol = 1e-3;
  int max_lag = 1;
  TensorNormChoice norm = TensorNormChoice::Hilbert;
  /// Empty means u = v = e_1.
  std::vector<DirectionPair> directions;
  /// Target log-log slope of the consistency curve.
  double expected_slope = -0.5;

  // table1 only
  std::vector<double> df_grid{3, 4, 5, 6, 7, 8, 9, 10};
  std::string interpretation = "both";

  // norms only
  std::vector<TensorRep> tensors;

  void validate() const;
  const SpaceDescriptor& space() const;
};

/// Keys live under `section` ("kind", "df", "eigenvalues", "atoms", "probs",
/// "value", "norm", and "ma" for a moving average); an empty section reads
/// top-level keys.
GeneratorDescriptor generator_from_config(const Config& cfg, const std::string& section = "generator");
AnyGenerator any_generator_from_config(const Config& cfg, const std::string& section = "generator");
McPlan plan_from_config(const Config& cfg);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<Check> checks;
  /// Seed, version, method tags and other run facts.
  std::map<std::string, std::string> metadata;
  /// Extra human-readable tables (table1 grids).
  std::string markdown_body;
  double wall_time_s = 0.0;

  bool all_passed() const;
  /// Columns and rows only; wall time never appears here.
  std::string csv() const;
  std::string markdown() const;
  std::string metadata_json() const;
};

/// Writes <experiment>.csv, <experiment>.md and <experiment>.json.
void write_report(const ExperimentReport& report, const std::filesystem::path& out_dir);

/// Exact population operator C_m for the identity kernel (from moments);
/// Monte Carlo otherwise.
TensorRep population_cm(const AnyGenerator& gen, const EstimatorConfig& est, int m,
                        std::int64_t oracle_reps, std::uint64_t seed);

/// Grids of C_{m,n} for replications l = 0..L-1, [m index][l]. Sample l is
/// drawn from derive_seed(seed, {key, n, l}) and shared by every m.
std::vector<std::vector<Eigen::MatrixXd>> replicate_estimates(const AnyGenerator& gen, int n,
                                                              const std::vector<int>& ms,
                                                              const EstimatorConfig& est,
                                                              std::int64_t L, std::uint64_t seed,
                                                              std::uint64_t key);

/// The (m x df) dispersion grids behind the table1 experiment.
struct Table1Grids {
  std::vector<int> m_grid;
  std::vector<double> df_grid;
  int n = 10;
  std::int64_t L = 100;
  Eigen::MatrixXd mean_diff;
  Eigen::MatrixXd mean_sq_diff;
};

Table1Grids run_table1(const McPlan& plan);

/// Qualitative pattern on one mean_sq_diff grid: the argmin over m is 1 for
/// each light-tailed df in {8, 9, 10}, and within one of n/2 for each
/// heavy-tailed df in {3, 4, 5}. Returns per-df pass flags keyed by df.
std::map<double, bool> table1_pattern(const Table1Grids& grids);

/// Row index of the minimum in each column.
std::vector<int> argmin_m(const Eigen::MatrixXd& grid, const std::vector<int>& m_grid);

ExperimentReport table1(const McPlan& plan);
ExperimentReport consistency_curve(const McPlan& plan);
/// Throws GuardRefusal when the kernel is degenerate under the generator.
ExperimentReport clt_check(const McPlan& plan);
/// Throws GuardRefusal when the kernel is not degenerate.
ExperimentReport degenerate_check(const McPlan& plan);
/// Throws GuardRefusal when the long-run variance is indistinguishable from 0.
ExperimentReport dependent_clt_check(const McPlan& plan);
ExperimentReport norm_report(const TensorRep& t, std::uint64_t seed = 0x5eed);
ExperimentReport norm_report(const McPlan& plan);

}  // namespace ucov
