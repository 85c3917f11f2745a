#pragma once

#include "ucov/datagen.hpp"
#include "ucov/estimator.hpp"
#include "ucov/parallel.hpp"
#include "ucov/spaces.hpp"
#include "ucov/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace ucov {

/// The covariance kernel h(x_1..x_m) = k(mean - theta) (x) k(mean - theta).
struct KernelSpec {
  int m = 1;
  Element theta;
  SpaceDescriptor space;
  KernelKind kernel = KernelKind::Identity;

  KernelSpec(int m, Element theta, KernelKind kernel = KernelKind::Identity);
  /// theta = 0 in `space`.
  static KernelSpec centered(const SpaceDescriptor& space, int m,
                             KernelKind kernel = KernelKind::Identity);
};

/// h evaluated at exactly m arguments.
Eigen::MatrixXd kernel_value(const KernelSpec& spec, std::span<const Eigen::VectorXd> args);

/// One weighted conditional expectation w * Phi_c(fixed), c = fixed.size().
struct ProjectionTerm {
  double weight = 1.0;
  std::vector<Eigen::VectorXd> fixed;
};

struct ProjectionValue {
  Eigen::MatrixXd value;
  /// Entrywise standard error; zero for exact routes.
  Eigen::MatrixXd se;
};

/// Evaluates linear combinations of conditional expectations
/// Phi_c(x_1..x_c) = E[h(x_1..x_c, X_{c+1}..X_m)] under one law.
class Projector {
 public:
  virtual ~Projector() = default;
  virtual ProjectionValue combine(const KernelSpec& spec,
                                  std::span<const ProjectionTerm> terms) const = 0;
  virtual bool exact() const = 0;
  virtual std::string_view name() const = 0;
  /// Monte Carlo replications per evaluation (0 for exact routes).
  virtual std::int64_t reps() const { return 0; }
};

/// Seeded Monte Carlo. Replication r draws one full vector W_1..W_m from
/// derive_seed(seed, {r}) and every term uses its tail W_{c+1}..W_m, so terms
/// of one combination share draws and their noise largely cancels.
class MonteCarloProjection final : public Projector {
 public:
  MonteCarloProjection(GeneratorDescriptor gen, std::int64_t reps, std::uint64_t seed,
                       par::Exec exec = par::Exec::Parallel);
  ProjectionValue combine(const KernelSpec& spec, std::span<const ProjectionTerm> terms) const override;
  bool exact() const override { return false; }
  std::string_view name() const override { return "monte_carlo"; }
  std::int64_t reps() const override { return reps_; }

 private:
  GeneratorDescriptor gen_;
  std::int64_t reps_;
  std::uint64_t seed_;
  par::Exec exec_;
};

/// Exact expectation by enumerating all atom tuples of a finite-support law.
class ExactProjection final : public Projector {
 public:
  explicit ExactProjection(GeneratorDescriptor gen);
  ProjectionValue combine(const KernelSpec& spec, std::span<const ProjectionTerm> terms) const override;
  bool exact() const override { return true; }
  std::string_view name() const override { return "exact_enumeration"; }

 private:
  GeneratorDescriptor gen_;
};

/// Exact closed form for the identity kernel. With s = sum_{i<=c}(x_i - theta),
/// k = m - c, mu = E X - theta and M = E[(X - theta)(X - theta)^T]:
///   m^2 Phi_c = s s^T + k (s mu^T + mu s^T) + k M + k (k - 1) mu mu^T.
class MomentProjection final : public Projector {
 public:
  explicit MomentProjection(Moments moments);
  ProjectionValue combine(const KernelSpec& spec, std::span<const ProjectionTerm> terms) const override;
  bool exact() const override { return true; }
  std::string_view name() const override { return "moments"; }

 private:
  Moments moments_;
};

/// Default exact projector for a law: moments for the identity kernel,
/// enumeration for finite support otherwise. Throws UnsupportedOperation when
/// neither applies.
std::unique_ptr<Projector> exact_projector(const KernelSpec& spec, const GeneratorDescriptor& gen);

struct ProjectionEstimate {
  int c = 0;
  TensorRep value;
  std::int64_t reps = 0;
  /// Largest entrywise standard error.
  double se = 0.0;
};

ProjectionEstimate phi_c(const KernelSpec& spec, const Projector& projector,
                         std::span<const Element> fixed);
ProjectionEstimate phi_c(const KernelSpec& spec, const GeneratorDescriptor& gen,
                         std::span<const Element> fixed, std::int64_t reps, std::uint64_t seed);

/// Canonical term g_c(x_1..x_c) = sum over T subset of [c] of
/// (-1)^(c-|T|) Phi_|T|(x_T); g_0 = Phi_0 = C_m.
ProjectionEstimate g_c(const KernelSpec& spec, const Projector& projector,
                       std::span<const Element> fixed);
ProjectionEstimate g_c(const KernelSpec& spec, const GeneratorDescriptor& gen,
                       std::span<const Element> fixed, std::int64_t reps, std::uint64_t seed);

/// U-statistic of order c with kernel g_c over the sample; c = 0 gives C_m.
/// Then C_{m,n} - C_m = sum_{c=1..m} binom(m, c) component_ustat(c).
TensorRep component_ustat(const Sample& sample, const KernelSpec& spec, int c,
                          const Projector& projector);
TensorRep component_ustat(const Sample& sample, const KernelSpec& spec, int c,
                          const GeneratorDescriptor& gen, std::int64_t reps, std::uint64_t seed);

struct McEstimate {
  double value = 0.0;
  double se = 0.0;
};

/// E[(u^T g1(Z) v)^2] with g1(z) = Phi_1(z) - Phi_0: the limiting variance of
/// sqrt(n)/m u^T (C_{m,n} - C_m) v. Monte Carlo over Z only; the inner
/// expectations come from `projector` (exact_projector(spec, gen) when null).
McEstimate hajek_variance(const KernelSpec& spec, const GeneratorDescriptor& gen, const Element& u,
                          const Element& v, std::int64_t reps, std::uint64_t seed,
                          const Projector* projector = nullptr,
                          par::Exec exec = par::Exec::Parallel);

/// E||g1(X_0)||_F^2 + 2 sum_{lag=1..max_lag} E<g1(X_0), g1(X_lag)>_F for a
/// moving-average sequence, with g1 taken under the stationary marginal law.
/// Replication r simulates one window of length max_lag + 1. L2 only.
McEstimate sigma_inf_sq(const KernelSpec& spec, const DependentGeneratorDescriptor& gen, int max_lag,
                        std::int64_t reps, std::uint64_t seed, par::Exec exec = par::Exec::Parallel);

/// Same series for the scalar projection u^T g1 v.
McEstimate long_run_variance(const KernelSpec& spec, const DependentGeneratorDescriptor& gen,
                             const Element& u, const Element& v, int max_lag, std::int64_t reps,
                             std::uint64_t seed, par::Exec exec = par::Exec::Parallel);

struct DegeneracyDiagnostic {
  /// r - 1 for the first r with E||g_r||^2 > tol; m when none qualifies.
  int order = 0;
  std::vector<double> variances;
  std::vector<double> ses;
  double tol = 1e-3;
  std::int64_t reps = 0;
};

/// Throws IndeterminateDiagnostic when a variance lands in [tol/3, tol].
DegeneracyDiagnostic degeneracy_order(const KernelSpec& spec, const GeneratorDescriptor& gen,
                                      std::int64_t reps, std::uint64_t seed, double tol = 1e-3,
                                      const Projector* projector = nullptr,
                                      par::Exec exec = par::Exec::Parallel);

}  // namespace ucov
