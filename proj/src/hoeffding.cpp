#include "ucov/hoeffding.hpp"

#include "ucov/combinatorics.hpp"
#include "ucov/errors.hpp"
#include "ucov/moments.hpp"

#include <bit>
#include <cmath>
#include <sstream>

namespace ucov {

namespace {

// Enumeration is refused beyond this many atom tuples per term.
constexpr std::uint64_t kMaxExactTuples = 20'000'000;

void check_fixed(const KernelSpec& spec, std::span<const Element> fixed) {
  if (static_cast<int>(fixed.size()) > spec.m) {
    throw InvalidOrder("projection order " + std::to_string(fixed.size()) + " exceeds kernel order m = " +
                       std::to_string(spec.m));
  }
  for (const auto& x : fixed) {
    if (!(x.space() == spec.space)) throw DimensionError("fixed argument does not live in the kernel's space");
  }
}

std::vector<Eigen::VectorXd> coords_of(std::span<const Element> xs) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.coords());
  return out;
}

// Inclusion-exclusion terms of g_c(args), each weight multiplied by `scale`.
void append_canonical_terms(const std::vector<Eigen::VectorXd>& args, double scale,
                            std::vector<ProjectionTerm>& out) {
  const int c = static_cast<int>(args.size());
  for (std::uint32_t mask = 0; mask < (1u << c); ++mask) {
    ProjectionTerm term;
    const int size = std::popcount(mask);
    term.weight = ((c - size) % 2 == 0 ? 1.0 : -1.0) * scale;
    for (int i = 0; i < c; ++i) {
      if (mask & (1u << i)) term.fixed.push_back(args[static_cast<std::size_t>(i)]);
    }
    out.push_back(std::move(term));
  }
}

ProjectionEstimate to_estimate(const KernelSpec& spec, int c, const Projector& projector,
                               ProjectionValue pv) {
  const double se = pv.se.size() ? pv.se.maxCoeff() : 0.0;
  return {c, TensorRep(spec.space, std::move(pv.value)), projector.reps(), se};
}

void check_direction(const KernelSpec& spec, const Element& u, const char* what) {
  if (u.dim() != spec.space.dim) {
    throw DimensionError(std::string(what) + " has dim " + std::to_string(u.dim()) +
                         " but the kernel's space has dim " + std::to_string(spec.space.dim));
  }
}

}  // namespace

KernelSpec::KernelSpec(int m_, Element theta_, KernelKind kernel_)
    : m(m_), theta(std::move(theta_)), space(theta.space()), kernel(kernel_) {
  if (m < 1) throw InvalidConfig("kernel order m must be >= 1, got " + std::to_string(m));
}

KernelSpec KernelSpec::centered(const SpaceDescriptor& space, int m, KernelKind kernel) {
  return KernelSpec(m, Element::zero(space), kernel);
}

Eigen::MatrixXd kernel_value(const KernelSpec& spec, std::span<const Eigen::VectorXd> args) {
  if (static_cast<int>(args.size()) != spec.m) throw InvalidOrder("kernel needs exactly m arguments");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.space.dim);
  for (const auto& a : args) v += a;
  v = v / spec.m - spec.theta.coords();
  if (spec.kernel == KernelKind::Sign) v = sign_map(Element(spec.space, v)).coords();
  return v * v.transpose();
}

MonteCarloProjection::MonteCarloProjection(GeneratorDescriptor gen, std::int64_t reps, std::uint64_t seed,
                                           par::Exec exec)
    : gen_(std::move(gen)), reps_(reps), seed_(seed), exec_(exec) {
  gen_.validate();
  if (reps_ < 1) throw InvalidConfig("Monte Carlo projection needs reps >= 1");
}

ProjectionValue MonteCarloProjection::combine(const KernelSpec& spec,
                                              std::span<const ProjectionTerm> terms) const {
  if (!(gen_.space == spec.space)) throw DimensionError("generator and kernel live in different spaces");
  const int d = spec.space.dim;
  const int m = spec.m;

  bool needs_draws = false;
  for (const auto& t : terms) needs_draws = needs_draws || static_cast<int>(t.fixed.size()) < m;
  if (!needs_draws) {
    Eigen::MatrixXd value = Eigen::MatrixXd::Zero(d, d);
    for (const auto& t : terms) value += t.weight * kernel_value(spec, t.fixed);
    return {std::move(value), Eigen::MatrixXd::Zero(d, d)};
  }

  auto acc = par::chunked_reduce<MatrixMoments>(
      reps_, 1024, [&] { return MatrixMoments(d, d); },
      [&](MatrixMoments& part, std::int64_t begin, std::int64_t end, std::int64_t) {
        std::vector<Eigen::VectorXd> w(static_cast<std::size_t>(m), Eigen::VectorXd(d));
        std::vector<Eigen::VectorXd> args(static_cast<std::size_t>(m));
        Eigen::MatrixXd value(d, d);
        for (std::int64_t r = begin; r < end; ++r) {
          Drawer drawer(gen_, derive_seed(seed_, {static_cast<std::uint64_t>(r)}));
          for (auto& x : w) drawer.draw(x);
          value.setZero();
          for (const auto& t : terms) {
            const std::size_t c = t.fixed.size();
            for (std::size_t i = 0; i < c; ++i) args[i] = t.fixed[i];
            for (std::size_t i = c; i < static_cast<std::size_t>(m); ++i) args[i] = w[i];
            value += t.weight * kernel_value(spec, args);
          }
          part.add(value);
        }
      },
      exec_);
  return {acc.mean, acc.se()};
}

ExactProjection::ExactProjection(GeneratorDescriptor gen) : gen_(std::move(gen)) {
  gen_.validate();
  if (!std::holds_alternative<FiniteSupport>(gen_.kind)) {
    throw InvalidConfig("exact projection requires a finite-support generator");
  }
}

ProjectionValue ExactProjection::combine(const KernelSpec& spec,
                                         std::span<const ProjectionTerm> terms) const {
  if (!(gen_.space == spec.space)) throw DimensionError("generator and kernel live in different spaces");
  const auto& law = std::get<FiniteSupport>(gen_.kind);
  const int d = spec.space.dim;
  const int m = spec.m;
  const std::size_t atoms = law.atoms.size();

  Eigen::MatrixXd value = Eigen::MatrixXd::Zero(d, d);
  std::vector<Eigen::VectorXd> args(static_cast<std::size_t>(m));
  for (const auto& t : terms) {
    const int c = static_cast<int>(t.fixed.size());
    const int free = m - c;
    std::uint64_t tuples = 1;
    for (int i = 0; i < free; ++i) {
      tuples *= atoms;
      if (tuples > kMaxExactTuples) {
        throw SizeLimitError("exact projection would enumerate more than " +
                             std::to_string(kMaxExactTuples) + " atom tuples; use Monte Carlo");
      }
    }
    for (int i = 0; i < c; ++i) args[static_cast<std::size_t>(i)] = t.fixed[static_cast<std::size_t>(i)];
    std::vector<std::size_t> digit(static_cast<std::size_t>(free), 0);
    Eigen::MatrixXd part = Eigen::MatrixXd::Zero(d, d);
    for (std::uint64_t k = 0; k < tuples; ++k) {
      double p = 1.0;
      for (int i = 0; i < free; ++i) {
        const std::size_t a = digit[static_cast<std::size_t>(i)];
        args[static_cast<std::size_t>(c + i)] = law.atoms[a];
        p *= law.probs[a];
      }
      part += p * kernel_value(spec, args);
      // odometer increment
      for (int i = free - 1; i >= 0; --i) {
        auto& di = digit[static_cast<std::size_t>(i)];
        if (++di < atoms) break;
        di = 0;
      }
    }
    value += t.weight * part;
  }
  return {std::move(value), Eigen::MatrixXd::Zero(d, d)};
}

MomentProjection::MomentProjection(Moments moments) : moments_(std::move(moments)) {}

ProjectionValue MomentProjection::combine(const KernelSpec& spec,
                                          std::span<const ProjectionTerm> terms) const {
  if (spec.kernel != KernelKind::Identity) {
    throw UnsupportedOperation("moment projection only applies to the identity kernel");
  }
  const int d = spec.space.dim;
  if (moments_.mean.size() != d) throw DimensionError("moments and kernel have different dimensions");
  const Eigen::VectorXd& theta = spec.theta.coords();
  const Eigen::VectorXd mu = moments_.mean - theta;
  const Eigen::MatrixXd big_m = moments_.second - theta * moments_.mean.transpose() -
                                moments_.mean * theta.transpose() + theta * theta.transpose();
  const double m2 = static_cast<double>(spec.m) * spec.m;

  Eigen::MatrixXd value = Eigen::MatrixXd::Zero(d, d);
  for (const auto& t : terms) {
    const int c = static_cast<int>(t.fixed.size());
    const double k = spec.m - c;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
    for (const auto& x : t.fixed) s += x - theta;
    Eigen::MatrixXd phi = s * s.transpose() + k * big_m;
    if (k > 0) {
      phi += k * (s * mu.transpose() + mu * s.transpose()) + k * (k - 1.0) * (mu * mu.transpose());
    }
    value += t.weight * phi / m2;
  }
  return {std::move(value), Eigen::MatrixXd::Zero(d, d)};
}

std::unique_ptr<Projector> exact_projector(const KernelSpec& spec, const GeneratorDescriptor& gen) {
  if (spec.kernel == KernelKind::Identity) return std::make_unique<MomentProjection>(exact_moments(gen));
  if (std::holds_alternative<FiniteSupport>(gen.kind)) return std::make_unique<ExactProjection>(gen);
  throw UnsupportedOperation("no exact projection for the sign kernel under " + gen.describe() +
                             "; pass a MonteCarloProjection");
}

ProjectionEstimate phi_c(const KernelSpec& spec, const Projector& projector,
                         std::span<const Element> fixed) {
  check_fixed(spec, fixed);
  const ProjectionTerm term{1.0, coords_of(fixed)};
  return to_estimate(spec, static_cast<int>(fixed.size()), projector,
                     projector.combine(spec, std::span<const ProjectionTerm>(&term, 1)));
}

ProjectionEstimate phi_c(const KernelSpec& spec, const GeneratorDescriptor& gen,
                         std::span<const Element> fixed, std::int64_t reps, std::uint64_t seed) {
  return phi_c(spec, MonteCarloProjection(gen, reps, seed), fixed);
}

ProjectionEstimate g_c(const KernelSpec& spec, const Projector& projector,
                       std::span<const Element> fixed) {
  check_fixed(spec, fixed);
  std::vector<ProjectionTerm> terms;
  append_canonical_terms(coords_of(fixed), 1.0, terms);
  return to_estimate(spec, static_cast<int>(fixed.size()), projector, projector.combine(spec, terms));
}

ProjectionEstimate g_c(const KernelSpec& spec, const GeneratorDescriptor& gen,
                       std::span<const Element> fixed, std::int64_t reps, std::uint64_t seed) {
  return g_c(spec, MonteCarloProjection(gen, reps, seed), fixed);
}

TensorRep component_ustat(const Sample& sample, const KernelSpec& spec, int c,
                          const Projector& projector) {
  if (!(sample.space() == spec.space)) throw DimensionError("sample and kernel live in different spaces");
  const int n = sample.size();
  if (c < 0 || c > spec.m) {
    throw InvalidOrder("component order c = " + std::to_string(c) + " outside [0, m = " +
                       std::to_string(spec.m) + "]");
  }
  if (c > n) {
    throw InvalidOrder("component order c = " + std::to_string(c) + " exceeds sample size n = " +
                       std::to_string(n));
  }
  std::vector<ProjectionTerm> terms;
  if (c == 0) {
    terms.push_back({1.0, {}});
  } else {
    const double scale = 1.0 / static_cast<double>(binomial(n, c));
    std::vector<Eigen::VectorXd> args(static_cast<std::size_t>(c));
    for_each_k_subset(n, c, [&](std::span<const int> idx) {
      for (int i = 0; i < c; ++i) {
        args[static_cast<std::size_t>(i)] = sample.rows().row(idx[static_cast<std::size_t>(i)]).transpose();
      }
      append_canonical_terms(args, scale, terms);
    });
  }
  return TensorRep(spec.space, projector.combine(spec, terms).value);
}

TensorRep component_ustat(const Sample& sample, const KernelSpec& spec, int c,
                          const GeneratorDescriptor& gen, std::int64_t reps, std::uint64_t seed) {
  return component_ustat(sample, spec, c, MonteCarloProjection(gen, reps, seed));
}

McEstimate hajek_variance(const KernelSpec& spec, const GeneratorDescriptor& gen, const Element& u,
                          const Element& v, std::int64_t reps, std::uint64_t seed,
                          const Projector* projector, par::Exec exec) {
  check_direction(spec, u, "direction u");
  check_direction(spec, v, "direction v");
  if (!(gen.space == spec.space)) throw DimensionError("generator and kernel live in different spaces");
  if (reps < 1) throw InvalidConfig("hajek_variance needs reps >= 1");
  std::unique_ptr<Projector> owned;
  if (!projector) {
    owned = exact_projector(spec, gen);
    projector = owned.get();
  }
  const Eigen::VectorXd& uu = u.coords();
  const Eigen::VectorXd& vv = v.coords();
  const int d = spec.space.dim;
  auto acc = par::chunked_reduce<ScalarMoments>(
      reps, 4096, [] { return ScalarMoments{}; },
      [&](ScalarMoments& part, std::int64_t begin, std::int64_t end, std::int64_t) {
        std::vector<ProjectionTerm> terms(2);
        terms[0] = {1.0, {Eigen::VectorXd(d)}};
        terms[1] = {-1.0, {}};
        for (std::int64_t r = begin; r < end; ++r) {
          Drawer drawer(gen, derive_seed(seed, {static_cast<std::uint64_t>(r)}));
          drawer.draw(terms[0].fixed[0]);
          const Eigen::MatrixXd g1 = projector->combine(spec, terms).value;
          const double s = uu.dot(g1 * vv);
          part.add(s * s);
        }
      },
      exec);
  return {acc.mean, acc.se()};
}

namespace {

// Per-window statistic of the long-run series, reduced over replications.
template <class WindowStat>
McEstimate long_run_series(const KernelSpec& spec, const DependentGeneratorDescriptor& gen, int max_lag,
                           std::int64_t reps, std::uint64_t seed, par::Exec exec, WindowStat stat) {
  if (max_lag < 0) throw InvalidConfig("max_lag must be >= 0");
  if (reps < 1) throw InvalidConfig("long-run variance needs reps >= 1");
  if (!(gen.base.space == spec.space)) throw DimensionError("generator and kernel live in different spaces");
  if (spec.kernel != KernelKind::Identity) {
    throw UnsupportedOperation("long-run variance is implemented for the identity kernel only");
  }
  const MomentProjection projector(marginal_moments(gen));
  const int d = spec.space.dim;
  auto acc = par::chunked_reduce<ScalarMoments>(
      reps, 1024, [] { return ScalarMoments{}; },
      [&](ScalarMoments& part, std::int64_t begin, std::int64_t end, std::int64_t) {
        std::vector<ProjectionTerm> terms(2);
        terms[0] = {1.0, {Eigen::VectorXd(d)}};
        terms[1] = {-1.0, {}};
        std::vector<Eigen::MatrixXd> g(static_cast<std::size_t>(max_lag) + 1);
        for (std::int64_t r = begin; r < end; ++r) {
          const Sample window = draw_dependent(gen, max_lag + 1, derive_seed(seed, {static_cast<std::uint64_t>(r)}));
          for (int t = 0; t <= max_lag; ++t) {
            terms[0].fixed[0] = window.rows().row(t).transpose();
            g[static_cast<std::size_t>(t)] = projector.combine(spec, terms).value;
          }
          part.add(stat(g));
        }
      },
      exec);
  return {acc.mean, acc.se()};
}

}  // namespace

McEstimate sigma_inf_sq(const KernelSpec& spec, const DependentGeneratorDescriptor& gen, int max_lag,
                        std::int64_t reps, std::uint64_t seed, par::Exec exec) {
  if (!spec.space.is_hilbert()) {
    throw UnsupportedOperation("sigma_inf_sq needs the Hilbert (L2) tensor inner product");
  }
  return long_run_series(spec, gen, max_lag, reps, seed, exec, [](const std::vector<Eigen::MatrixXd>& g) {
    double s = g[0].squaredNorm();
    for (std::size_t t = 1; t < g.size(); ++t) s += 2.0 * g[0].cwiseProduct(g[t]).sum();
    return s;
  });
}

McEstimate long_run_variance(const KernelSpec& spec, const DependentGeneratorDescriptor& gen,
                             const Element& u, const Element& v, int max_lag, std::int64_t reps,
                             std::uint64_t seed, par::Exec exec) {
  check_direction(spec, u, "direction u");
  check_direction(spec, v, "direction v");
  const Eigen::VectorXd uu = u.coords();
  const Eigen::VectorXd vv = v.coords();
  return long_run_series(spec, gen, max_lag, reps, seed, exec, [&](const std::vector<Eigen::MatrixXd>& g) {
    const double s0 = uu.dot(g[0] * vv);
    double s = s0 * s0;
    for (std::size_t t = 1; t < g.size(); ++t) s += 2.0 * s0 * uu.dot(g[t] * vv);
    return s;
  });
}

DegeneracyDiagnostic degeneracy_order(const KernelSpec& spec, const GeneratorDescriptor& gen,
                                      std::int64_t reps, std::uint64_t seed, double tol,
                                      const Projector* projector, par::Exec exec) {
  if (!(gen.space == spec.space)) throw DimensionError("generator and kernel live in different spaces");
  if (reps < 1) throw InvalidConfig("degeneracy_order needs reps >= 1");
  if (!(tol > 0.0)) throw InvalidConfig("degeneracy tolerance must be positive");
  std::unique_ptr<Projector> owned;
  if (!projector) {
    owned = exact_projector(spec, gen);
    projector = owned.get();
  }
  DegeneracyDiagnostic diag;
  diag.tol = tol;
  diag.reps = reps;
  diag.order = spec.m;
  const int d = spec.space.dim;
  for (int r = 1; r <= spec.m; ++r) {
    auto acc = par::chunked_reduce<ScalarMoments>(
        reps, 1024, [] { return ScalarMoments{}; },
        [&](ScalarMoments& part, std::int64_t begin, std::int64_t end, std::int64_t) {
          std::vector<Eigen::VectorXd> args(static_cast<std::size_t>(r), Eigen::VectorXd(d));
          std::vector<ProjectionTerm> terms;
          for (std::int64_t i = begin; i < end; ++i) {
            Drawer drawer(gen, derive_seed(seed, {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(i)}));
            for (auto& a : args) drawer.draw(a);
            terms.clear();
            append_canonical_terms(args, 1.0, terms);
            part.add(projector->combine(spec, terms).value.squaredNorm());
          }
        },
        exec);
    diag.variances.push_back(acc.mean);
    diag.ses.push_back(acc.se());
    if (acc.mean > tol) {
      diag.order = r - 1;
      return diag;
    }
    if (acc.mean >= tol / 3.0) {
      std::ostringstream msg;
      msg << "degeneracy diagnostic inconclusive: E||g_" << r << "||^2 = " << acc.mean << " (se "
          << acc.se() << ") lies in [tol/3, tol] = [" << tol / 3.0 << ", " << tol << "]";
      throw IndeterminateDiagnostic(msg.str());
    }
  }
  return diag;
}

}  // namespace ucov
