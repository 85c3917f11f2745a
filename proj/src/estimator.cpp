#include "ucov/estimator.hpp"

#include "ucov/combinatorics.hpp"
#include "ucov/errors.hpp"
#include "ucov/moments.hpp"

#include <cmath>

namespace ucov {

namespace {

double coord_norm(const Eigen::VectorXd& v, NormKind kind) {
  switch (kind) {
    case NormKind::L1: return v.lpNorm<1>();
    case NormKind::L2: return v.norm();
    case NormKind::Linf: return v.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

void apply_kernel(Eigen::VectorXd& v, KernelKind kernel, NormKind norm) {
  if (kernel == KernelKind::Identity) return;
  const double r = coord_norm(v, norm);
  if (r == 0.0) {
    v.setZero();
  } else {
    v /= r;
  }
}

struct GridSum {
  Eigen::MatrixXd sum;
  void merge(const GridSum& o) { sum += o.sum; }
};

// Sum over one run of consecutive lexicographic subsets starting at `first`.
void accumulate_subsets(const Eigen::MatrixXd& y, int m, KernelKind kernel, NormKind norm,
                        std::vector<int> idx, std::int64_t count, Eigen::MatrixXd& acc) {
  const int n = static_cast<int>(y.rows());
  Eigen::VectorXd v(y.cols());
  const double inv_m = 1.0 / m;
  for (std::int64_t s = 0; s < count; ++s) {
    v.setZero();
    for (int i : idx) v += y.row(i).transpose();
    v *= inv_m;
    apply_kernel(v, kernel, norm);
    acc.noalias() += v * v.transpose();
    if (!next_k_subset(idx, n)) break;
  }
}

TensorRep enumerate(const Sample& sample, const Eigen::VectorXd& theta, const EstimatorConfig& cfg,
                    par::Exec exec) {
  const int n = sample.size();
  const int d = sample.space().dim;
  const Eigen::MatrixXd y = sample.rows().rowwise() - theta.transpose();
  const std::uint64_t total = binomial(n, cfg.m);
  const NormKind norm = sample.space().norm_kind;

  Eigen::MatrixXd acc;
  if (exec == par::Exec::Serial) {
    acc = Eigen::MatrixXd::Zero(d, d);
    std::vector<int> idx(static_cast<std::size_t>(cfg.m));
    for (int i = 0; i < cfg.m; ++i) idx[static_cast<std::size_t>(i)] = i;
    accumulate_subsets(y, cfg.m, cfg.kernel, norm, std::move(idx), static_cast<std::int64_t>(total), acc);
  } else {
    auto result = par::chunked_reduce<GridSum>(
        static_cast<std::int64_t>(total), kEnumerateChunk,
        [&] { return GridSum{Eigen::MatrixXd::Zero(d, d)}; },
        [&](GridSum& part, std::int64_t begin, std::int64_t end, std::int64_t) {
          accumulate_subsets(y, cfg.m, cfg.kernel, norm,
                             unrank_k_subset(n, cfg.m, static_cast<std::uint64_t>(begin)), end - begin,
                             part.sum);
        },
        exec);
    acc = std::move(result.sum);
  }
  acc /= static_cast<double>(total);
  return TensorRep(sample.space(), std::move(acc));
}

// With Y_i = X_i - theta, S = sum Y_i, Q = sum Y_i Y_i^T: a pair (i, j), i != j,
// lies in C(n-2, m-2) subsets and a diagonal pair in C(n-1, m-1), so
// C = [C(n-2,m-2) S S^T + (C(n-1,m-1) - C(n-2,m-2)) Q] / (C(n,m) m^2).
// The binomial ratios are m(m-1)/(n(n-1)) and m/n, which avoids overflow.
TensorRep closed_form(const Sample& sample, const Eigen::VectorXd& theta, int m) {
  const int n = sample.size();
  const Eigen::MatrixXd y = sample.rows().rowwise() - theta.transpose();
  const Eigen::VectorXd s = y.colwise().sum().transpose();
  const Eigen::MatrixXd q = y.transpose() * y;
  const double nn = n;
  const double mm = m;
  const double pair = m > 1 ? mm * (mm - 1.0) / (nn * (nn - 1.0)) : 0.0;
  const double diag = mm / nn - pair;
  Eigen::MatrixXd grid = (pair * (s * s.transpose()) + diag * q) / (mm * mm);
  return TensorRep(sample.space(), std::move(grid));
}

}  // namespace

std::string_view to_string(KernelKind kind) {
  return kind == KernelKind::Identity ? "identity" : "sign";
}

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Enumerate: return "enumerate";
    case Algorithm::ClosedForm: return "closed-form";
    case Algorithm::Auto: return "auto";
  }
  return "?";
}

KernelKind parse_kernel_kind(std::string_view text) {
  if (text == "identity") return KernelKind::Identity;
  if (text == "sign") return KernelKind::Sign;
  throw InvalidConfig("unknown kernel '" + std::string(text) + "' (expected identity or sign)");
}

Algorithm parse_algorithm(std::string_view text) {
  if (text == "enumerate") return Algorithm::Enumerate;
  if (text == "closed-form" || text == "closed_form") return Algorithm::ClosedForm;
  if (text == "auto") return Algorithm::Auto;
  throw InvalidConfig("unknown algorithm '" + std::string(text) +
                      "' (expected auto, enumerate or closed-form)");
}

Element resolve_theta(const Sample& sample, const EstimatorConfig& cfg) {
  if (cfg.plug_in_theta) {
    return Element(sample.space(), sample.rows().colwise().mean().transpose());
  }
  if (!cfg.theta) return Element::zero(sample.space());
  if (!(cfg.theta->space() == sample.space())) {
    throw DimensionError("theta does not live in the sample's space");
  }
  return *cfg.theta;
}

Algorithm resolve_algorithm(const EstimatorConfig& cfg) {
  if (cfg.algorithm != Algorithm::Auto) return cfg.algorithm;
  return cfg.kernel == KernelKind::Identity ? Algorithm::ClosedForm : Algorithm::Enumerate;
}

TensorRep estimate(const Sample& sample, const EstimatorConfig& cfg, par::Exec exec) {
  if (cfg.m < 1) throw InvalidConfig("kernel order m must be >= 1, got " + std::to_string(cfg.m));
  if (cfg.m > sample.size()) {
    throw InvalidConfig("kernel order m = " + std::to_string(cfg.m) + " exceeds sample size n = " +
                        std::to_string(sample.size()));
  }
  if (cfg.algorithm == Algorithm::ClosedForm && cfg.kernel != KernelKind::Identity) {
    throw UnsupportedOperation("closed-form algorithm is only valid for the identity kernel");
  }
  const Element theta = resolve_theta(sample, cfg);
  if (resolve_algorithm(cfg) == Algorithm::ClosedForm) return closed_form(sample, theta.coords(), cfg.m);
  return enumerate(sample, theta.coords(), cfg, exec);
}

double population_cm_analytic(double variance, int m) {
  if (m <= 0) throw InvalidConfig("kernel order m must be >= 1, got " + std::to_string(m));
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw InvalidConfig("variance must be a positive finite number");
  }
  return variance / m;
}

OracleResult population_cm_oracle(const GeneratorDescriptor& gen, int m, std::int64_t reps,
                                  std::uint64_t seed, const std::optional<Element>& theta,
                                  par::Exec exec) {
  if (m < 1) throw InvalidConfig("kernel order m must be >= 1");
  if (reps < 1) throw InvalidConfig("oracle needs reps >= 1");
  gen.validate();
  const int d = gen.space.dim;
  Eigen::VectorXd th = Eigen::VectorXd::Zero(d);
  if (theta) {
    if (!(theta->space() == gen.space)) throw DimensionError("theta does not live in the generator's space");
    th = theta->coords();
  }
  auto acc = par::chunked_reduce<MatrixMoments>(
      reps, 4096, [&] { return MatrixMoments(d, d); },
      [&](MatrixMoments& part, std::int64_t begin, std::int64_t end, std::int64_t) {
        Eigen::VectorXd x(d);
        Eigen::VectorXd v(d);
        for (std::int64_t r = begin; r < end; ++r) {
          Drawer drawer(gen, derive_seed(seed, {static_cast<std::uint64_t>(r)}));
          v.setZero();
          for (int j = 0; j < m; ++j) {
            drawer.draw(x);
            v += x;
          }
          v = v / m - th;
          part.add(v * v.transpose());
        }
      },
      exec);
  return {TensorRep(gen.space, acc.mean), acc.se()};
}

}  // namespace ucov
