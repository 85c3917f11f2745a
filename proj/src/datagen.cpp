#include "ucov/datagen.hpp"

#include "ucov/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace ucov {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

void GeneratorDescriptor::validate() const {
  std::visit(
      overloaded{
          [&](const StudentT& t) {
            if (!(t.df >= 3.0) || !std::isfinite(t.df)) {
              throw InvalidConfig("student_t requires df >= 3 (finite variance), got " + fmt(t.df));
            }
            if (space.dim != 1) throw InvalidConfig("student_t draws scalars; space dim must be 1");
          },
          [&](const Rademacher&) {
            if (space.dim != 1) throw InvalidConfig("rademacher draws scalars; space dim must be 1");
          },
          [&](const GaussianKL& g) {
            if (static_cast<int>(g.eigenvalues.size()) != space.dim) {
              throw InvalidConfig("gaussian_kl needs one eigenvalue per dimension");
            }
            for (std::size_t i = 0; i < g.eigenvalues.size(); ++i) {
              const double e = g.eigenvalues[i];
              if (!(e > 0.0) || !std::isfinite(e)) {
                throw InvalidConfig("gaussian_kl eigenvalues must be strictly positive");
              }
              if (i > 0 && e > g.eigenvalues[i - 1]) {
                throw InvalidConfig("gaussian_kl eigenvalues must be nonincreasing");
              }
            }
          },
          [&](const FiniteSupport& f) {
            if (f.atoms.empty() || f.atoms.size() != f.probs.size()) {
              throw InvalidConfig("finite_support needs matching, nonempty atoms and probabilities");
            }
            double total = 0.0;
            for (std::size_t i = 0; i < f.atoms.size(); ++i) {
              if (f.atoms[i].size() != space.dim) {
                throw InvalidConfig("finite_support atom " + std::to_string(i) +
                                    " has the wrong dimension");
              }
              if (!f.atoms[i].allFinite()) throw InvalidConfig("finite_support atoms must be finite");
              if (!(f.probs[i] >= 0.0)) throw InvalidConfig("finite_support probabilities must be >= 0");
              total += f.probs[i];
            }
            if (std::abs(total - 1.0) > 1e-12) {
              throw InvalidConfig("finite_support probabilities sum to " + fmt(total) + ", not 1");
            }
          },
      },
      kind);
}

std::string GeneratorDescriptor::describe() const {
  std::string out = std::visit(
      overloaded{
          [](const StudentT& t) { return "student_t(df=" + fmt(t.df) + ")"; },
          [](const Rademacher&) { return std::string("rademacher"); },
          [](const GaussianKL& g) {
            std::string s = "gaussian_kl(";
            for (std::size_t i = 0; i < g.eigenvalues.size(); ++i) {
              s += (i ? "," : "") + fmt(g.eigenvalues[i]);
            }
            return s + ")";
          },
          [](const FiniteSupport& f) {
            std::string s = "finite_support(";
            for (std::size_t i = 0; i < f.atoms.size(); ++i) {
              s += i ? ";" : "";
              s += "[";
              for (Eigen::Index j = 0; j < f.atoms[i].size(); ++j) {
                s += (j ? "," : "") + fmt(f.atoms[i][j]);
              }
              s += "]@" + fmt(f.probs[i]);
            }
            return s + ")";
          },
      },
      kind);
  return out + "|dim=" + std::to_string(space.dim) + "|" + std::string(to_string(space.norm_kind));
}

std::uint64_t GeneratorDescriptor::hash() const { return fnv1a(describe()); }

GeneratorDescriptor student_t(double df) {
  GeneratorDescriptor g{StudentT{df}, SpaceDescriptor(1, NormKind::L2)};
  g.validate();
  return g;
}

GeneratorDescriptor rademacher() { return {Rademacher{}, SpaceDescriptor(1, NormKind::L2)}; }

GeneratorDescriptor gaussian_kl(std::vector<double> eigenvalues, NormKind norm) {
  const int d = static_cast<int>(eigenvalues.size());
  if (d < 1) throw InvalidConfig("gaussian_kl needs at least one eigenvalue");
  GeneratorDescriptor g{GaussianKL{std::move(eigenvalues)}, SpaceDescriptor(d, norm)};
  g.validate();
  return g;
}

GeneratorDescriptor finite_support(std::vector<Eigen::VectorXd> atoms, std::vector<double> probs,
                                   NormKind norm) {
  if (atoms.empty()) throw InvalidConfig("finite_support needs at least one atom");
  const int d = static_cast<int>(atoms.front().size());
  GeneratorDescriptor g{FiniteSupport{std::move(atoms), std::move(probs)}, SpaceDescriptor(d, norm)};
  g.validate();
  return g;
}

GeneratorDescriptor constant(const Element& x0) {
  GeneratorDescriptor g{FiniteSupport{{x0.coords()}, {1.0}}, x0.space()};
  g.validate();
  return g;
}

std::vector<double> halving_spectrum(int d) {
  std::vector<double> out(static_cast<std::size_t>(std::max(d, 0)));
  double v = 1.0;
  for (auto& e : out) {
    e = v;
    v *= 0.5;
  }
  return out;
}

void DependentGeneratorDescriptor::validate() const {
  base.validate();
  if (ma_coeffs.empty()) throw InvalidConfig("moving average needs at least one coefficient");
  for (double a : ma_coeffs) {
    if (!std::isfinite(a)) throw InvalidConfig("moving-average coefficients must be finite");
  }
  if (ma_coeffs.front() == 0.0) throw InvalidConfig("leading moving-average coefficient must be nonzero");
}

std::string DependentGeneratorDescriptor::describe() const {
  std::string s = "ma(";
  for (std::size_t i = 0; i < ma_coeffs.size(); ++i) s += (i ? "," : "") + fmt(ma_coeffs[i]);
  return s + ")<" + base.describe() + ">";
}

std::uint64_t DependentGeneratorDescriptor::hash() const { return fnv1a(describe()); }

Drawer::Drawer(const GeneratorDescriptor& gen, std::uint64_t seed)
    : gen_(&gen), main_(derive_seed(seed, {1})), aux_(derive_seed(seed, {2})) {
  if (const auto* f = std::get_if<FiniteSupport>(&gen.kind)) {
    cumulative_.resize(f->probs.size());
    std::partial_sum(f->probs.begin(), f->probs.end(), cumulative_.begin());
  }
}

void Drawer::draw(Eigen::Ref<Eigen::VectorXd> out) {
  std::visit(overloaded{
                 [&](const StudentT& t) {
                   const double z = main_.normal();
                   const double v = aux_.chi_square(t.df);
                   out[0] = z / std::sqrt(v / t.df);
                 },
                 [&](const Rademacher&) { out[0] = main_.rademacher(); },
                 [&](const GaussianKL& g) {
                   for (std::size_t i = 0; i < g.eigenvalues.size(); ++i) {
                     out[static_cast<Eigen::Index>(i)] = std::sqrt(g.eigenvalues[i]) * main_.normal();
                   }
                 },
                 [&](const FiniteSupport& f) {
                   std::size_t k = 0;
                   if (f.atoms.size() > 1) {
                     const double u = main_.uniform();
                     k = static_cast<std::size_t>(
                         std::upper_bound(cumulative_.begin(), cumulative_.end(), u) -
                         cumulative_.begin());
                     // the cumulative sum may end just below 1
                     k = std::min(k, f.atoms.size() - 1);
                   }
                   out = f.atoms[k];
                 },
             },
             gen_->kind);
}

Eigen::VectorXd Drawer::draw() {
  Eigen::VectorXd v(gen_->space.dim);
  draw(v);
  return v;
}

Sample draw_iid(const GeneratorDescriptor& gen, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidConfig("draw_iid needs n >= 1");
  gen.validate();
  Drawer drawer(gen, seed);
  Eigen::MatrixXd rows(n, gen.space.dim);
  Eigen::VectorXd buf(gen.space.dim);
  for (int i = 0; i < n; ++i) {
    drawer.draw(buf);
    rows.row(i) = buf.transpose();
  }
  return Sample(gen.space, std::move(rows));
}

Sample draw_dependent(const DependentGeneratorDescriptor& gen, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidConfig("draw_dependent needs n >= 1");
  gen.validate();
  const int q = gen.order();
  const Sample innovations = draw_iid(gen.base, n + q, seed);
  const Eigen::MatrixXd& z = innovations.rows();
  Eigen::MatrixXd rows(n, gen.base.space.dim);
  for (int t = 0; t < n; ++t) {
    rows.row(t) = gen.ma_coeffs[0] * z.row(t + q);
    for (int j = 1; j <= q; ++j) rows.row(t) += gen.ma_coeffs[static_cast<std::size_t>(j)] * z.row(t + q - j);
  }
  return Sample(gen.base.space, std::move(rows));
}

Moments exact_moments(const GeneratorDescriptor& gen) {
  gen.validate();
  const int d = gen.space.dim;
  Moments out{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  std::visit(overloaded{
                 [&](const StudentT& t) { out.second(0, 0) = t.df / (t.df - 2.0); },
                 [&](const Rademacher&) { out.second(0, 0) = 1.0; },
                 [&](const GaussianKL& g) {
                   for (int i = 0; i < d; ++i) out.second(i, i) = g.eigenvalues[static_cast<std::size_t>(i)];
                 },
                 [&](const FiniteSupport& f) {
                   for (std::size_t k = 0; k < f.atoms.size(); ++k) {
                     out.mean += f.probs[k] * f.atoms[k];
                     out.second += f.probs[k] * f.atoms[k] * f.atoms[k].transpose();
                   }
                 },
             },
             gen.kind);
  return out;
}

Moments marginal_moments(const DependentGeneratorDescriptor& gen) {
  gen.validate();
  const Moments z = exact_moments(gen.base);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double a : gen.ma_coeffs) {
    sum += a;
    sum_sq += a * a;
  }
  Moments out;
  out.mean = sum * z.mean;
  out.second = sum_sq * z.covariance() + out.mean * out.mean.transpose();
  return out;
}

}  // namespace ucov
