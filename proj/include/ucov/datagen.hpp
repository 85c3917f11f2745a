#pragma once

#include "ucov/rng.hpp"
#include "ucov/spaces.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace ucov {

struct StudentT {
  double df = 5.0;
};

struct Rademacher {};

/// Independent centered normal coordinates with the given variances
/// (a truncated Karhunen-Loeve expansion in the coordinate basis).
struct GaussianKL {
  std::vector<double> eigenvalues;
};

struct FiniteSupport {
  std::vector<Eigen::VectorXd> atoms;
  std::vector<double> probs;
};

using GeneratorKind = std::variant<StudentT, Rademacher, GaussianKL, FiniteSupport>;

struct GeneratorDescriptor {
  GeneratorKind kind;
  SpaceDescriptor space;

  /// Throws InvalidConfig when the law or its space is malformed.
  void validate() const;
  /// Canonical text form; also the input of hash().
  std::string describe() const;
  std::uint64_t hash() const;
};

GeneratorDescriptor student_t(double df);
GeneratorDescriptor rademacher();
GeneratorDescriptor gaussian_kl(std::vector<double> eigenvalues, NormKind norm = NormKind::L2);
GeneratorDescriptor finite_support(std::vector<Eigen::VectorXd> atoms, std::vector<double> probs,
                                   NormKind norm = NormKind::L2);
/// Point mass at x0.
GeneratorDescriptor constant(const Element& x0);

/// 1, 1/2, 1/4, ... (d entries).
std::vector<double> halving_spectrum(int d);

/// X_t = sum_j a_j Z_{t-j} over i.i.d. innovations Z drawn from base.
struct DependentGeneratorDescriptor {
  GeneratorDescriptor base;
  std::vector<double> ma_coeffs{1.0};

  int order() const { return static_cast<int>(ma_coeffs.size()) - 1; }
  void validate() const;
  std::string describe() const;
  std::uint64_t hash() const;
};

/// Stateful draw stream for one descriptor. Student-t uses separate normal
/// and chi-square substreams; everything else reads the primary stream.
class Drawer {
 public:
  Drawer(const GeneratorDescriptor& gen, std::uint64_t seed);

  void draw(Eigen::Ref<Eigen::VectorXd> out);
  Eigen::VectorXd draw();

 private:
  const GeneratorDescriptor* gen_;
  Rng main_;
  Rng aux_;
  std::vector<double> cumulative_;
};

Sample draw_iid(const GeneratorDescriptor& gen, int n, std::uint64_t seed);

/// First q innovations are burn-in; with q = 0 and a_0 = 1 the result is
/// bit-identical to draw_iid(base, n, seed).
Sample draw_dependent(const DependentGeneratorDescriptor& gen, int n, std::uint64_t seed);

/// First and second raw moments, E X and E[X X^T].
struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd second;

  Eigen::MatrixXd covariance() const { return second - mean * mean.transpose(); }
};

Moments exact_moments(const GeneratorDescriptor& gen);

/// Stationary marginal moments of X_t.
Moments marginal_moments(const DependentGeneratorDescriptor& gen);

}  // namespace ucov
