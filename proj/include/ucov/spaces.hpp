#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ucov {

enum class NormKind { L1, L2, Linf };

std::string_view to_string(NormKind kind);
NormKind parse_norm_kind(std::string_view text);

/// Finite-dimensional coordinate model of the underlying Banach space:
/// R^dim with the l1, l2 (Hilbert) or l_inf norm.
struct SpaceDescriptor {
  int dim = 1;
  NormKind norm_kind = NormKind::L2;

  SpaceDescriptor() = default;
  SpaceDescriptor(int d, NormKind kind);

  bool is_hilbert() const { return norm_kind == NormKind::L2; }
  friend bool operator==(const SpaceDescriptor&, const SpaceDescriptor&) = default;
};

/// Space holding the coordinate representation of dual vectors
/// (l1 <-> l_inf, l2 <-> l2).
SpaceDescriptor dual_space(const SpaceDescriptor& space);

/// Point of the coordinate space. Coordinates are always finite.
class Element {
 public:
  Element(SpaceDescriptor space, Eigen::VectorXd coords);
  Element(SpaceDescriptor space, std::initializer_list<double> coords);

  static Element zero(const SpaceDescriptor& space);

  const SpaceDescriptor& space() const { return space_; }
  const Eigen::VectorXd& coords() const { return coords_; }
  int dim() const { return space_.dim; }
  double operator[](int i) const { return coords_[i]; }

  friend Element operator+(const Element& a, const Element& b);
  friend Element operator-(const Element& a, const Element& b);
  friend Element operator*(double c, const Element& a);

 private:
  SpaceDescriptor space_;
  Eigen::VectorXd coords_;
};

double norm(const Element& x);

/// Euclidean inner product; only defined on L2 spaces.
double inner(const Element& x, const Element& y);

Element mean(std::span<const Element> xs);

/// x / ||x|| in the element's own norm; the zero element maps to zero.
Element sign_map(const Element& x);

/// Ordered list of n elements of one space, stored row-wise (n x dim).
class Sample {
 public:
  Sample(SpaceDescriptor space, Eigen::MatrixXd rows);
  explicit Sample(std::span<const Element> elements);

  const SpaceDescriptor& space() const { return space_; }
  const Eigen::MatrixXd& rows() const { return rows_; }
  int size() const { return static_cast<int>(rows_.rows()); }
  Element element(int i) const;

  /// Copy with rows reordered: result row i is this row perm[i].
  Sample permuted(std::span<const int> perm) const;

 private:
  SpaceDescriptor space_;
  Eigen::MatrixXd rows_;
};

}  // namespace ucov
