#include "ucov/spaces.hpp"

#include "ucov/errors.hpp"

#include <cmath>

namespace ucov {

namespace {

void require_same_space(const SpaceDescriptor& a, const SpaceDescriptor& b, const char* op) {
  if (!(a == b)) {
    throw DimensionError(std::string(op) + ": operands live in different spaces (dim " +
                         std::to_string(a.dim) + " " + std::string(to_string(a.norm_kind)) +
                         " vs dim " + std::to_string(b.dim) + " " +
                         std::string(to_string(b.norm_kind)) + ")");
  }
}

}  // namespace

std::string_view to_string(NormKind kind) {
  switch (kind) {
    case NormKind::L1: return "L1";
    case NormKind::L2: return "L2";
    case NormKind::Linf: return "Linf";
  }
  return "?";
}

NormKind parse_norm_kind(std::string_view text) {
  if (text == "L1" || text == "l1") return NormKind::L1;
  if (text == "L2" || text == "l2") return NormKind::L2;
  if (text == "Linf" || text == "linf" || text == "LINF") return NormKind::Linf;
  throw InvalidConfig("unknown norm kind '" + std::string(text) + "' (expected L1, L2 or Linf)");
}

SpaceDescriptor::SpaceDescriptor(int d, NormKind kind) : dim(d), norm_kind(kind) {
  if (d < 1) throw InvalidConfig("space dimension must be >= 1, got " + std::to_string(d));
}

SpaceDescriptor dual_space(const SpaceDescriptor& space) {
  switch (space.norm_kind) {
    case NormKind::L1: return {space.dim, NormKind::Linf};
    case NormKind::Linf: return {space.dim, NormKind::L1};
    case NormKind::L2: break;
  }
  return space;
}

Element::Element(SpaceDescriptor space, Eigen::VectorXd coords)
    : space_(space), coords_(std::move(coords)) {
  if (coords_.size() != space_.dim) {
    throw DimensionError("element has " + std::to_string(coords_.size()) +
                         " coordinates but the space has dim " + std::to_string(space_.dim));
  }
  if (!coords_.allFinite()) throw InvalidConfig("element coordinates must be finite");
}

Element::Element(SpaceDescriptor space, std::initializer_list<double> coords)
    : Element(space, Eigen::Map<const Eigen::VectorXd>(coords.begin(),
                                                       static_cast<Eigen::Index>(coords.size()))) {}

Element Element::zero(const SpaceDescriptor& space) {
  return Element(space, Eigen::VectorXd::Zero(space.dim));
}

Element operator+(const Element& a, const Element& b) {
  require_same_space(a.space_, b.space_, "add");
  return Element(a.space_, a.coords_ + b.coords_);
}

Element operator-(const Element& a, const Element& b) {
  require_same_space(a.space_, b.space_, "subtract");
  return Element(a.space_, a.coords_ - b.coords_);
}

Element operator*(double c, const Element& a) { return Element(a.space_, c * a.coords_); }

double norm(const Element& x) {
  const auto& v = x.coords();
  switch (x.space().norm_kind) {
    case NormKind::L1: return v.lpNorm<1>();
    case NormKind::L2: return v.norm();
    case NormKind::Linf: return v.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

double inner(const Element& x, const Element& y) {
  require_same_space(x.space(), y.space(), "inner");
  if (!x.space().is_hilbert()) {
    throw UnsupportedOperation("inner product requires an L2 space, got " +
                               std::string(to_string(x.space().norm_kind)));
  }
  return x.coords().dot(y.coords());
}

Element mean(std::span<const Element> xs) {
  if (xs.empty()) throw EmptyInput("mean of an empty list");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(xs.front().dim());
  for (const auto& x : xs) {
    require_same_space(xs.front().space(), x.space(), "mean");
    acc += x.coords();
  }
  return Element(xs.front().space(), acc / static_cast<double>(xs.size()));
}

Element sign_map(const Element& x) {
  const double r = norm(x);
  if (r == 0.0) return Element::zero(x.space());
  return Element(x.space(), x.coords() / r);
}

Sample::Sample(SpaceDescriptor space, Eigen::MatrixXd rows) : space_(space), rows_(std::move(rows)) {
  if (rows_.rows() == 0) throw EmptyInput("sample must contain at least one element");
  if (rows_.cols() != space_.dim) {
    throw DimensionError("sample rows have " + std::to_string(rows_.cols()) +
                         " columns but the space has dim " + std::to_string(space_.dim));
  }
  if (!rows_.allFinite()) throw InvalidConfig("sample coordinates must be finite");
}

Sample::Sample(std::span<const Element> elements)
    : Sample(elements.empty() ? SpaceDescriptor{} : elements.front().space(), [&] {
        if (elements.empty()) return Eigen::MatrixXd();
        Eigen::MatrixXd m(static_cast<Eigen::Index>(elements.size()), elements.front().dim());
        for (std::size_t i = 0; i < elements.size(); ++i) {
          require_same_space(elements.front().space(), elements[i].space(), "sample");
          m.row(static_cast<Eigen::Index>(i)) = elements[i].coords().transpose();
        }
        return m;
      }()) {}

Element Sample::element(int i) const { return Element(space_, rows_.row(i).transpose()); }

Sample Sample::permuted(std::span<const int> perm) const {
  if (static_cast<int>(perm.size()) != size()) throw DimensionError("permutation has wrong length");
  Eigen::MatrixXd out(rows_.rows(), rows_.cols());
  for (int i = 0; i < size(); ++i) out.row(i) = rows_.row(perm[i]);
  return Sample(space_, std::move(out));
}

}  // namespace ucov
