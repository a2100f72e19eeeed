#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace relkit {

using Index = Eigen::Index;

/// One axis of a tensor: a label unique within its tensor and a positive size.
struct Leg {
  std::string label;
  Index dim = 1;

  friend bool operator==(const Leg&, const Leg&) = default;
};

/// A pairing of leg `first` of the left operand with leg `second` of the right.
using LegPair = std::pair<std::string, std::string>;

class ContractionError : public std::invalid_argument {
 public:
  enum class Kind {
    DimensionMismatch,
    UnknownLeg,
    DuplicateLeg,
    EmptyPairing,
    InvalidNetwork,
    Disconnected,
    UnknownNode,
    ShapeMismatch,
  };

  ContractionError(Kind kind, const std::string& what)
      : std::invalid_argument(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Dense tensor with named legs. Entries are stored row-major over the leg
/// order: the last leg varies fastest.
template <typename Scalar>
class BasicTensor {
 public:
  using scalar_type = Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowMajorMatrix =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// Order-0 tensor holding a single zero.
  BasicTensor() : data_(Vector::Zero(1)) {}

  /// Zero-filled tensor with the given legs.
  explicit BasicTensor(std::vector<Leg> legs) : legs_(std::move(legs)) {
    check_legs();
    data_ = Vector::Zero(shape_size());
  }

  BasicTensor(std::vector<Leg> legs, Vector data)
      : legs_(std::move(legs)), data_(std::move(data)) {
    check_legs();
    if (data_.size() != shape_size()) {
      throw ContractionError(ContractionError::Kind::ShapeMismatch,
                             "tensor data length " + std::to_string(data_.size()) +
                                 " does not match leg dims product " +
                                 std::to_string(shape_size()));
    }
  }

  static BasicTensor scalar(Scalar value) {
    BasicTensor t;
    t.data_(0) = value;
    return t;
  }

  static BasicTensor vector(std::string label, const Vector& v) {
    return BasicTensor({Leg{std::move(label), v.size()}}, v);
  }

  /// Order-2 tensor with legs (row, col) holding `m`.
  static BasicTensor matrix(std::string row, std::string col, const Matrix& m) {
    RowMajorMatrix rm = m;
    Vector flat = Eigen::Map<const Vector>(rm.data(), rm.size());
    return BasicTensor({Leg{std::move(row), m.rows()}, Leg{std::move(col), m.cols()}},
                       std::move(flat));
  }

  std::size_t order() const noexcept { return legs_.size(); }
  const std::vector<Leg>& legs() const noexcept { return legs_; }
  const Leg& leg(std::size_t axis) const { return legs_.at(axis); }
  Index size() const noexcept { return data_.size(); }

  std::vector<Index> dims() const {
    std::vector<Index> out;
    out.reserve(legs_.size());
    for (const auto& l : legs_) out.push_back(l.dim);
    return out;
  }

  bool has_leg(const std::string& label) const {
    return std::any_of(legs_.begin(), legs_.end(),
                       [&](const Leg& l) { return l.label == label; });
  }

  std::size_t axis(const std::string& label) const {
    for (std::size_t i = 0; i < legs_.size(); ++i) {
      if (legs_[i].label == label) return i;
    }
    throw ContractionError(ContractionError::Kind::UnknownLeg, "unknown leg '" + label + "'");
  }

  Index dim(const std::string& label) const { return legs_[axis(label)].dim; }

  Vector& data() noexcept { return data_; }
  const Vector& data() const noexcept { return data_; }

  Index flat_index(std::span<const Index> idx) const {
    if (idx.size() != legs_.size()) {
      throw ContractionError(ContractionError::Kind::ShapeMismatch,
                             "index arity does not match tensor order");
    }
    Index flat = 0;
    for (std::size_t i = 0; i < legs_.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= legs_[i].dim) throw std::out_of_range("tensor index out of range");
      flat = flat * legs_[i].dim + idx[i];
    }
    return flat;
  }

  Scalar& operator()(std::span<const Index> idx) { return data_(flat_index(idx)); }
  Scalar operator()(std::span<const Index> idx) const { return data_(flat_index(idx)); }
  Scalar& at(std::initializer_list<Index> idx) { return (*this)(std::span(idx.begin(), idx.size())); }
  Scalar at(std::initializer_list<Index> idx) const {
    return (*this)(std::span(idx.begin(), idx.size()));
  }

  /// View of an order-2 tensor as a (rows = first leg) matrix.
  Eigen::Map<const RowMajorMatrix> as_matrix() const {
    if (order() != 2) {
      throw ContractionError(ContractionError::Kind::ShapeMismatch, "as_matrix needs an order-2 tensor");
    }
    return Eigen::Map<const RowMajorMatrix>(data_.data(), legs_[0].dim, legs_[1].dim);
  }

  BasicTensor relabeled(const std::string& from, const std::string& to) const {
    BasicTensor out = *this;
    out.legs_[axis(from)].label = to;
    out.check_legs();
    return out;
  }

  BasicTensor with_labels(std::vector<std::string> labels) const {
    if (labels.size() != legs_.size()) {
      throw ContractionError(ContractionError::Kind::ShapeMismatch, "label count does not match order");
    }
    BasicTensor out = *this;
    for (std::size_t i = 0; i < labels.size(); ++i) out.legs_[i].label = std::move(labels[i]);
    out.check_legs();
    return out;
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.legs_ == b.legs_ && a.data_ == b.data_;
  }

 private:
  Index shape_size() const {
    Index n = 1;
    for (const auto& l : legs_) n *= l.dim;
    return n;
  }

  void check_legs() const {
    for (std::size_t i = 0; i < legs_.size(); ++i) {
      if (legs_[i].dim < 1) {
        throw ContractionError(ContractionError::Kind::ShapeMismatch,
                               "leg '" + legs_[i].label + "' has non-positive dim");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (legs_[i].label == legs_[j].label) {
          throw ContractionError(ContractionError::Kind::DuplicateLeg,
                                 "duplicate leg label '" + legs_[i].label + "'");
        }
      }
    }
  }

  std::vector<Leg> legs_;
  Vector data_;
};

using Tensor = BasicTensor<double>;

/// Reorders the axes of `t` so its legs follow `order` (a permutation of its labels).
template <typename Scalar>
BasicTensor<Scalar> permute(const BasicTensor<Scalar>& t, std::span<const std::string> order) {
  const std::size_t n = t.order();
  if (order.size() != n) {
    throw ContractionError(ContractionError::Kind::ShapeMismatch, "permutation arity mismatch");
  }
  std::vector<std::size_t> src_axis(n);
  bool identity = true;
  for (std::size_t i = 0; i < n; ++i) {
    src_axis[i] = t.axis(order[i]);
    identity = identity && src_axis[i] == i;
  }
  if (identity) return t;

  std::vector<Leg> legs(n);
  for (std::size_t i = 0; i < n; ++i) legs[i] = t.leg(src_axis[i]);

  // Strides of the source, reordered into destination axis order.
  std::vector<Index> src_stride(n);
  {
    Index s = 1;
    for (std::size_t i = n; i-- > 0;) {
      src_stride[i] = s;
      s *= t.leg(i).dim;
    }
  }
  std::vector<Index> stride(n), dim(n);
  for (std::size_t i = 0; i < n; ++i) {
    stride[i] = src_stride[src_axis[i]];
    dim[i] = legs[i].dim;
  }

  typename BasicTensor<Scalar>::Vector out(t.size());
  std::vector<Index> counter(n, 0);
  Index src = 0;
  const auto& in = t.data();
  for (Index flat = 0; flat < out.size(); ++flat) {
    out(flat) = in(src);
    for (std::size_t ax = n; ax-- > 0;) {
      if (++counter[ax] < dim[ax]) {
        src += stride[ax];
        break;
      }
      src -= stride[ax] * (dim[ax] - 1);
      counter[ax] = 0;
    }
  }
  return BasicTensor<Scalar>(std::move(legs), std::move(out));
}

namespace detail {

/// Pairwise contraction without the nonempty-pairing requirement; an empty
/// pairing yields the outer product.
template <typename Scalar>
BasicTensor<Scalar> contract_legs(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b,
                                  std::span<const LegPair> pairs) {
  using Err = ContractionError;
  std::vector<std::string> a_paired, b_paired;
  for (const auto& [la, lb] : pairs) {
    if (!a.has_leg(la)) throw Err(Err::Kind::UnknownLeg, "left operand has no leg '" + la + "'");
    if (!b.has_leg(lb)) throw Err(Err::Kind::UnknownLeg, "right operand has no leg '" + lb + "'");
    if (std::find(a_paired.begin(), a_paired.end(), la) != a_paired.end() ||
        std::find(b_paired.begin(), b_paired.end(), lb) != b_paired.end()) {
      throw Err(Err::Kind::DuplicateLeg, "leg paired twice: '" + la + "'/'" + lb + "'");
    }
    if (a.dim(la) != b.dim(lb)) {
      throw Err(Err::Kind::DimensionMismatch, "cannot pair '" + la + "' (" + std::to_string(a.dim(la)) +
                                                  ") with '" + lb + "' (" +
                                                  std::to_string(b.dim(lb)) + ")");
    }
    a_paired.push_back(la);
    b_paired.push_back(lb);
  }

  std::vector<std::string> a_order, b_order;
  std::vector<Leg> out_legs;
  Index rows = 1, cols = 1, inner = 1;
  for (const auto& l : a.legs()) {
    if (std::find(a_paired.begin(), a_paired.end(), l.label) == a_paired.end()) {
      a_order.push_back(l.label);
      out_legs.push_back(l);
      rows *= l.dim;
    }
  }
  for (const auto& l : a_paired) {
    a_order.push_back(l);
    inner *= a.dim(l);
  }
  b_order = b_paired;
  for (const auto& l : b.legs()) {
    if (std::find(b_paired.begin(), b_paired.end(), l.label) == b_paired.end()) {
      b_order.push_back(l.label);
      out_legs.push_back(l);
      cols *= l.dim;
    }
  }

  using RM = typename BasicTensor<Scalar>::RowMajorMatrix;
  const BasicTensor<Scalar> ap = permute(a, std::span<const std::string>(a_order));
  const BasicTensor<Scalar> bp = permute(b, std::span<const std::string>(b_order));
  Eigen::Map<const RM> am(ap.data().data(), rows, inner);
  Eigen::Map<const RM> bm(bp.data().data(), inner, cols);
  typename BasicTensor<Scalar>::Vector out(rows * cols);
  Eigen::Map<RM> om(out.data(), rows, cols);
  om.noalias() = am * bm;
  return BasicTensor<Scalar>(std::move(out_legs), std::move(out));
}

}  // namespace detail

/// Tensor product of `a` and `b` through the given leg pairs. The result
/// carries a's unpaired legs followed by b's unpaired legs, each in their
/// original order.
template <typename Scalar>
BasicTensor<Scalar> contract_pair(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b,
                                  std::span<const LegPair> pairs) {
  if (pairs.empty()) {
    throw ContractionError(ContractionError::Kind::EmptyPairing, "contract_pair needs at least one leg pair");
  }
  return detail::contract_legs(a, b, pairs);
}

template <typename Scalar>
BasicTensor<Scalar> contract_pair(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b,
                                  std::initializer_list<LegPair> pairs) {
  return contract_pair(a, b, std::span<const LegPair>(pairs.begin(), pairs.size()));
}

/// Frobenius inner product; legs are matched by label.
template <typename Scalar>
Scalar inner(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  if (a.order() != b.order()) {
    throw ContractionError(ContractionError::Kind::ShapeMismatch, "inner product of tensors of different order");
  }
  std::vector<std::string> order;
  for (const auto& l : a.legs()) {
    if (b.dim(l.label) != l.dim) {
      throw ContractionError(ContractionError::Kind::DimensionMismatch, "leg '" + l.label + "' differs in dim");
    }
    order.push_back(l.label);
  }
  return a.data().dot(permute(b, std::span<const std::string>(order)).data());
}

}  // namespace relkit
