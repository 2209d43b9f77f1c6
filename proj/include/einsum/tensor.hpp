#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "einsum/semiring.hpp"
#include "einsum/shape.hpp"

namespace einsum {

// Dense tensor in row-major layout (last axis fastest). Scalars are order-0
// tensors holding exactly one entry.
template <typename T>
class Tensor {
 public:
  Tensor() : data_(1, T{}) {}
  explicit Tensor(Shape shape, T fill = T{})
      : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_.entry_count()), fill) {}
  Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_.entry_count())
      fail(Errc::shape_mismatch, "entry count does not match shape " + shape_.str());
  }

  static Tensor scalar_of(T v) {
    Tensor t;
    t.data_[0] = v;
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t order() const noexcept { return shape_.order(); }
  std::size_t entry_count() const noexcept { return data_.size(); }

  std::size_t flat_index(std::span<const std::int64_t> pos) const {
    if (pos.size() != shape_.order())
      fail(Errc::shape_mismatch, "position order does not match tensor order");
    std::size_t idx = 0;
    for (std::size_t j = 0; j < pos.size(); ++j) {
      if (pos[j] < 0 || pos[j] >= shape_.dim(j))
        fail(Errc::shape_mismatch, "position out of range");
      idx = idx * static_cast<std::size_t>(shape_.dim(j)) + static_cast<std::size_t>(pos[j]);
    }
    return idx;
  }

  T& at(std::span<const std::int64_t> pos) { return data_[flat_index(pos)]; }
  const T& at(std::span<const std::int64_t> pos) const { return data_[flat_index(pos)]; }
  T& at_flat(std::size_t i) { return data_[i]; }
  const T& at_flat(std::size_t i) const { return data_[i]; }

  const std::vector<T>& values() const noexcept { return data_; }
  std::vector<T>& values() noexcept { return data_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

// Advances a row-major position odometer; returns false after the last one.
inline bool next_position(const Shape& shape, std::vector<std::int64_t>& pos) {
  for (std::size_t j = shape.order(); j-- > 0;) {
    if (++pos[j] < shape.dim(j)) return true;
    pos[j] = 0;
  }
  return false;
}

// Order-2o tensor that is one where the first o coordinates equal the last o.
template <SemiringLike R>
Tensor<typename R::value_type> materialize_delta(std::size_t order, const Shape& dims) {
  if (dims.order() != order)
    fail(Errc::length_mismatch, "delta of order " + std::to_string(2 * order) + " needs " +
                                    std::to_string(order) + " axis lengths");
  Tensor<typename R::value_type> out(concat(dims, dims), R::zero());
  std::vector<std::int64_t> pos(2 * order, 0);
  if (out.entry_count() == 0) return out;
  do {
    bool diagonal = true;
    for (std::size_t j = 0; j < order; ++j)
      if (pos[j] != pos[order + j]) {
        diagonal = false;
        break;
      }
    if (diagonal) out.at(pos) = R::one();
  } while (next_position(out.shape(), pos));
  return out;
}

// Tensor holding the semiring one at every position.
template <SemiringLike R>
Tensor<typename R::value_type> materialize_ones(const Shape& shape) {
  return Tensor<typename R::value_type>(shape, R::one());
}

template <SemiringLike R>
bool tensors_equal(const Tensor<typename R::value_type>& a,
                   const Tensor<typename R::value_type>& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.entry_count(); ++i)
    if (!R::equal(a.at_flat(i), b.at_flat(i))) return false;
  return true;
}

}  // namespace einsum
