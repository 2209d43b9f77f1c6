#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "einsum/errors.hpp"

namespace einsum {

// Axis lengths of a dense tensor. The empty shape denotes a scalar (order 0).
class Shape {
 public:
  Shape() = default;
  explicit Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
    for (auto d : dims_)
      if (d < 1) fail(Errc::shape_mismatch, "axis lengths must be >= 1");
  }

  static Shape scalar() { return Shape(); }

  std::size_t order() const noexcept { return dims_.size(); }
  std::int64_t dim(std::size_t i) const { return dims_.at(i); }
  const std::vector<std::int64_t>& dims() const noexcept { return dims_; }

  // Product of axis lengths; the empty product is 1 (a scalar holds one entry).
  std::int64_t entry_count() const noexcept {
    std::int64_t n = 1;
    for (auto d : dims_) n *= d;
    return n;
  }

  std::string str() const {
    std::string out = "(";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(dims_[i]);
    }
    return out + ")";
  }

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::int64_t> dims_;
};

inline Shape concat(const Shape& a, const Shape& b) {
  std::vector<std::int64_t> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return Shape(std::move(dims));
}

// Per-axis length declarations on delta/ones leaves; nullopt marks an axis
// whose length is inferred from the enclosing einsum node.
using DimSpec = std::vector<std::optional<std::int64_t>>;

inline bool fully_known(const DimSpec& d) {
  for (const auto& v : d)
    if (!v) return false;
  return true;
}

inline Shape to_shape(const DimSpec& d) {
  std::vector<std::int64_t> dims;
  dims.reserve(d.size());
  for (const auto& v : d) {
    if (!v) fail(Errc::underdetermined_dims, "axis length not declared and not inferable");
    dims.push_back(*v);
  }
  return Shape(std::move(dims));
}

inline DimSpec to_dimspec(const Shape& s) {
  DimSpec out;
  out.reserve(s.order());
  for (auto d : s.dims()) out.emplace_back(d);
  return out;
}

inline DimSpec unknown_dims(std::size_t order) {
  return DimSpec(order, std::nullopt);
}

}  // namespace einsum
