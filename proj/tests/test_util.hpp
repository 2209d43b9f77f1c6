#pragma once

// Shared test helpers: hand-written loop oracles for the classic operations,
// an independent brute-force einsum evaluator, and small tensor builders.
// Nothing in here goes through the library's evaluation path, so agreement
// between the two is meaningful.

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "einsum/einsum.hpp"

namespace testutil {

using einsum::IndexString;
using einsum::IndexSymbol;
using einsum::Shape;
using einsum::Tensor;

template <typename T>
Tensor<T> make_tensor(std::vector<std::int64_t> dims, std::vector<T> values) {
  return Tensor<T>(Shape(std::move(dims)), std::move(values));
}

inline Tensor<std::int64_t> random_int_tensor(std::vector<std::int64_t> dims,
                                              std::mt19937_64& rng, std::int64_t lo = 0,
                                              std::int64_t hi = 3) {
  Tensor<std::int64_t> t{Shape(std::move(dims))};
  for (std::size_t i = 0; i < t.entry_count(); ++i)
    t.at_flat(i) = lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  return t;
}

// ---------------------------------------------------------------------------
// Loop oracles (integers, plain nested loops)

inline Tensor<std::int64_t> matmul_oracle(const Tensor<std::int64_t>& a,
                                          const Tensor<std::int64_t>& b) {
  std::int64_t m = a.shape().dim(0), k = a.shape().dim(1), n = b.shape().dim(1);
  Tensor<std::int64_t> out{Shape({m, n})};
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      std::int64_t acc = 0;
      for (std::int64_t l = 0; l < k; ++l)
        acc += a.at(std::vector<std::int64_t>{i, l}) * b.at(std::vector<std::int64_t>{l, j});
      out.at(std::vector<std::int64_t>{i, j}) = acc;
    }
  return out;
}

inline Tensor<std::int64_t> transpose_oracle(const Tensor<std::int64_t>& a) {
  std::int64_t m = a.shape().dim(0), n = a.shape().dim(1);
  Tensor<std::int64_t> out{Shape({n, m})};
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j)
      out.at(std::vector<std::int64_t>{j, i}) = a.at(std::vector<std::int64_t>{i, j});
  return out;
}

inline Tensor<std::int64_t> elemwise_oracle(const Tensor<std::int64_t>& x,
                                            const Tensor<std::int64_t>& y) {
  Tensor<std::int64_t> out{x.shape()};
  for (std::size_t i = 0; i < x.entry_count(); ++i) out.at_flat(i) = x.at_flat(i) * y.at_flat(i);
  return out;
}

inline Tensor<std::int64_t> inner_oracle(const Tensor<std::int64_t>& x,
                                         const Tensor<std::int64_t>& y) {
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < x.entry_count(); ++i) acc += x.at_flat(i) * y.at_flat(i);
  return Tensor<std::int64_t>::scalar_of(acc);
}

inline Tensor<std::int64_t> outer_oracle(const Tensor<std::int64_t>& x,
                                         const Tensor<std::int64_t>& y) {
  std::int64_t m = x.shape().dim(0), n = y.shape().dim(0);
  Tensor<std::int64_t> out{Shape({m, n})};
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j)
      out.at(std::vector<std::int64_t>{i, j}) =
          x.at(std::vector<std::int64_t>{i}) * y.at(std::vector<std::int64_t>{j});
  return out;
}

inline Tensor<std::int64_t> diag_extract_oracle(const Tensor<std::int64_t>& a) {
  std::int64_t n = a.shape().dim(0);
  Tensor<std::int64_t> out{Shape({n})};
  for (std::int64_t i = 0; i < n; ++i)
    out.at(std::vector<std::int64_t>{i}) = a.at(std::vector<std::int64_t>{i, i});
  return out;
}

inline Tensor<std::int64_t> diag_broadcast_oracle(const Tensor<std::int64_t>& v) {
  std::int64_t n = v.shape().dim(0);
  Tensor<std::int64_t> out{Shape({n, n})};  // off-diagonal stays zero
  for (std::int64_t i = 0; i < n; ++i)
    out.at(std::vector<std::int64_t>{i, i}) = v.at(std::vector<std::int64_t>{i});
  return out;
}

// ---------------------------------------------------------------------------
// Independent brute-force evaluator: recursion over a symbol-assignment map,
// with an optional reversed enumeration order.

template <typename R>
class NaiveEinsum {
 public:
  NaiveEinsum(const einsum::FormatString& format,
              const std::vector<Tensor<typename R::value_type>>& args, bool reverse)
      : format_(format), args_(args) {
    for (std::size_t i = 0; i < format.inputs.size(); ++i)
      for (std::size_t j = 0; j < format.inputs[i].size(); ++j)
        dims_.insert_or_assign(format.inputs[i][j], args[i].shape().dim(j));
    for (const auto& [sym, len] : dims_) order_.push_back(sym);
    if (reverse) std::reverse(order_.begin(), order_.end());
  }

  Tensor<typename R::value_type> run() {
    std::vector<std::int64_t> out_dims;
    for (const auto& s : format_.output) out_dims.push_back(dims_.at(s));
    Tensor<typename R::value_type> out{Shape(std::move(out_dims)), R::zero()};
    recurse(0, out);
    return out;
  }

 private:
  void recurse(std::size_t k, Tensor<typename R::value_type>& out) {
    if (k == order_.size()) {
      typename R::value_type product = R::one();
      for (std::size_t i = 0; i < args_.size(); ++i)
        product = R::mul(product, args_[i].at(positions(format_.inputs[i])));
      auto& cell = out.at(positions(format_.output));
      cell = R::add(cell, product);
      return;
    }
    for (std::int64_t c = 0; c < dims_.at(order_[k]); ++c) {
      assignment_.insert_or_assign(order_[k], c);
      recurse(k + 1, out);
    }
  }

  std::vector<std::int64_t> positions(const IndexString& I) const {
    std::vector<std::int64_t> pos;
    for (const auto& s : I) pos.push_back(assignment_.at(s));
    return pos;
  }

  const einsum::FormatString& format_;
  const std::vector<Tensor<typename R::value_type>>& args_;
  std::map<IndexSymbol, std::int64_t> dims_;
  std::vector<IndexSymbol> order_;
  std::map<IndexSymbol, std::int64_t> assignment_;
};

template <typename R>
Tensor<typename R::value_type> naive_einsum(const einsum::FormatString& format,
                                            const std::vector<Tensor<typename R::value_type>>& args,
                                            bool reverse = false) {
  return NaiveEinsum<R>(format, args, reverse).run();
}

}  // namespace testutil
