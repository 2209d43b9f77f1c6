#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "einsum/analyze.hpp"
#include "einsum/expression.hpp"
#include "einsum/semiring.hpp"
#include "einsum/tensor.hpp"

namespace einsum {

// One coordinate for every index symbol in scope of an einsum node.
// Coordinates are 0-based.
class GlobalPosition {
 public:
  GlobalPosition() = default;
  explicit GlobalPosition(std::map<IndexSymbol, std::int64_t> coords)
      : coords_(std::move(coords)) {}

  void assign(IndexSymbol s, std::int64_t coord) { coords_[s] = coord; }

  std::int64_t at(IndexSymbol s) const {
    auto it = coords_.find(s);
    if (it == coords_.end())
      fail(Errc::unassigned_symbol, "global position does not assign symbol " + s.str());
    return it->second;
  }

  const std::map<IndexSymbol, std::int64_t>& coords() const noexcept { return coords_; }

 private:
  std::map<IndexSymbol, std::int64_t> coords_;
};

// Reads a tensor position out of a global position through an index string;
// the empty index string yields the empty tuple.
inline std::vector<std::int64_t> project(const GlobalPosition& g, const IndexString& I) {
  std::vector<std::int64_t> pos;
  pos.reserve(I.size());
  for (const auto& s : I) pos.push_back(g.at(s));
  return pos;
}

// Counts the work the brute-force enumeration performs.
struct EvalStats {
  std::uint64_t global_positions = 0;
};

template <SemiringLike R>
using TensorBindings = std::map<std::string, Tensor<typename R::value_type>>;

// Sum-of-products semantics by brute force: every entry of the output
// aggregates over all global positions that project onto it. Enumeration is
// lexicographic over the sorted symbol scope, so results are reproducible
// bit-for-bit even for non-associative carriers like floating point.
template <SemiringLike R>
Tensor<typename R::value_type> eval_einsum(const FormatString& format,
                                           const std::vector<Tensor<typename R::value_type>>& args,
                                           EvalStats* stats = nullptr) {
  std::vector<ArgInfo> infos;
  infos.reserve(args.size());
  for (const auto& t : args) infos.push_back(ArgInfo::known(t.shape()));
  ResolvedNode r = resolve_einsum_axes(format, infos);

  std::vector<IndexSymbol> scope;
  std::vector<std::int64_t> extent;
  scope.reserve(r.env.size());
  for (const auto& [sym, len] : r.env.map()) {
    scope.push_back(sym);
    extent.push_back(len);
  }

  // Positions in each string, expressed as offsets into the scope vector.
  auto slots_of = [&](const IndexString& I) {
    std::vector<std::size_t> slots;
    slots.reserve(I.size());
    for (const auto& s : I) {
      std::size_t k = 0;
      while (scope[k] != s) ++k;
      slots.push_back(k);
    }
    return slots;
  };
  std::vector<std::vector<std::size_t>> arg_slots;
  arg_slots.reserve(args.size());
  for (const auto& I : format.inputs) arg_slots.push_back(slots_of(I));
  std::vector<std::size_t> out_slots = slots_of(format.output);

  Tensor<typename R::value_type> out(r.output_shape, R::zero());
  std::vector<std::int64_t> assign(scope.size(), 0);
  std::vector<std::int64_t> pos;

  auto flat_through = [&](const Tensor<typename R::value_type>& t,
                          const std::vector<std::size_t>& slots) {
    pos.clear();
    for (auto k : slots) pos.push_back(assign[k]);
    return t.flat_index(pos);
  };

  while (true) {
    if (stats) ++stats->global_positions;
    typename R::value_type product = R::one();
    for (std::size_t i = 0; i < args.size(); ++i)
      product = R::mul(product, args[i].at_flat(flat_through(args[i], arg_slots[i])));
    std::size_t out_idx = flat_through(out, out_slots);
    out.at_flat(out_idx) = R::add(out.at_flat(out_idx), product);

    // odometer, last symbol fastest
    std::size_t j = scope.size();
    while (j > 0) {
      --j;
      if (++assign[j] < extent[j]) break;
      assign[j] = 0;
      if (j == 0) return out;
    }
    if (scope.empty()) return out;
  }
}

// Recursive bottom-up evaluation of a full expression tree.
template <SemiringLike R>
Tensor<typename R::value_type> eval(const Expr& e, const TensorBindings<R>& bindings = {},
                                    EvalStats* stats = nullptr) {
  using T = typename R::value_type;
  if (e.is_named()) {
    auto it = bindings.find(e.as_named().name);
    if (it == bindings.end())
      fail(Errc::unbound_name, "no binding for tensor '" + e.as_named().name + "'");
    return it->second;
  }
  if (e.is_scalar()) {
    auto v = R::parse(e.as_scalar().literal);
    if (!v)
      fail(Errc::invalid_literal, "literal '" + e.as_scalar().literal +
                                      "' is not an element of the " + std::string(R::name()) +
                                      " semiring");
    return Tensor<T>::scalar_of(*v);
  }
  if (e.is_ones()) return materialize_ones<R>(to_shape(e.as_ones().dims));
  if (e.is_delta()) {
    const auto& d = e.as_delta();
    return materialize_delta<R>(d.order, to_shape(d.dims));
  }
  if (e.is_aggregate()) {
    const auto& agg = e.as_aggregate();
    Tensor<T> acc = eval<R>(*agg.terms[0], bindings, stats);
    for (std::size_t i = 1; i < agg.terms.size(); ++i) {
      Tensor<T> t = eval<R>(*agg.terms[i], bindings, stats);
      if (t.shape() != acc.shape())
        fail(Errc::shape_mismatch,
             "aggregate terms differ in shape: " + acc.shape().str() + " vs " + t.shape().str());
      for (std::size_t k = 0; k < acc.entry_count(); ++k)
        acc.at_flat(k) = R::add(acc.at_flat(k), t.at_flat(k));
    }
    return acc;
  }

  const auto& node = e.as_einsum();
  const std::size_t n = node.args.size();
  std::vector<Tensor<T>> values(n);
  std::vector<ArgInfo> infos;
  infos.reserve(n);
  std::vector<bool> deferred(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const Expr& arg = *node.args[i];
    if (arg.is_delta()) {
      infos.push_back(ArgInfo::deferred(arg.as_delta()));
      deferred[i] = true;
    } else if (arg.is_ones()) {
      infos.push_back(ArgInfo::deferred(arg.as_ones()));
      deferred[i] = true;
    } else {
      values[i] = eval<R>(arg, bindings, stats);
      infos.push_back(ArgInfo::known(values[i].shape()));
    }
  }
  ResolvedNode r = resolve_einsum_axes(node.format, infos);
  for (std::size_t i = 0; i < n; ++i) {
    if (!deferred[i]) continue;
    const Expr& arg = *node.args[i];
    if (arg.is_delta()) {
      const Shape& full = r.arg_shapes[i];
      std::vector<std::int64_t> half(full.dims().begin(),
                                     full.dims().begin() + static_cast<std::ptrdiff_t>(arg.as_delta().order));
      values[i] = materialize_delta<R>(arg.as_delta().order, Shape(std::move(half)));
    } else {
      values[i] = materialize_ones<R>(r.arg_shapes[i]);
    }
  }
  return eval_einsum<R>(node.format, values, stats);
}

template <SemiringLike R>
Tensor<typename R::value_type> eval(const ExprPtr& e, const TensorBindings<R>& bindings = {},
                                    EvalStats* stats = nullptr) {
  return eval<R>(*e, bindings, stats);
}

}  // namespace einsum
