#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "einsum/expression.hpp"

namespace einsum {

// Per-einsum-node symbol-to-axis-length assignment. The scope of an index
// symbol is a single einsum node, so environments never cross node boundaries.
class AxisEnvironment {
 public:
  void bind(IndexSymbol s, std::int64_t len) {
    auto [it, inserted] = d_.emplace(s, len);
    if (!inserted && it->second != len)
      fail(Errc::axis_mismatch, "axis mismatch for symbol " + s.str() + ": " +
                                    std::to_string(it->second) + " vs " + std::to_string(len));
  }

  std::optional<std::int64_t> lookup(IndexSymbol s) const {
    auto it = d_.find(s);
    if (it == d_.end()) return std::nullopt;
    return it->second;
  }

  std::int64_t at(IndexSymbol s) const {
    auto v = lookup(s);
    if (!v) fail(Errc::unassigned_symbol, "no axis length for symbol " + s.str());
    return *v;
  }

  bool contains(IndexSymbol s) const { return d_.count(s) != 0; }
  std::size_t size() const noexcept { return d_.size(); }
  const std::map<IndexSymbol, std::int64_t>& map() const noexcept { return d_; }

  friend bool operator==(const AxisEnvironment&, const AxisEnvironment&) = default;

 private:
  std::map<IndexSymbol, std::int64_t> d_;
};

using ShapeBindings = std::map<std::string, Shape>;

// What is known about one argument before axis resolution. Delta and ones
// leaves are deferred so that axis lengths they omit can be filled in from the
// symbols they share with the other operands.
struct ArgInfo {
  std::optional<Shape> shape;
  bool wildcard = false;  // unbound name in lenient validation: matches anything
  const DeltaLeaf* delta = nullptr;
  const OnesLeaf* ones = nullptr;

  static ArgInfo known(Shape s) { return ArgInfo{std::move(s), false, nullptr, nullptr}; }
  static ArgInfo any() { return ArgInfo{std::nullopt, true, nullptr, nullptr}; }
  static ArgInfo deferred(const DeltaLeaf& d) { return ArgInfo{std::nullopt, false, &d, nullptr}; }
  static ArgInfo deferred(const OnesLeaf& o) { return ArgInfo{std::nullopt, false, nullptr, &o}; }
};

struct ResolvedNode {
  AxisEnvironment env;
  std::vector<Shape> arg_shapes;  // concrete; wildcard slots hold a best-effort shape
  Shape output_shape;
  bool output_known = true;  // false only in lenient mode with wildcard gaps
};

// Checks arity against index-string lengths, unifies axis lengths across every
// occurrence of each symbol, resolves omitted delta/ones axis lengths, and
// checks that every output symbol is bound by some input. Throws on violation.
inline ResolvedNode resolve_einsum_axes(const FormatString& format,
                                        const std::vector<ArgInfo>& args) {
  if (format.arity() != args.size())
    fail(Errc::arity_mismatch, "format string lists " + std::to_string(format.arity()) +
                                   " inputs but node has " + std::to_string(args.size()) +
                                   " arguments");
  ResolvedNode out;
  const std::size_t n = args.size();

  // Known shapes and declared leaf dims seed the environment.
  for (std::size_t i = 0; i < n; ++i) {
    const IndexString& is = format.inputs[i];
    const ArgInfo& a = args[i];
    if (a.shape) {
      if (is.size() != a.shape->order())
        fail(Errc::arity_mismatch, "index string '" + is.str() + "' has length " +
                                       std::to_string(is.size()) + " but argument " +
                                       std::to_string(i + 1) + " has order " +
                                       std::to_string(a.shape->order()));
      for (std::size_t j = 0; j < is.size(); ++j) out.env.bind(is[j], a.shape->dim(j));
    } else if (a.delta) {
      if (is.size() != 2 * a.delta->order)
        fail(Errc::arity_mismatch, "index string '" + is.str() + "' has length " +
                                       std::to_string(is.size()) + " but delta argument " +
                                       std::to_string(i + 1) + " has order " +
                                       std::to_string(2 * a.delta->order));
      for (std::size_t j = 0; j < a.delta->order; ++j)
        if (a.delta->dims[j]) {
          out.env.bind(is[j], *a.delta->dims[j]);
          out.env.bind(is[a.delta->order + j], *a.delta->dims[j]);
        }
    } else if (a.ones) {
      if (is.size() != a.ones->dims.size())
        fail(Errc::arity_mismatch, "index string '" + is.str() + "' has length " +
                                       std::to_string(is.size()) + " but ones argument " +
                                       std::to_string(i + 1) + " has order " +
                                       std::to_string(a.ones->dims.size()));
      for (std::size_t j = 0; j < is.size(); ++j)
        if (a.ones->dims[j]) out.env.bind(is[j], *a.ones->dims[j]);
    }
    // wildcard: contributes no constraints
  }

  // Fixpoint: a delta's axis j and axis order+j share one length, so a length
  // learned for one symbol can propagate through chains of deferred leaves.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const ArgInfo& a = args[i];
      if (!a.delta) continue;
      const IndexString& is = format.inputs[i];
      for (std::size_t j = 0; j < a.delta->order; ++j) {
        auto lhs = out.env.lookup(is[j]);
        auto rhs = out.env.lookup(is[a.delta->order + j]);
        if (lhs && !rhs) {
          out.env.bind(is[a.delta->order + j], *lhs);
          changed = true;
        } else if (rhs && !lhs) {
          out.env.bind(is[j], *rhs);
          changed = true;
        }
      }
    }
  }

  // Constraint III: every output symbol must appear in some input string.
  SymbolSet bound = format.input_symbols();
  for (const auto& s : format.output)
    if (!bound.count(s))
      fail(Errc::constraint_violation,
           "constraint III: output symbol " + s.str() + " does not appear in any input string");

  bool any_wildcard = false;
  out.arg_shapes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const IndexString& is = format.inputs[i];
    const ArgInfo& a = args[i];
    if (a.shape) {
      out.arg_shapes.push_back(*a.shape);
      continue;
    }
    std::vector<std::int64_t> dims;
    dims.reserve(is.size());
    bool complete = true;
    for (std::size_t j = 0; j < is.size(); ++j) {
      auto v = out.env.lookup(is[j]);
      if (!v) {
        if (a.wildcard) {
          complete = false;
          break;
        }
        fail(Errc::underdetermined_dims,
             "axis length for symbol " + is[j].str() + " in argument " + std::to_string(i + 1) +
                 " is neither declared nor inferable");
      }
      dims.push_back(*v);
    }
    if (!complete) {
      any_wildcard = true;
      out.arg_shapes.push_back(Shape());
    } else {
      out.arg_shapes.push_back(Shape(std::move(dims)));
    }
  }

  std::vector<std::int64_t> odims;
  odims.reserve(format.output.size());
  for (const auto& s : format.output) {
    auto v = out.env.lookup(s);
    if (!v) {
      if (any_wildcard) {
        out.output_known = false;
        break;
      }
      fail(Errc::underdetermined_dims, "axis length for output symbol " + s.str() + " unknown");
    }
    odims.push_back(*v);
  }
  if (out.output_known) out.output_shape = Shape(std::move(odims));
  return out;
}

struct Violation {
  Errc code;
  std::string message;
  const Expr* where = nullptr;
};

struct ValidityReport {
  std::vector<Violation> violations;
  bool valid() const noexcept { return violations.empty(); }
};

namespace detail {

struct Analyzer {
  const ShapeBindings* bindings;
  bool lenient;            // unbound names are wildcards instead of violations
  ValidityReport* report;  // when set, problems are recorded instead of thrown

  void problem(Errc code, std::string message, const Expr* where) {
    if (report)
      report->violations.push_back({code, std::move(message), where});
    else
      throw EinsumError(code, std::move(message));
  }

  // Returns the inferred shape, or nullopt when a recorded problem (or a
  // wildcard name in lenient mode) leaves it unknown.
  std::optional<Shape> shape(const Expr& e) {
    if (e.is_named()) {
      if (bindings) {
        auto it = bindings->find(e.as_named().name);
        if (it != bindings->end()) return it->second;
      }
      if (!lenient)
        problem(Errc::unbound_name, "no binding for tensor '" + e.as_named().name + "'", &e);
      return std::nullopt;
    }
    if (e.is_scalar()) return Shape::scalar();
    if (e.is_ones()) {
      if (!fully_known(e.as_ones().dims)) {
        problem(Errc::underdetermined_dims,
                "ones tensor outside an einsum node needs explicit axis lengths", &e);
        return std::nullopt;
      }
      return to_shape(e.as_ones().dims);
    }
    if (e.is_delta()) {
      const auto& d = e.as_delta();
      if (!fully_known(d.dims)) {
        problem(Errc::underdetermined_dims,
                "delta tensor outside an einsum node needs explicit axis lengths", &e);
        return std::nullopt;
      }
      Shape half = to_shape(d.dims);
      return concat(half, half);
    }
    if (e.is_aggregate()) {
      const auto& agg = e.as_aggregate();
      std::optional<Shape> common;
      for (const auto& term : agg.terms) {
        auto s = shape(*term);
        if (!s) continue;
        if (!common) {
          common = s;
        } else if (*common != *s) {
          problem(Errc::shape_mismatch, "aggregate terms differ in shape: " + common->str() +
                                            " vs " + s->str(),
                  &e);
          return std::nullopt;
        }
      }
      return common;
    }
    return einsum_shape(e);
  }

  std::optional<Shape> einsum_shape(const Expr& e) {
    const auto& node = e.as_einsum();
    std::vector<ArgInfo> infos;
    infos.reserve(node.args.size());
    for (const auto& arg : node.args) {
      if (arg->is_delta()) {
        infos.push_back(ArgInfo::deferred(arg->as_delta()));
      } else if (arg->is_ones()) {
        infos.push_back(ArgInfo::deferred(arg->as_ones()));
      } else {
        auto s = shape(*arg);
        infos.push_back(s ? ArgInfo::known(std::move(*s)) : ArgInfo::any());
      }
    }
    try {
      ResolvedNode r = resolve_einsum_axes(node.format, infos);
      if (!r.output_known) return std::nullopt;
      return r.output_shape;
    } catch (const EinsumError& err) {
      problem(err.code(), err.what(), &e);
      return std::nullopt;
    }
  }
};

}  // namespace detail

// Lists every violation of the validity constraints; an empty report means the
// expression is a valid einsum expression under the given bindings.
inline ValidityReport validate(const Expr& e, const ShapeBindings& bindings) {
  ValidityReport report;
  detail::Analyzer a{&bindings, false, &report};
  a.shape(e);
  return report;
}

// Structural validation without shape bindings: unbound names match any shape.
inline ValidityReport validate_structure(const Expr& e) {
  ValidityReport report;
  detail::Analyzer a{nullptr, true, &report};
  a.shape(e);
  return report;
}

// Shape of the expression under the bindings; throws on any violation.
inline Shape inferred_shape(const Expr& e, const ShapeBindings& bindings) {
  detail::Analyzer a{&bindings, false, nullptr};
  auto s = a.shape(e);
  if (!s) fail(Errc::underdetermined_dims, "expression shape is underdetermined");
  return *s;
}

// Axis environment of the root einsum node; throws on any violation.
inline AxisEnvironment infer_axes(const Expr& e, const ShapeBindings& bindings) {
  if (!e.is_einsum())
    fail(Errc::precondition_violated, "axis inference expects an einsum node at the root");
  const auto& node = e.as_einsum();
  detail::Analyzer a{&bindings, false, nullptr};
  std::vector<ArgInfo> infos;
  infos.reserve(node.args.size());
  for (const auto& arg : node.args) {
    if (arg->is_delta()) {
      infos.push_back(ArgInfo::deferred(arg->as_delta()));
    } else if (arg->is_ones()) {
      infos.push_back(ArgInfo::deferred(arg->as_ones()));
    } else {
      auto s = a.shape(*arg);
      if (!s) fail(Errc::underdetermined_dims, "argument shape is underdetermined");
      infos.push_back(ArgInfo::known(std::move(*s)));
    }
  }
  return resolve_einsum_axes(node.format, infos).env;
}

}  // namespace einsum
