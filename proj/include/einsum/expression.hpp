#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "einsum/shape.hpp"
#include "einsum/symbols.hpp"

namespace einsum {

// Input index strings, one per argument, plus the output index string.
struct FormatString {
  std::vector<IndexString> inputs;
  IndexString output;

  std::size_t arity() const noexcept { return inputs.size(); }

  SymbolSet input_symbols() const {
    SymbolSet out;
    for (const auto& s : inputs) out.insert(s.begin(), s.end());
    return out;
  }

  // All symbols in scope at this node (inputs and output).
  SymbolSet symbols() const {
    SymbolSet out = input_symbols();
    out.insert(output.begin(), output.end());
    return out;
  }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (i) out += ",";
      out += inputs[i].str();
    }
    out += "->";
    out += output.str();
    return out;
  }

  friend bool operator==(const FormatString&, const FormatString&) = default;
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct NamedLeaf {
  std::string name;
  friend bool operator==(const NamedLeaf&, const NamedLeaf&) = default;
};

// Delta tensor of order 2*order; dims covers the first half, the second half
// repeats it. Unknown entries are inferred from the enclosing node.
struct DeltaLeaf {
  std::size_t order = 0;
  DimSpec dims;
  friend bool operator==(const DeltaLeaf&, const DeltaLeaf&) = default;
};

struct OnesLeaf {
  DimSpec dims;
  friend bool operator==(const OnesLeaf&, const OnesLeaf&) = default;
};

// Scalar constant kept as its literal token; the active semiring interprets it
// at evaluation time ("inf" is only meaningful tropically, for example).
struct ScalarLeaf {
  std::string literal;
  friend bool operator==(const ScalarLeaf&, const ScalarLeaf&) = default;
};

struct EinsumNode {
  FormatString format;
  std::vector<ExprPtr> args;
};

// Elementwise aggregation of equally shaped terms.
struct AggregateNode {
  std::vector<ExprPtr> terms;
};

class Expr {
 public:
  using Node = std::variant<NamedLeaf, DeltaLeaf, OnesLeaf, ScalarLeaf, EinsumNode, AggregateNode>;

  explicit Expr(Node node) : node_(std::move(node)) {}

  static ExprPtr named(std::string name) {
    return std::make_shared<const Expr>(Node{NamedLeaf{std::move(name)}});
  }

  static ExprPtr delta(std::size_t order, DimSpec dims) {
    if (dims.size() != order)
      fail(Errc::length_mismatch, "delta of order " + std::to_string(2 * order) + " declares " +
                                      std::to_string(dims.size()) + " axis lengths");
    return std::make_shared<const Expr>(Node{DeltaLeaf{order, std::move(dims)}});
  }

  static ExprPtr delta(std::size_t order) { return delta(order, unknown_dims(order)); }

  static ExprPtr delta(std::size_t order, const Shape& dims) {
    return delta(order, to_dimspec(dims));
  }

  static ExprPtr ones(DimSpec dims) {
    return std::make_shared<const Expr>(Node{OnesLeaf{std::move(dims)}});
  }

  static ExprPtr ones(const Shape& shape) { return ones(to_dimspec(shape)); }

  static ExprPtr scalar(std::string literal) {
    return std::make_shared<const Expr>(Node{ScalarLeaf{std::move(literal)}});
  }

  static ExprPtr einsum(FormatString format, std::vector<ExprPtr> args) {
    if (format.inputs.empty())
      fail(Errc::arity_mismatch, "einsum nodes take at least one argument");
    if (format.inputs.size() != args.size())
      fail(Errc::arity_mismatch, "format string lists " + std::to_string(format.inputs.size()) +
                                     " inputs but node has " + std::to_string(args.size()) +
                                     " arguments");
    for (const auto& a : args)
      if (!a) fail(Errc::arity_mismatch, "null einsum argument");
    return std::make_shared<const Expr>(Node{EinsumNode{std::move(format), std::move(args)}});
  }

  static ExprPtr aggregate(std::vector<ExprPtr> terms) {
    if (terms.empty()) fail(Errc::not_an_aggregate, "aggregates take at least one term");
    for (const auto& t : terms)
      if (!t) fail(Errc::not_an_aggregate, "null aggregate term");
    return std::make_shared<const Expr>(Node{AggregateNode{std::move(terms)}});
  }

  const Node& node() const noexcept { return node_; }

  bool is_named() const noexcept { return std::holds_alternative<NamedLeaf>(node_); }
  bool is_delta() const noexcept { return std::holds_alternative<DeltaLeaf>(node_); }
  bool is_ones() const noexcept { return std::holds_alternative<OnesLeaf>(node_); }
  bool is_scalar() const noexcept { return std::holds_alternative<ScalarLeaf>(node_); }
  bool is_einsum() const noexcept { return std::holds_alternative<EinsumNode>(node_); }
  bool is_aggregate() const noexcept { return std::holds_alternative<AggregateNode>(node_); }

  const NamedLeaf& as_named() const { return std::get<NamedLeaf>(node_); }
  const DeltaLeaf& as_delta() const { return std::get<DeltaLeaf>(node_); }
  const OnesLeaf& as_ones() const { return std::get<OnesLeaf>(node_); }
  const ScalarLeaf& as_scalar() const { return std::get<ScalarLeaf>(node_); }
  const EinsumNode& as_einsum() const { return std::get<EinsumNode>(node_); }
  const AggregateNode& as_aggregate() const { return std::get<AggregateNode>(node_); }

 private:
  Node node_;
};

// Deep structural equality.
bool operator==(const Expr& a, const Expr& b);

inline bool operator==(const EinsumNode& a, const EinsumNode& b) {
  if (a.format != b.format || a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!(*a.args[i] == *b.args[i])) return false;
  return true;
}

inline bool operator==(const AggregateNode& a, const AggregateNode& b) {
  if (a.terms.size() != b.terms.size()) return false;
  for (std::size_t i = 0; i < a.terms.size(); ++i)
    if (!(*a.terms[i] == *b.terms[i])) return false;
  return true;
}

inline bool operator==(const Expr& a, const Expr& b) { return a.node() == b.node(); }
inline bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

// Largest integer tag used anywhere in the expression, or -1 if none.
inline std::int64_t max_tag_used(const Expr& e) {
  std::int64_t best = -1;
  auto scan_string = [&](const IndexString& s) {
    for (const auto& sym : s)
      if (sym.is_tag()) best = std::max(best, sym.tag_value());
  };
  if (e.is_einsum()) {
    const auto& node = e.as_einsum();
    for (const auto& s : node.format.inputs) scan_string(s);
    scan_string(node.format.output);
    for (const auto& a : node.args) best = std::max(best, max_tag_used(*a));
  } else if (e.is_aggregate()) {
    for (const auto& t : e.as_aggregate().terms) best = std::max(best, max_tag_used(*t));
  }
  return best;
}

// Generates collision-free symbols by drawing tags above everything in use.
class FreshSymbols {
 public:
  explicit FreshSymbols(std::int64_t first_tag = 0) : next_(std::max<std::int64_t>(first_tag, 0)) {}
  explicit FreshSymbols(const Expr& scope) : next_(max_tag_used(scope) + 1) {}

  IndexSymbol next() { return IndexSymbol::tag(next_++); }

 private:
  std::int64_t next_;
};

}  // namespace einsum
