#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "einsum/expression.hpp"
#include "einsum/semiring.hpp"

namespace einsum {

namespace detail {

inline const EinsumNode& require_einsum(const Expr& e, const char* who) {
  if (!e.is_einsum())
    fail(Errc::precondition_violated, std::string(who) + " expects an einsum node");
  return e.as_einsum();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Symbol maps

// Mapping from source symbols to target symbols; symbols without an explicit
// entry map to themselves. apply on an index string is the pointwise extension.
class SymbolMap {
 public:
  SymbolMap() = default;

  void set(IndexSymbol from, IndexSymbol to) { m_.insert_or_assign(from, to); }

  IndexSymbol apply(IndexSymbol s) const {
    auto it = m_.find(s);
    return it == m_.end() ? s : it->second;
  }

  IndexString apply(const IndexString& I) const {
    std::vector<IndexSymbol> out;
    out.reserve(I.size());
    for (const auto& s : I) out.push_back(apply(s));
    return IndexString(std::move(out));
  }

  const std::map<IndexSymbol, IndexSymbol>& mapping() const noexcept { return m_; }

 private:
  std::map<IndexSymbol, IndexSymbol> m_;
};

// ---------------------------------------------------------------------------
// Commutativity

// perm is 0-based, new-to-old: result argument i is node argument perm[i].
// Index strings and arguments move in lockstep; the output string is fixed.
inline ExprPtr permute_args(const Expr& e, const std::vector<std::size_t>& perm) {
  const auto& node = detail::require_einsum(e, "permute_args");
  const std::size_t n = node.args.size();
  if (perm.size() != n) fail(Errc::invalid_permutation, "permutation length differs from arity");
  std::vector<bool> seen(n, false);
  for (auto p : perm) {
    if (p >= n || seen[p]) fail(Errc::invalid_permutation, "not a bijection on the arguments");
    seen[p] = true;
  }
  FormatString f;
  std::vector<ExprPtr> args;
  f.output = node.format.output;
  for (auto p : perm) {
    f.inputs.push_back(node.format.inputs[p]);
    args.push_back(node.args[p]);
  }
  return Expr::einsum(std::move(f), std::move(args));
}

// ---------------------------------------------------------------------------
// Restricted nesting and denesting

// Flattens a nested einsum whose first argument is an einsum node with an
// output string identical to the enclosing input string, provided inner and
// outer share no symbols beyond that string. Inner operands come first.
inline ExprPtr restricted_denest(const Expr& e) {
  const auto& outer = detail::require_einsum(e, "restricted_denest");
  if (!outer.args[0]->is_einsum())
    fail(Errc::not_nested, "restricted_denest: slot 1 is not an einsum node");
  const auto& inner = outer.args[0]->as_einsum();
  const IndexString& iu = inner.format.output;
  const IndexString& iu_hat = outer.format.inputs[0];
  if (iu != iu_hat)
    fail(Errc::precondition_violated,
         "string-mismatch: inner output '" + iu.str() + "' differs from enclosing input '" +
             iu_hat.str() + "'");
  SymbolSet inner_syms = inner.format.symbols();
  SymbolSet outer_syms = outer.format.symbols();
  SymbolSet allowed = sigma(iu);
  for (const auto& s : set_intersection(inner_syms, outer_syms))
    if (!allowed.count(s))
      fail(Errc::precondition_violated,
           "symbol-collision: symbol " + s.str() + " is shared outside the handoff string");

  FormatString f;
  std::vector<ExprPtr> args;
  f.output = outer.format.output;
  f.inputs = inner.format.inputs;
  args = inner.args;
  for (std::size_t i = 1; i < outer.args.size(); ++i) {
    f.inputs.push_back(outer.format.inputs[i]);
    args.push_back(outer.args[i]);
  }
  return Expr::einsum(std::move(f), std::move(args));
}

// Groups a subset of operands (0-based positions) into an inner einsum with
// output string inner_output. The inner node lands at the smallest grouped
// position; the remaining operands keep their relative order.
inline ExprPtr restricted_nest(const Expr& e, std::vector<std::size_t> group,
                               const IndexString& inner_output) {
  const auto& node = detail::require_einsum(e, "restricted_nest");
  const std::size_t n = node.args.size();
  std::sort(group.begin(), group.end());
  group.erase(std::unique(group.begin(), group.end()), group.end());
  if (group.empty()) fail(Errc::invalid_grouping, "empty group");
  if (group.back() >= n) fail(Errc::invalid_grouping, "group position out of range");

  std::vector<bool> grouped(n, false);
  for (auto g : group) grouped[g] = true;

  SymbolSet grouped_syms, rest_syms;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = sigma(node.format.inputs[i]);
    (grouped[i] ? grouped_syms : rest_syms).insert(s.begin(), s.end());
  }
  SymbolSet out_syms = sigma(node.format.output);
  SymbolSet iu = sigma(inner_output);

  // inner_output must carry every grouped symbol the rest of the expression
  // still needs: symbols shared with the ungrouped operands or in the output.
  SymbolSet missing;
  for (const auto& s : grouped_syms)
    if ((rest_syms.count(s) || out_syms.count(s)) && !iu.count(s)) missing.insert(s);
  if (!missing.empty()) {
    std::string list;
    for (const auto& s : missing) list += (list.empty() ? "" : ", ") + s.str();
    fail(Errc::invalid_grouping, "inner output is missing required symbols: " + list);
  }
  for (const auto& s : iu)
    if (!grouped_syms.count(s))
      fail(Errc::invalid_grouping,
           "inner output symbol " + s.str() + " does not occur in the grouped operands");

  FormatString inner_format;
  std::vector<ExprPtr> inner_args;
  inner_format.output = inner_output;
  for (auto g : group) {
    inner_format.inputs.push_back(node.format.inputs[g]);
    inner_args.push_back(node.args[g]);
  }
  ExprPtr inner = Expr::einsum(std::move(inner_format), std::move(inner_args));

  FormatString f;
  std::vector<ExprPtr> args;
  f.output = node.format.output;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == group.front()) {
      f.inputs.push_back(inner_output);
      args.push_back(inner);
    }
    if (!grouped[i]) {
      f.inputs.push_back(node.format.inputs[i]);
      args.push_back(node.args[i]);
    }
  }
  return Expr::einsum(std::move(f), std::move(args));
}

// ---------------------------------------------------------------------------
// Index symbol graph and general denesting

// 3d vertices u_i, v_i, x_i for a handoff of length d: u_i carries the i-th
// inner output symbol, v_i the i-th enclosing input symbol, x_i is unlabeled.
// Edges join equal labels within each side and each spine u_i-x_i, v_i-x_i;
// connected components are exactly the symbol groups a sound map must respect.
class IndexSymbolGraph {
 public:
  enum class VertexKind { u, v, x };
  struct Vertex {
    VertexKind kind;
    std::size_t index;
    friend bool operator==(const Vertex&, const Vertex&) = default;
  };
  struct Component {
    std::vector<std::size_t> u, v, x;
    SymbolSet labels;
  };

  IndexSymbolGraph(IndexString inner_output, IndexString outer_slot)
      : a_(std::move(inner_output)), b_(std::move(outer_slot)) {
    if (a_.size() != b_.size())
      fail(Errc::length_mismatch, "inner output '" + a_.str() + "' and enclosing input '" +
                                      b_.str() + "' differ in length");
    if (!set_intersection(sigma(a_), sigma(b_)).empty())
      fail(Errc::precondition_violated,
           "inner and outer strings share symbols; rename one side first");
  }

  std::size_t length() const noexcept { return a_.size(); }
  const IndexString& inner_labels() const noexcept { return a_; }
  const IndexString& outer_labels() const noexcept { return b_; }

  std::vector<std::pair<Vertex, Vertex>> edges() const {
    std::vector<std::pair<Vertex, Vertex>> out;
    const std::size_t d = length();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) {
        if (a_[i] == a_[j]) out.push_back({{VertexKind::u, i}, {VertexKind::u, j}});
        if (b_[i] == b_[j]) out.push_back({{VertexKind::v, i}, {VertexKind::v, j}});
      }
    for (std::size_t i = 0; i < d; ++i) {
      out.push_back({{VertexKind::u, i}, {VertexKind::x, i}});
      out.push_back({{VertexKind::v, i}, {VertexKind::x, i}});
    }
    return out;
  }

  // Union-find over the 3d vertices; components come out ordered by their
  // smallest x index, which keeps fresh-symbol assignment deterministic.
  std::vector<Component> components() const {
    const std::size_t d = length();
    std::vector<std::size_t> parent(3 * d);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t v) {
      while (parent[v] != v) {
        parent[v] = parent[parent[v]];
        v = parent[v];
      }
      return v;
    };
    auto unite = [&](std::size_t p, std::size_t q) { parent[find(p)] = find(q); };

    auto u_id = [&](std::size_t i) { return i; };
    auto v_id = [&](std::size_t i) { return d + i; };
    auto x_id = [&](std::size_t i) { return 2 * d + i; };

    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) {
        if (a_[i] == a_[j]) unite(u_id(i), u_id(j));
        if (b_[i] == b_[j]) unite(v_id(i), v_id(j));
      }
    for (std::size_t i = 0; i < d; ++i) {
      unite(u_id(i), x_id(i));
      unite(v_id(i), x_id(i));
    }

    std::map<std::size_t, Component> by_root;
    std::vector<std::size_t> order;  // roots in order of smallest x index
    for (std::size_t i = 0; i < d; ++i) {
      std::size_t root = find(x_id(i));
      if (!by_root.count(root)) order.push_back(root);
      by_root[root].x.push_back(i);
    }
    for (std::size_t i = 0; i < d; ++i) {
      auto& cu = by_root[find(u_id(i))];
      cu.u.push_back(i);
      cu.labels.insert(a_[i]);
      auto& cv = by_root[find(v_id(i))];
      cv.v.push_back(i);
      cv.labels.insert(b_[i]);
    }
    std::vector<Component> out;
    out.reserve(order.size());
    for (auto root : order) out.push_back(std::move(by_root[root]));
    return out;
  }

 private:
  IndexString a_, b_;
};

namespace detail {

// First argument that is an einsum node, if any.
inline std::optional<std::size_t> first_einsum_arg(const EinsumNode& node) {
  for (std::size_t i = 0; i < node.args.size(); ++i)
    if (node.args[i]->is_einsum()) return i;
  return std::nullopt;
}

}  // namespace detail

// Graph for the nested argument of an einsum node (the first einsum argument).
// Inner and outer must not share symbols; callers rename beforehand otherwise.
inline IndexSymbolGraph build_index_symbol_graph(const Expr& e) {
  const auto& outer = detail::require_einsum(e, "build_index_symbol_graph");
  auto slot = detail::first_einsum_arg(outer);
  if (!slot) fail(Errc::not_nested, "no nested einsum argument");
  const auto& inner = outer.args[*slot]->as_einsum();
  SymbolSet shared = set_intersection(inner.format.symbols(), outer.format.symbols());
  if (!shared.empty())
    fail(Errc::precondition_violated,
         "inner and outer expressions share symbols; rename one side first");
  return IndexSymbolGraph(inner.format.output, outer.format.inputs[*slot]);
}

// One fresh symbol per component; every label in a component maps to it.
// Symbols outside the graph are left to the map's identity default.
inline SymbolMap derive_symbol_map(const IndexSymbolGraph& graph, FreshSymbols& fresh) {
  SymbolMap m;
  for (const auto& comp : graph.components()) {
    if (comp.labels.empty()) continue;
    IndexSymbol target = fresh.next();
    for (const auto& s : comp.labels) m.set(s, target);
  }
  return m;
}

// Alpha-renames the node's format string; argument subtrees keep their own
// scopes. Targets must be fresh for the node and the map injective.
inline ExprPtr rename_symbols(const Expr& e, const SymbolMap& map) {
  const auto& node = detail::require_einsum(e, "rename_symbols");
  SymbolSet in_use = node.format.symbols();
  std::set<IndexSymbol> targets;
  for (const auto& [from, to] : map.mapping()) {
    if (!targets.insert(to).second)
      fail(Errc::target_in_use, "two symbols map to " + to.str() + "; renaming must be injective");
    if (from != to && in_use.count(to))
      fail(Errc::target_in_use, "target symbol " + to.str() + " is already in use");
  }
  FormatString f;
  f.output = map.apply(node.format.output);
  for (const auto& in : node.format.inputs) f.inputs.push_back(map.apply(in));
  return Expr::einsum(std::move(f), node.args);
}

// General denesting of the einsum argument at `slot`, in place: the inner
// operands are spliced where the nested node sat, so operand order survives.
// Symbol collisions between inner and outer are removed by alpha-renaming the
// inner node before the graph is built.
inline ExprPtr general_denest_at(const Expr& e, std::size_t slot) {
  const auto& outer = detail::require_einsum(e, "general_denest");
  if (slot >= outer.args.size() || !outer.args[slot]->is_einsum())
    fail(Errc::not_nested, "argument " + std::to_string(slot + 1) + " is not an einsum node");

  FreshSymbols fresh(e);
  ExprPtr inner_expr = outer.args[slot];
  SymbolSet collisions =
      set_intersection(inner_expr->as_einsum().format.symbols(), outer.format.symbols());
  if (!collisions.empty()) {
    SymbolMap rename;
    for (const auto& s : collisions) rename.set(s, fresh.next());
    inner_expr = rename_symbols(*inner_expr, rename);
  }
  const auto& inner = inner_expr->as_einsum();

  IndexSymbolGraph graph(inner.format.output, outer.format.inputs[slot]);
  SymbolMap nu = derive_symbol_map(graph, fresh);

  FormatString f;
  std::vector<ExprPtr> args;
  f.output = nu.apply(outer.format.output);
  for (std::size_t i = 0; i < outer.args.size(); ++i) {
    if (i == slot) {
      for (std::size_t j = 0; j < inner.args.size(); ++j) {
        f.inputs.push_back(nu.apply(inner.format.inputs[j]));
        args.push_back(inner.args[j]);
      }
    } else {
      f.inputs.push_back(nu.apply(outer.format.inputs[i]));
      args.push_back(outer.args[i]);
    }
  }
  return Expr::einsum(std::move(f), std::move(args));
}

// Denests the first einsum argument.
inline ExprPtr general_denest(const Expr& e) {
  const auto& outer = detail::require_einsum(e, "general_denest");
  auto slot = detail::first_einsum_arg(outer);
  if (!slot) fail(Errc::not_nested, "no nested einsum argument");
  return general_denest_at(e, *slot);
}

// Flattens fully, innermost first: every subtree is flattened before its
// enclosing node absorbs it.
inline ExprPtr denest_fixpoint(const ExprPtr& e) {
  if (e->is_aggregate()) {
    std::vector<ExprPtr> terms;
    for (const auto& t : e->as_aggregate().terms) terms.push_back(denest_fixpoint(t));
    return Expr::aggregate(std::move(terms));
  }
  if (!e->is_einsum()) return e;
  const auto& node = e->as_einsum();
  std::vector<ExprPtr> args;
  args.reserve(node.args.size());
  for (const auto& a : node.args) args.push_back(denest_fixpoint(a));
  ExprPtr out = Expr::einsum(node.format, std::move(args));
  while (detail::first_einsum_arg(out->as_einsum())) out = general_denest(*out);
  return out;
}

// ---------------------------------------------------------------------------
// Delta split and delta merge

// One selected occurrence of a symbol: an input string position or an output
// string position.
struct Occurrence {
  bool in_output = false;
  std::size_t input = 0;  // ignored when in_output
  std::size_t position = 0;

  static Occurrence at_input(std::size_t input, std::size_t position) {
    return {false, input, position};
  }
  static Occurrence at_output(std::size_t position) { return {true, 0, position}; }

  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

// Prepends a unit-matrix operand with index string (a, b) and replaces the
// selected occurrences of a with the fresh symbol b.
inline ExprPtr delta_split(const Expr& e, IndexSymbol a, std::span<const Occurrence> occurrences,
                           IndexSymbol b) {
  const auto& node = detail::require_einsum(e, "delta_split");
  bool a_in_inputs = false;
  for (const auto& in : node.format.inputs)
    if (in.contains(a)) a_in_inputs = true;
  if (!a_in_inputs)
    fail(Errc::symbol_absent, "symbol " + a.str() + " does not appear in any input string");
  if (node.format.symbols().count(b))
    fail(Errc::symbol_not_fresh, "symbol " + b.str() + " already appears in the expression");
  if (occurrences.empty())
    fail(Errc::precondition_violated, "at least one occurrence must be selected");

  std::vector<std::vector<IndexSymbol>> inputs;
  for (const auto& in : node.format.inputs) inputs.push_back(in.symbols());
  std::vector<IndexSymbol> output = node.format.output.symbols();

  for (const auto& occ : occurrences) {
    std::vector<IndexSymbol>* str;
    if (occ.in_output) {
      str = &output;
    } else {
      if (occ.input >= inputs.size())
        fail(Errc::precondition_violated, "occurrence refers to a missing input string");
      str = &inputs[occ.input];
    }
    if (occ.position >= str->size() || (*str)[occ.position] != a)
      fail(Errc::precondition_violated,
           "occurrence does not point at symbol " + a.str());
    (*str)[occ.position] = b;
  }

  FormatString f;
  f.inputs.push_back(IndexString({a, b}));
  for (auto& in : inputs) f.inputs.push_back(IndexString(std::move(in)));
  f.output = IndexString(std::move(output));
  std::vector<ExprPtr> args;
  args.push_back(Expr::delta(1));
  args.insert(args.end(), node.args.begin(), node.args.end());
  return Expr::einsum(std::move(f), std::move(args));
}

// Removes the unit-matrix operand at delta_slot and merges its two symbols,
// replacing the discarded one with `keep` everywhere in the node.
inline ExprPtr delta_merge(const Expr& e, std::size_t delta_slot, IndexSymbol keep) {
  const auto& node = detail::require_einsum(e, "delta_merge");
  if (delta_slot >= node.args.size())
    fail(Errc::not_a_delta, "no operand at position " + std::to_string(delta_slot + 1));
  const Expr& arg = *node.args[delta_slot];
  if (!arg.is_delta() || arg.as_delta().order != 1)
    fail(Errc::not_a_delta, "operand is not an order-2 delta tensor");
  const IndexString& ds = node.format.inputs[delta_slot];
  if (ds.size() != 2) fail(Errc::not_a_delta, "delta operand is not annotated with two symbols");
  IndexSymbol a = ds[0], b = ds[1];
  if (a == b)
    fail(Errc::degenerate_delta, "delta annotated (" + a.str() + ", " + a.str() +
                                     ") acts as a filter and cannot be merged");
  if (keep != a && keep != b)
    fail(Errc::symbol_absent, "kept symbol " + keep.str() + " is not on the delta");
  if (node.args.size() < 2)
    fail(Errc::precondition_violated, "merging the only operand would leave an empty einsum");
  IndexSymbol discard = (keep == a) ? b : a;

  SymbolMap merge;
  merge.set(discard, keep);
  FormatString f;
  std::vector<ExprPtr> args;
  f.output = merge.apply(node.format.output);
  for (std::size_t i = 0; i < node.args.size(); ++i) {
    if (i == delta_slot) continue;
    f.inputs.push_back(merge.apply(node.format.inputs[i]));
    args.push_back(node.args[i]);
  }
  SymbolSet bound;
  for (const auto& in : f.inputs) bound.insert(in.begin(), in.end());
  for (const auto& s : f.output)
    if (!bound.count(s))
      fail(Errc::precondition_violated,
           "merging would leave output symbol " + s.str() + " unbound");
  return Expr::einsum(std::move(f), std::move(args));
}

// ---------------------------------------------------------------------------
// Distributivity

// Pushes the einsum over an aggregate operand: one copy of the node per term.
inline ExprPtr distribute(const Expr& e, std::size_t slot) {
  const auto& node = detail::require_einsum(e, "distribute");
  if (slot >= node.args.size() || !node.args[slot]->is_aggregate())
    fail(Errc::not_an_aggregate, "operand " + std::to_string(slot + 1) + " is not an aggregate");
  const auto& agg = node.args[slot]->as_aggregate();
  if (agg.terms.size() == 1) {
    std::vector<ExprPtr> args = node.args;
    args[slot] = agg.terms[0];
    return Expr::einsum(node.format, std::move(args));
  }
  std::vector<ExprPtr> copies;
  copies.reserve(agg.terms.size());
  for (const auto& term : agg.terms) {
    std::vector<ExprPtr> args = node.args;
    args[slot] = term;
    copies.push_back(Expr::einsum(node.format, std::move(args)));
  }
  return Expr::aggregate(std::move(copies));
}

inline ExprPtr distribute(const Expr& e) {
  const auto& node = detail::require_einsum(e, "distribute");
  for (std::size_t i = 0; i < node.args.size(); ++i)
    if (node.args[i]->is_aggregate()) return distribute(e, i);
  fail(Errc::not_an_aggregate, "no aggregate operand to distribute over");
}

// Inverse of distribute: aggregate of einsum nodes that are identical except
// in exactly one operand slot collapses to one einsum over an aggregate.
inline ExprPtr factor(const Expr& e) {
  if (!e.is_aggregate()) fail(Errc::not_factorable, "not an aggregate");
  const auto& agg = e.as_aggregate();
  for (const auto& t : agg.terms)
    if (!t->is_einsum()) fail(Errc::not_factorable, "aggregate term is not an einsum node");
  const auto& first = agg.terms[0]->as_einsum();
  for (const auto& t : agg.terms)
    if (t->as_einsum().format != first.format)
      fail(Errc::not_factorable, "terms have different format strings");

  std::vector<std::size_t> differing;
  for (std::size_t k = 0; k < first.args.size(); ++k)
    for (std::size_t t = 1; t < agg.terms.size(); ++t)
      if (!(*agg.terms[t]->as_einsum().args[k] == *first.args[k])) {
        differing.push_back(k);
        break;
      }
  if (differing.size() != 1)
    fail(Errc::not_factorable,
         "terms differ in " + std::to_string(differing.size()) + " operand slots, need exactly 1");

  std::size_t k = differing[0];
  std::vector<ExprPtr> terms;
  terms.reserve(agg.terms.size());
  for (const auto& t : agg.terms) terms.push_back(t->as_einsum().args[k]);
  std::vector<ExprPtr> args = first.args;
  args[k] = Expr::aggregate(std::move(terms));
  return Expr::einsum(first.format, std::move(args));
}

// ---------------------------------------------------------------------------
// Auxiliary simplification rules

// #(I -> I; T) with pairwise distinct symbols is T itself. Duplicate symbols
// are not an identity: positions off the generalized diagonal aggregate over
// nothing and come out zero.
inline ExprPtr eliminate_identity(const Expr& e) {
  const auto& node = detail::require_einsum(e, "eliminate_identity");
  if (node.args.size() != 1) fail(Errc::not_identity, "multiple-args: identity takes one operand");
  if (node.format.inputs[0] != node.format.output)
    fail(Errc::not_identity, "string-mismatch: input and output strings differ");
  if (sigma(node.format.output).size() != node.format.output.size())
    fail(Errc::not_identity, "duplicate-symbols: index string repeats a symbol");
  return node.args[0];
}

// Removes an all-ones operand whose symbols all occur in the rest of the node.
inline ExprPtr drop_neutral_ones(const Expr& e, std::size_t slot) {
  const auto& node = detail::require_einsum(e, "drop_neutral_ones");
  if (slot >= node.args.size() || !node.args[slot]->is_ones())
    fail(Errc::precondition_violated,
         "operand " + std::to_string(slot + 1) + " is not an all-ones tensor");
  if (node.args.size() < 2)
    fail(Errc::would_change_semantics, "dropping the only operand would leave an empty einsum");
  SymbolSet rest;
  for (std::size_t i = 0; i < node.args.size(); ++i)
    if (i != slot) {
      const auto& s = sigma(node.format.inputs[i]);
      rest.insert(s.begin(), s.end());
    }
  for (const auto& s : sigma(node.format.inputs[slot]))
    if (!rest.count(s))
      fail(Errc::would_change_semantics,
           "symbol " + s.str() + " is bound only by the ones operand; dropping it would change " +
               "the aggregation domain");
  FormatString f;
  std::vector<ExprPtr> args;
  f.output = node.format.output;
  for (std::size_t i = 0; i < node.args.size(); ++i) {
    if (i == slot) continue;
    f.inputs.push_back(node.format.inputs[i]);
    args.push_back(node.args[i]);
  }
  return Expr::einsum(std::move(f), std::move(args));
}

// Appends an all-ones operand annotated J; sound only when every symbol of J
// is already bound, otherwise the aggregation domain would grow.
inline ExprPtr add_neutral_ones(const Expr& e, const IndexString& J) {
  const auto& node = detail::require_einsum(e, "add_neutral_ones");
  SymbolSet bound = node.format.input_symbols();
  for (const auto& s : J)
    if (!bound.count(s))
      fail(Errc::would_change_semantics,
           "symbol " + s.str() + " is not bound by the node; adding it would change the " +
               "aggregation domain");
  FormatString f = node.format;
  f.inputs.push_back(J);
  std::vector<ExprPtr> args = node.args;
  args.push_back(Expr::ones(unknown_dims(J.size())));
  return Expr::einsum(std::move(f), std::move(args));
}

namespace detail {

inline IndexString distinct_symbols(std::size_t count) {
  std::vector<IndexSymbol> syms;
  syms.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (i < 26)
      syms.push_back(IndexSymbol::letter(static_cast<char>('a' + i)));
    else
      syms.push_back(IndexSymbol::tag(static_cast<std::int64_t>(i - 26)));
  }
  return IndexString(std::move(syms));
}

inline void require_distinct(const IndexString& I) {
  if (sigma(I).size() != I.size())
    fail(Errc::precondition_violated, "index string '" + I.str() + "' repeats a symbol");
}

}  // namespace detail

// Rewrites a constant leaf as an einsum over all-ones vectors: an all-ones
// tensor becomes a product of per-axis ones vectors, a scalar stays scalar.
inline ExprPtr vectorize_constant(const Expr& leaf, const IndexString& I) {
  if (leaf.is_ones()) {
    const auto& dims = leaf.as_ones().dims;
    if (I.size() != dims.size())
      fail(Errc::precondition_violated, "index string length differs from tensor order");
    detail::require_distinct(I);
    if (dims.empty())
      return Expr::einsum({{IndexString{}}, IndexString{}}, {Expr::ones(DimSpec{})});
    FormatString f;
    std::vector<ExprPtr> args;
    f.output = I;
    for (std::size_t j = 0; j < dims.size(); ++j) {
      f.inputs.push_back(IndexString({I[j]}));
      args.push_back(Expr::ones(DimSpec{dims[j]}));
    }
    return Expr::einsum(std::move(f), std::move(args));
  }
  if (leaf.is_scalar()) {
    if (!I.empty())
      fail(Errc::precondition_violated, "a scalar vectorizes to the empty index string");
    return Expr::einsum({{IndexString{}}, IndexString{}},
                        {Expr::scalar(leaf.as_scalar().literal)});
  }
  fail(Errc::not_constant, "operand is not a constant tensor leaf");
}

// Broadcast form: a scalar c over the given axis lengths becomes
// #(,i1,...,io -> I; c, ones(d1), ..., ones(do)).
inline ExprPtr vectorize_constant(const Expr& scalar_leaf, const DimSpec& dims,
                                  const IndexString& I) {
  if (!scalar_leaf.is_scalar()) fail(Errc::not_constant, "operand is not a scalar leaf");
  if (I.size() != dims.size())
    fail(Errc::precondition_violated, "index string length differs from the broadcast order");
  detail::require_distinct(I);
  FormatString f;
  std::vector<ExprPtr> args;
  f.output = I;
  f.inputs.push_back(IndexString{});
  args.push_back(Expr::scalar(scalar_leaf.as_scalar().literal));
  for (std::size_t j = 0; j < dims.size(); ++j) {
    f.inputs.push_back(IndexString({I[j]}));
    args.push_back(Expr::ones(DimSpec{dims[j]}));
  }
  return Expr::einsum(std::move(f), std::move(args));
}

// A delta of order 2o is the einsum #(I -> II; ones) over an order-o all-ones
// tensor with pairwise distinct I.
inline ExprPtr substitute_delta(const Expr& leaf) {
  if (!leaf.is_delta()) fail(Errc::not_a_delta, "operand is not a delta tensor leaf");
  const auto& d = leaf.as_delta();
  IndexString I = detail::distinct_symbols(d.order);
  std::vector<IndexSymbol> doubled = I.symbols();
  doubled.insert(doubled.end(), I.begin(), I.end());
  FormatString f;
  f.inputs.push_back(I);
  f.output = IndexString(std::move(doubled));
  return Expr::einsum(std::move(f), {Expr::ones(d.dims)});
}

// ---------------------------------------------------------------------------
// Delta removal normal form

namespace detail {

template <SemiringLike R>
typename R::value_type parse_literal_or_throw(const std::string& literal) {
  auto v = R::parse(literal);
  if (!v)
    fail(Errc::invalid_literal, "literal '" + literal + "' is not an element of the " +
                                    std::string(R::name()) + " semiring");
  return *v;
}

}  // namespace detail

// Normal form of constant removal: no delta operands anywhere, and per node at
// most one scalar (omitted when it equals one) plus exactly one all-ones
// vector for each symbol that occurs in no ordinary operand. Composed from
// substitute_delta, vectorize_constant, general denesting, and neutral-ones
// drops, so every step is one of the equivalence rules above. The semiring
// interprets and folds scalar literals.
template <SemiringLike R>
ExprPtr remove_deltas_and_constants(const ExprPtr& e) {
  if (e->is_aggregate()) {
    std::vector<ExprPtr> terms;
    for (const auto& t : e->as_aggregate().terms)
      terms.push_back(remove_deltas_and_constants<R>(t));
    return Expr::aggregate(std::move(terms));
  }
  if (e->is_delta()) return substitute_delta(*e);
  if (e->is_ones() && e->as_ones().dims.size() >= 2)
    return vectorize_constant(*e, detail::distinct_symbols(e->as_ones().dims.size()));
  if (!e->is_einsum()) return e;

  const auto& node = e->as_einsum();
  std::vector<ExprPtr> args;
  args.reserve(node.args.size());
  for (const auto& a : node.args) {
    if (a->is_einsum() || a->is_aggregate())
      args.push_back(remove_deltas_and_constants<R>(a));
    else
      args.push_back(a);
  }
  ExprPtr out = Expr::einsum(node.format, std::move(args));

  // Replace delta operands and higher-order ones operands with their einsum
  // forms and flatten exactly those; substituting an order-2o delta splices in
  // an order-o ones tensor, so the loop runs until no replacement fires.
  std::set<const Expr*> introduced;
  for (bool again = true; again;) {
    again = false;
    const auto& cur = out->as_einsum();
    for (std::size_t i = 0; i < cur.args.size(); ++i) {
      const Expr& a = *cur.args[i];
      if (a.is_delta() || (a.is_ones() && a.as_ones().dims.size() >= 2)) {
        ExprPtr form = a.is_delta()
                           ? substitute_delta(a)
                           : vectorize_constant(a, detail::distinct_symbols(a.as_ones().dims.size()));
        introduced.insert(form.get());
        std::vector<ExprPtr> next = cur.args;
        next[i] = std::move(form);
        out = Expr::einsum(cur.format, std::move(next));
        again = true;
        break;
      }
      if (introduced.count(cur.args[i].get())) {
        introduced.erase(cur.args[i].get());  // addresses may be reused once freed
        out = general_denest_at(*out, i);
        again = true;
        break;
      }
    }
  }

  // fold scalar operands (including order-0 ones tensors) into one literal
  typename R::value_type product = R::one();
  {
    const auto& cur = out->as_einsum();
    FormatString f;
    std::vector<ExprPtr> kept;
    f.output = cur.format.output;
    for (std::size_t i = 0; i < cur.args.size(); ++i) {
      const Expr& a = *cur.args[i];
      bool scalar_operand = cur.format.inputs[i].empty() &&
                            (a.is_scalar() || (a.is_ones() && a.as_ones().dims.empty()));
      if (scalar_operand) {
        if (a.is_scalar())
          product = R::mul(product, detail::parse_literal_or_throw<R>(a.as_scalar().literal));
        continue;
      }
      f.inputs.push_back(cur.format.inputs[i]);
      kept.push_back(cur.args[i]);
    }
    if (kept.empty())
      return Expr::einsum({{IndexString{}}, cur.format.output},
                          {Expr::scalar(R::print(product))});
    out = Expr::einsum(std::move(f), std::move(kept));
  }

  // drop redundant all-ones vectors; the refusal cases are exactly the ones
  // the normal form keeps (symbols bound by no ordinary operand)
  for (bool again = true; again;) {
    again = false;
    const auto& cur = out->as_einsum();
    for (std::size_t i = 0; i < cur.args.size(); ++i) {
      if (!cur.args[i]->is_ones()) continue;
      try {
        out = drop_neutral_ones(*out, i);
        again = true;
        break;
      } catch (const EinsumError& err) {
        if (err.code() != Errc::would_change_semantics) throw;
      }
    }
  }

  if (!R::equal(product, R::one())) {
    const auto& cur = out->as_einsum();
    FormatString f;
    f.inputs.push_back(IndexString{});
    f.inputs.insert(f.inputs.end(), cur.format.inputs.begin(), cur.format.inputs.end());
    f.output = cur.format.output;
    std::vector<ExprPtr> args2;
    args2.push_back(Expr::scalar(R::print(product)));
    args2.insert(args2.end(), cur.args.begin(), cur.args.end());
    out = Expr::einsum(std::move(f), std::move(args2));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contraction paths

// Sequence of binary contraction steps. Each step names two live operand
// positions (0-based); the intermediate replaces the smaller position. After
// n-1 steps one operand remains.
struct ContractionPath {
  std::vector<std::pair<std::size_t, std::size_t>> steps;

  // Text form uses 1-based positions: "(2,3),(1,2)"; surrounding brackets
  // are accepted.
  static ContractionPath parse(std::string_view text) {
    ContractionPath path;
    std::size_t i = 0;
    auto ws = [&] {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    auto number = [&]() -> std::size_t {
      ws();
      std::size_t v = 0;
      bool any = false;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        v = v * 10 + static_cast<std::size_t>(text[i] - '0');
        ++i;
        any = true;
      }
      if (!any || v == 0) fail(Errc::malformed_path, "expected a 1-based operand position");
      return v - 1;
    };
    auto consume = [&](char c) {
      ws();
      if (i >= text.size() || text[i] != c)
        fail(Errc::malformed_path, std::string("expected '") + c + "' in contraction path");
      ++i;
    };
    ws();
    if (i < text.size() && text[i] == '[') ++i;
    while (true) {
      ws();
      if (i >= text.size() || text[i] == ']') break;
      consume('(');
      std::size_t p = number();
      consume(',');
      std::size_t q = number();
      consume(')');
      path.steps.push_back({p, q});
      ws();
      if (i < text.size() && text[i] == ',') ++i;
    }
    if (i < text.size() && text[i] == ']') ++i;
    ws();
    if (i != text.size()) fail(Errc::malformed_path, "trailing characters in contraction path");
    return path;
  }

  std::string str() const {
    std::string out;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      if (k) out += ",";
      out += "(" + std::to_string(steps[k].first + 1) + "," +
             std::to_string(steps[k].second + 1) + ")";
    }
    return out;
  }
};

// Decomposes a flat einsum into n-1 nested binary einsums. Intermediate output
// strings carry, in symbol order, exactly the grouped symbols still needed:
// those shared with the remaining operands or present in the final output.
inline ExprPtr apply_contraction_path(const Expr& e, const ContractionPath& path) {
  const auto& node = detail::require_einsum(e, "apply_contraction_path");
  const std::size_t n = node.args.size();
  if (path.steps.size() + 1 != n)
    fail(Errc::malformed_path, "path has " + std::to_string(path.steps.size()) + " steps but " +
                                   std::to_string(n) + " operands need " + std::to_string(n - 1));

  struct Live {
    IndexString str;
    ExprPtr expr;
  };
  std::vector<Live> live;
  live.reserve(n);
  for (std::size_t i = 0; i < n; ++i) live.push_back({node.format.inputs[i], node.args[i]});

  SymbolSet final_out = sigma(node.format.output);
  for (std::size_t k = 0; k < path.steps.size(); ++k) {
    auto [p, q] = path.steps[k];
    if (p > q) std::swap(p, q);
    if (p == q || q >= live.size())
      fail(Errc::malformed_path, "step " + std::to_string(k + 1) + " does not name two live " +
                                     "operands");
    const bool last = (k + 1 == path.steps.size());
    FormatString f;
    f.inputs = {live[p].str, live[q].str};
    if (last) {
      f.output = node.format.output;
    } else {
      SymbolSet pair_syms = set_union(sigma(live[p].str), sigma(live[q].str));
      SymbolSet needed;
      for (std::size_t i = 0; i < live.size(); ++i) {
        if (i == p || i == q) continue;
        for (const auto& s : sigma(live[i].str))
          if (pair_syms.count(s)) needed.insert(s);
      }
      for (const auto& s : final_out)
        if (pair_syms.count(s)) needed.insert(s);
      f.output = IndexString(std::vector<IndexSymbol>(needed.begin(), needed.end()));
    }
    IndexString istr = f.output;
    ExprPtr inner = Expr::einsum(std::move(f), {live[p].expr, live[q].expr});
    live[p] = {std::move(istr), std::move(inner)};
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(q));
  }
  if (path.steps.empty()) return Expr::einsum(node.format, node.args);
  return live[0].expr;
}

// ---------------------------------------------------------------------------
// Alpha-equivalence

// Canonical form: every einsum node's symbols renamed to tags {0}, {1}, ... in
// first-occurrence order across its inputs then output. Scopes are per node,
// so each node is canonicalized independently.
inline ExprPtr canonicalize_symbols(const Expr& e) {
  if (e.is_aggregate()) {
    std::vector<ExprPtr> terms;
    for (const auto& t : e.as_aggregate().terms) terms.push_back(canonicalize_symbols(*t));
    return Expr::aggregate(std::move(terms));
  }
  if (!e.is_einsum())
    return std::make_shared<const Expr>(e);
  const auto& node = e.as_einsum();
  SymbolMap canon;
  std::int64_t next = 0;
  auto visit = [&](const IndexString& I) {
    for (const auto& s : I)
      if (!canon.mapping().count(s)) canon.set(s, IndexSymbol::tag(next++));
  };
  for (const auto& in : node.format.inputs) visit(in);
  visit(node.format.output);
  FormatString f;
  f.output = canon.apply(node.format.output);
  for (const auto& in : node.format.inputs) f.inputs.push_back(canon.apply(in));
  std::vector<ExprPtr> args;
  args.reserve(node.args.size());
  for (const auto& a : node.args) args.push_back(canonicalize_symbols(*a));
  return Expr::einsum(std::move(f), std::move(args));
}

// Structural equality up to an injective renaming of index symbols.
inline bool alpha_equal(const Expr& a, const Expr& b) {
  return *canonicalize_symbols(a) == *canonicalize_symbols(b);
}

}  // namespace einsum
