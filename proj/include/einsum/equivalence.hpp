#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "einsum/analyze.hpp"
#include "einsum/evaluator.hpp"
#include "einsum/expression.hpp"
#include "einsum/parser.hpp"

namespace einsum {

// ---------------------------------------------------------------------------
// Random entries per semiring. Exact semirings draw from small palettes so
// zero-collisions and empty aggregations actually happen in tests.

template <SemiringLike R>
struct RandomEntry;

template <>
struct RandomEntry<IntSemiring> {
  static std::int64_t draw(std::mt19937_64& rng) {
    return static_cast<std::int64_t>(rng() % 4);  // {0..3}
  }
  static constexpr int palette_size = 3;
  static std::int64_t palette(int i) { return i; }  // {0,1,2}
};

template <>
struct RandomEntry<BoolSemiring> {
  static std::uint8_t draw(std::mt19937_64& rng) { return static_cast<std::uint8_t>(rng() % 2); }
  static constexpr int palette_size = 2;
  static std::uint8_t palette(int i) { return static_cast<std::uint8_t>(i); }
};

template <>
struct RandomEntry<TropicalSemiring> {
  static TropicalValue draw(std::mt19937_64& rng) {
    auto v = rng() % 9;  // {0..7} plus +inf
    return v == 8 ? TropicalValue::infinity() : TropicalValue::of(static_cast<std::int64_t>(v));
  }
  static constexpr int palette_size = 3;
  static TropicalValue palette(int i) {
    return i == 2 ? TropicalValue::infinity() : TropicalValue::of(i);
  }
};

template <>
struct RandomEntry<FloatSemiring> {
  // positive range: sums of products never cancel, so relative tolerance is
  // meaningful
  static double draw(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.25, 2.0);
    return dist(rng);
  }
  static constexpr int palette_size = 3;
  static double palette(int i) { return static_cast<double>(i); }
};

template <SemiringLike R>
void fill_random(Tensor<typename R::value_type>& t, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < t.entry_count(); ++i) t.at_flat(i) = RandomEntry<R>::draw(rng);
}

template <SemiringLike R>
TensorBindings<R> random_bindings(const ShapeBindings& shapes, std::mt19937_64& rng) {
  TensorBindings<R> out;
  for (const auto& [name, shape] : shapes) {
    Tensor<typename R::value_type> t(shape);
    fill_random<R>(t, rng);
    out.emplace(name, std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shape derivation for equivalence checking: named-leaf shapes follow from the
// index strings that annotate them, with per-symbol lengths supplied by the
// caller and a default for everything else.

struct DimAssignment {
  std::map<IndexSymbol, std::int64_t> symbol_dims;
  std::int64_t default_dim = 2;
};

namespace detail {

class ShapeDeriver {
 public:
  ShapeDeriver(const DimAssignment& dims, ShapeBindings& out) : dims_(dims), out_(out) {}

  std::optional<Shape> derive(const Expr& e, std::optional<Shape> required) {
    if (e.is_named()) {
      const std::string& name = e.as_named().name;
      if (required) {
        auto it = out_.find(name);
        if (it != out_.end() && it->second != *required)
          fail(Errc::shape_mismatch, "tensor '" + name + "' is used with shapes " +
                                         it->second.str() + " and " + required->str());
        out_.emplace(name, *required);
        return required;
      }
      auto it = out_.find(name);
      if (it != out_.end()) return it->second;
      return std::nullopt;
    }
    if (e.is_scalar()) return check(Shape::scalar(), required, "scalar");
    if (e.is_ones()) {
      const auto& dims = e.as_ones().dims;
      if (fully_known(dims)) return check(to_shape(dims), required, "ones tensor");
      if (required && required->order() == dims.size()) return required;
      fail(Errc::shape_mismatch, "cannot determine the shape of an all-ones tensor");
    }
    if (e.is_delta()) {
      const auto& d = e.as_delta();
      if (fully_known(d.dims)) {
        Shape half = to_shape(d.dims);
        return check(concat(half, half), required, "delta tensor");
      }
      if (required && required->order() == 2 * d.order) return required;
      fail(Errc::shape_mismatch, "cannot determine the shape of a delta tensor");
    }
    if (e.is_aggregate()) {
      const auto& agg = e.as_aggregate();
      std::optional<Shape> common = required;
      if (!common)
        for (const auto& t : agg.terms)
          if ((common = derive(*t, std::nullopt))) break;
      if (!common)
        fail(Errc::shape_mismatch, "cannot determine the shape of an aggregate");
      for (const auto& t : agg.terms) derive(*t, common);
      return common;
    }
    return derive_einsum(e.as_einsum(), required);
  }

 private:
  std::optional<Shape> check(Shape got, const std::optional<Shape>& required, const char* what) {
    if (required && *required != got)
      fail(Errc::shape_mismatch,
           std::string(what) + " has shape " + got.str() + ", expected " + required->str());
    return got;
  }

  std::optional<Shape> derive_einsum(const EinsumNode& node, std::optional<Shape> required) {
    AxisEnvironment env;
    if (required) {
      if (required->order() != node.format.output.size())
        fail(Errc::shape_mismatch, "einsum output '" + node.format.output.str() +
                                       "' cannot have shape " + required->str());
      for (std::size_t j = 0; j < required->order(); ++j)
        env.bind(node.format.output[j], required->dim(j));
    }
    // declared leaf dims and already-recorded named shapes constrain first
    for (std::size_t i = 0; i < node.args.size(); ++i) {
      const IndexString& is = node.format.inputs[i];
      const Expr& arg = *node.args[i];
      if (arg.is_delta()) {
        const auto& d = arg.as_delta();
        if (is.size() == 2 * d.order)
          for (std::size_t j = 0; j < d.order; ++j)
            if (d.dims[j]) {
              env.bind(is[j], *d.dims[j]);
              env.bind(is[d.order + j], *d.dims[j]);
            }
      } else if (arg.is_ones()) {
        const auto& dims = arg.as_ones().dims;
        if (is.size() == dims.size())
          for (std::size_t j = 0; j < is.size(); ++j)
            if (dims[j]) env.bind(is[j], *dims[j]);
      } else if (arg.is_named()) {
        auto it = out_.find(arg.as_named().name);
        if (it != out_.end() && it->second.order() == is.size())
          for (std::size_t j = 0; j < is.size(); ++j) env.bind(is[j], it->second.dim(j));
      }
    }
    for (const auto& s : node.format.symbols())
      if (!env.contains(s)) {
        auto it = dims_.symbol_dims.find(s);
        env.bind(s, it != dims_.symbol_dims.end() ? it->second : dims_.default_dim);
      }
    for (std::size_t i = 0; i < node.args.size(); ++i) {
      const IndexString& is = node.format.inputs[i];
      std::vector<std::int64_t> d;
      d.reserve(is.size());
      for (const auto& s : is) d.push_back(env.at(s));
      derive(*node.args[i], Shape(std::move(d)));
    }
    std::vector<std::int64_t> od;
    od.reserve(node.format.output.size());
    for (const auto& s : node.format.output) od.push_back(env.at(s));
    return Shape(std::move(od));
  }

  const DimAssignment& dims_;
  ShapeBindings& out_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Equivalence checking

template <SemiringLike R>
struct Counterexample {
  TensorBindings<R> bindings;
  std::vector<std::int64_t> position;
  typename R::value_type lhs;
  typename R::value_type rhs;
};

template <SemiringLike R>
struct EquivalenceReport {
  bool equivalent = true;
  int trials_run = 0;
  bool exhaustive = false;
  std::string semiring{R::name()};
  std::optional<Counterexample<R>> counterexample;
};

struct EquivOptions {
  int trials = 32;
  std::uint64_t seed = 0;
  bool exhaustive = false;
  DimAssignment dims;
};

namespace detail {

inline std::vector<std::int64_t> unflatten(const Shape& shape, std::size_t flat) {
  std::vector<std::int64_t> pos(shape.order(), 0);
  for (std::size_t j = shape.order(); j-- > 0;) {
    pos[j] = static_cast<std::int64_t>(flat % static_cast<std::size_t>(shape.dim(j)));
    flat /= static_cast<std::size_t>(shape.dim(j));
  }
  return pos;
}

// Same shape bindings for both sides; shared names must agree.
inline ShapeBindings derive_shared_shapes(const Expr& a, const Expr& b, const DimAssignment& dims) {
  ShapeBindings shapes;
  try {
    detail::ShapeDeriver deriver(dims, shapes);
    auto sa = deriver.derive(a, std::nullopt);
    auto sb = deriver.derive(b, std::nullopt);
    if (!sa || !sb) fail(Errc::shape_mismatch, "cannot determine the output shape");
    if (*sa != *sb)
      fail(Errc::shape_mismatch, "output shapes differ: " + sa->str() + " vs " + sb->str());
  } catch (const EinsumError& err) {
    if (err.code() == Errc::axis_mismatch)
      fail(Errc::shape_mismatch, err.what());
    throw;
  }
  return shapes;
}

}  // namespace detail

// Samples random bindings (or exhausts small palettes) and compares the two
// expressions entrywise. Equality on all trials is evidence, not proof; any
// counterexample is conclusive and re-checkable with eval.
template <SemiringLike R>
EquivalenceReport<R> check_equivalence(const Expr& a, const Expr& b,
                                       const EquivOptions& opt = {}) {
  ShapeBindings shapes = detail::derive_shared_shapes(a, b, opt.dims);
  for (const Expr* e : {&a, &b}) {
    ValidityReport report = validate(*e, shapes);
    if (!report.valid())
      fail(report.violations[0].code, "expression does not validate: " +
                                          report.violations[0].message);
  }

  EquivalenceReport<R> report;
  auto run_one = [&](const TensorBindings<R>& bindings) -> bool {
    ++report.trials_run;
    Tensor<typename R::value_type> va = eval<R>(a, bindings);
    Tensor<typename R::value_type> vb = eval<R>(b, bindings);
    for (std::size_t i = 0; i < va.entry_count(); ++i) {
      if (!R::equal(va.at_flat(i), vb.at_flat(i))) {
        report.equivalent = false;
        report.counterexample = Counterexample<R>{
            bindings, detail::unflatten(va.shape(), i), va.at_flat(i), vb.at_flat(i)};
        return false;
      }
    }
    return true;
  };

  if (opt.exhaustive) {
    report.exhaustive = true;
    std::int64_t total = 0;
    for (const auto& [name, shape] : shapes) total += shape.entry_count();
    if (total > 12)
      fail(Errc::precondition_violated,
           "exhaustive mode handles at most 12 tensor entries in total, got " +
               std::to_string(total));
    const int base = RandomEntry<R>::palette_size;
    std::vector<int> digits(static_cast<std::size_t>(total), 0);
    while (true) {
      TensorBindings<R> bindings;
      std::size_t k = 0;
      for (const auto& [name, shape] : shapes) {
        Tensor<typename R::value_type> t(shape);
        for (std::size_t i = 0; i < t.entry_count(); ++i)
          t.at_flat(i) = RandomEntry<R>::palette(digits[k++]);
        bindings.emplace(name, std::move(t));
      }
      if (!run_one(bindings)) return report;
      std::size_t j = digits.size();
      bool advanced = false;
      while (j-- > 0) {
        if (++digits[j] < base) {
          advanced = true;
          break;
        }
        digits[j] = 0;
      }
      if (!advanced) break;
      if (digits.empty()) break;
    }
    return report;
  }

  for (int t = 0; t < opt.trials; ++t) {
    // stable per-trial seeding: parallel partitioning could never change results
    std::mt19937_64 rng(opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(t) + 1);
    TensorBindings<R> bindings = random_bindings<R>(shapes, rng);
    if (!run_one(bindings)) return report;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Random expression generator. Everything it emits satisfies the validity
// constraints by construction; shapes for the named leaves accumulate per
// generated expression.

struct GeneratorOptions {
  std::int64_t dim_min = 1;
  std::int64_t dim_max = 4;
  std::size_t max_symbols = 4;
  std::size_t max_args = 4;
  std::size_t max_string_len = 3;
  std::size_t max_depth = 2;
  double nest_prob = 0.2;
  double aggregate_prob = 0.1;
  double delta_prob = 0.1;
  double ones_prob = 0.1;
  double scalar_prob = 0.1;
  std::int64_t scalar_max = 3;  // literals drawn from 0..scalar_max
};

struct GeneratedExpression {
  ExprPtr expr;
  ShapeBindings shapes;
};

class ExpressionGenerator {
 public:
  explicit ExpressionGenerator(std::uint64_t seed, GeneratorOptions opt = {})
      : rng_(seed), opt_(opt) {}

  std::mt19937_64& rng() { return rng_; }
  const GeneratorOptions& options() const { return opt_; }

  // Random valid expression with the configured leaf/nesting mix.
  GeneratedExpression generate() {
    begin();
    ExprPtr e = einsum_node(std::nullopt, opt_.max_depth);
    return {std::move(e), std::move(shapes_)};
  }

  // Single flat einsum over named leaves.
  GeneratedExpression generate_flat(std::size_t min_args, std::size_t max_args) {
    begin();
    ExprPtr e = flat_node(min_args, max_args);
    return {std::move(e), std::move(shapes_)};
  }

  // Einsum node with exactly one nested einsum argument at a random slot;
  // duplicate symbols on both sides of the handoff and symbol collisions
  // between the scopes are all possible.
  GeneratedExpression generate_nested() {
    begin();
    ExprPtr e = nested_node();
    return {std::move(e), std::move(shapes_)};
  }

  // Flat einsum over named leaves with delta, ones, and scalar operands mixed
  // in; optionally one nested constant-laden argument.
  GeneratedExpression generate_constant_laden() {
    begin();
    ExprPtr e = constant_laden_node(1);
    return {std::move(e), std::move(shapes_)};
  }

  std::int64_t random_dim() { return range(opt_.dim_min, opt_.dim_max); }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

  bool chance(double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
  }

 private:
  struct Scope {
    std::vector<IndexSymbol> syms;
    std::map<IndexSymbol, std::int64_t> dims;
  };

  std::mt19937_64 rng_;
  GeneratorOptions opt_;
  ShapeBindings shapes_;
  int name_counter_ = 0;

  void begin() {
    shapes_.clear();
    name_counter_ = 0;
  }

  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  static constexpr char kLetterPool[] = {'i', 'j', 'k', 'l', 'a', 'b', 'c', 'd',
                                         'p', 'q', 'r', 's'};

  IndexSymbol fresh_symbol(Scope& scope, std::int64_t dim) {
    for (char c : kLetterPool) {
      IndexSymbol s = IndexSymbol::letter(c);
      if (!scope.dims.count(s)) {
        scope.syms.push_back(s);
        scope.dims[s] = dim;
        return s;
      }
    }
    for (std::int64_t t = 0;; ++t) {
      IndexSymbol s = IndexSymbol::tag(t);
      if (!scope.dims.count(s)) {
        scope.syms.push_back(s);
        scope.dims[s] = dim;
        return s;
      }
    }
  }

  IndexSymbol symbol_with_dim(Scope& scope, std::int64_t dim) {
    std::vector<IndexSymbol> fitting;
    for (const auto& s : scope.syms)
      if (scope.dims[s] == dim) fitting.push_back(s);
    if (!fitting.empty() && chance(0.5)) return fitting[index(fitting.size())];
    return fresh_symbol(scope, dim);
  }

  IndexString random_string(Scope& scope, std::size_t max_len) {
    std::vector<IndexSymbol> syms;
    if (!scope.syms.empty()) {
      std::size_t len = index(max_len + 1);
      for (std::size_t i = 0; i < len; ++i) syms.push_back(scope.syms[index(scope.syms.size())]);
    }
    return IndexString(std::move(syms));
  }

  Shape string_shape(const Scope& scope, const IndexString& s) {
    std::vector<std::int64_t> dims;
    dims.reserve(s.size());
    for (const auto& sym : s) dims.push_back(scope.dims.at(sym));
    return Shape(std::move(dims));
  }

  std::string fresh_name() { return "T" + std::to_string(name_counter_++); }

  ExprPtr named_arg(const Shape& shape) {
    std::string name = fresh_name();
    shapes_.emplace(name, shape);
    return Expr::named(std::move(name));
  }

  Scope make_scope(std::size_t symbol_count) {
    Scope scope;
    for (std::size_t i = 0; i < symbol_count; ++i) fresh_symbol(scope, random_dim());
    return scope;
  }

  // Output string first when a shape is required; symbols may repeat whenever
  // the repeated axes share a length.
  IndexString output_for(Scope& scope, const Shape& required) {
    std::vector<IndexSymbol> syms;
    for (std::size_t j = 0; j < required.order(); ++j)
      syms.push_back(symbol_with_dim(scope, required.dim(j)));
    return IndexString(std::move(syms));
  }

  enum class Kind { named, scalar, ones, delta, nested, aggregate };

  ExprPtr einsum_node(std::optional<Shape> required, std::size_t depth) {
    Scope scope = make_scope(1 + index(opt_.max_symbols));
    IndexString output;
    if (required) output = output_for(scope, *required);

    std::size_t n = 1 + index(opt_.max_args);
    std::vector<Kind> kinds;
    for (std::size_t i = 0; i < n; ++i) {
      double roll = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
      if (depth > 0 && roll < opt_.nest_prob)
        kinds.push_back(Kind::nested);
      else if (depth > 0 && roll < opt_.nest_prob + opt_.aggregate_prob)
        kinds.push_back(Kind::aggregate);
      else if (roll < opt_.nest_prob + opt_.aggregate_prob + opt_.delta_prob)
        kinds.push_back(Kind::delta);
      else if (roll < opt_.nest_prob + opt_.aggregate_prob + opt_.delta_prob + opt_.ones_prob)
        kinds.push_back(Kind::ones);
      else if (roll <
               opt_.nest_prob + opt_.aggregate_prob + opt_.delta_prob + opt_.ones_prob +
                   opt_.scalar_prob)
        kinds.push_back(Kind::scalar);
      else
        kinds.push_back(Kind::named);
    }

    std::vector<IndexString> inputs(n);
    for (std::size_t i = 0; i < n; ++i) {
      switch (kinds[i]) {
        case Kind::scalar:
          inputs[i] = IndexString{};
          break;
        case Kind::delta: {
          std::size_t o = chance(0.3) ? 2 : 1;
          std::vector<IndexSymbol> first, second;
          for (std::size_t j = 0; j < o; ++j) {
            IndexSymbol s = scope.syms[index(scope.syms.size())];
            first.push_back(s);
            second.push_back(symbol_with_dim(scope, scope.dims[s]));
          }
          first.insert(first.end(), second.begin(), second.end());
          inputs[i] = IndexString(std::move(first));
          break;
        }
        default:
          inputs[i] = random_string(scope, opt_.max_string_len);
      }
    }

    // every output symbol has to be covered by some input string
    if (required) {
      SymbolSet covered;
      for (const auto& is : inputs) covered.insert(is.begin(), is.end());
      std::vector<IndexSymbol> missing;
      for (const auto& s : sigma(output))
        if (!covered.count(s)) missing.push_back(s);
      if (!missing.empty()) {
        std::vector<std::size_t> extensible;
        for (std::size_t i = 0; i < n; ++i)
          if (kinds[i] == Kind::named || kinds[i] == Kind::ones || kinds[i] == Kind::nested ||
              kinds[i] == Kind::aggregate)
            extensible.push_back(i);
        if (extensible.empty()) {
          inputs.push_back(IndexString(missing));
          kinds.push_back(Kind::named);
          ++n;
        } else {
          for (const auto& s : missing) {
            std::size_t i = extensible[index(extensible.size())];
            std::vector<IndexSymbol> ext = inputs[i].symbols();
            ext.push_back(s);
            inputs[i] = IndexString(std::move(ext));
          }
        }
      }
    } else {
      SymbolSet used;
      for (const auto& is : inputs) used.insert(is.begin(), is.end());
      Scope used_scope;
      for (const auto& s : used) {
        used_scope.syms.push_back(s);
        used_scope.dims[s] = scope.dims[s];
      }
      output = random_string(used_scope, opt_.max_string_len);
    }

    std::vector<ExprPtr> args;
    args.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      switch (kinds[i]) {
        case Kind::named:
          args.push_back(named_arg(string_shape(scope, inputs[i])));
          break;
        case Kind::scalar:
          args.push_back(Expr::scalar(std::to_string(range(0, opt_.scalar_max))));
          break;
        case Kind::ones:
          args.push_back(Expr::ones(string_shape(scope, inputs[i])));
          break;
        case Kind::delta: {
          std::size_t o = inputs[i].size() / 2;
          std::vector<std::int64_t> half;
          for (std::size_t j = 0; j < o; ++j) half.push_back(scope.dims[inputs[i][j]]);
          args.push_back(Expr::delta(o, Shape(std::move(half))));
          break;
        }
        case Kind::nested:
          args.push_back(einsum_node(string_shape(scope, inputs[i]), depth - 1));
          break;
        case Kind::aggregate: {
          Shape shape = string_shape(scope, inputs[i]);
          std::vector<ExprPtr> terms;
          std::size_t count = 2 + index(2);
          for (std::size_t t = 0; t < count; ++t) {
            if (depth > 0 && chance(0.3))
              terms.push_back(einsum_node(shape, depth - 1));
            else
              terms.push_back(named_arg(shape));
          }
          args.push_back(Expr::aggregate(std::move(terms)));
          break;
        }
      }
    }
    return Expr::einsum({std::move(inputs), std::move(output)}, std::move(args));
  }

  ExprPtr flat_node(std::size_t min_args, std::size_t max_args) {
    Scope scope = make_scope(1 + index(opt_.max_symbols));
    std::size_t n = min_args + index(max_args - min_args + 1);
    std::vector<IndexString> inputs;
    std::vector<ExprPtr> args;
    for (std::size_t i = 0; i < n; ++i) {
      IndexString is = random_string(scope, opt_.max_string_len);
      args.push_back(named_arg(string_shape(scope, is)));
      inputs.push_back(std::move(is));
    }
    SymbolSet used;
    for (const auto& is : inputs) used.insert(is.begin(), is.end());
    Scope used_scope;
    for (const auto& s : used) {
      used_scope.syms.push_back(s);
      used_scope.dims[s] = scope.dims[s];
    }
    IndexString output = random_string(used_scope, opt_.max_string_len);
    return Expr::einsum({std::move(inputs), std::move(output)}, std::move(args));
  }

  ExprPtr nested_node() {
    ExprPtr inner = flat_node(1, 3);
    const auto& inner_node = inner->as_einsum();

    // re-pick the inner output: any string over the symbols the inner node
    // uses, duplicates included
    SymbolSet inner_used = inner_node.format.input_symbols();
    ShapeBindings dummy;
    AxisEnvironment inner_env;
    {
      // reconstruct inner dims from the recorded leaf shapes
      for (std::size_t i = 0; i < inner_node.args.size(); ++i) {
        const Shape& s = shapes_.at(inner_node.args[i]->as_named().name);
        for (std::size_t j = 0; j < inner_node.format.inputs[i].size(); ++j)
          inner_env.bind(inner_node.format.inputs[i][j], s.dim(j));
      }
    }
    Scope inner_scope;
    for (const auto& s : inner_used) {
      inner_scope.syms.push_back(s);
      inner_scope.dims[s] = inner_env.at(s);
    }
    IndexString inner_output = random_string(inner_scope, opt_.max_string_len);
    inner = Expr::einsum({inner_node.format.inputs, inner_output}, inner_node.args);

    // outer scope: slot symbols match the inner output lengths positionally;
    // letters may collide with inner ones, which exercises the pre-renaming
    Scope outer = make_scope(1 + index(2));
    std::vector<IndexSymbol> slot;
    for (std::size_t j = 0; j < inner_output.size(); ++j)
      slot.push_back(symbol_with_dim(outer, inner_scope.dims.at(inner_output[j])));
    IndexString slot_string{std::move(slot)};

    std::size_t extra = 1 + index(2);
    std::vector<IndexString> inputs;
    std::vector<ExprPtr> args;
    std::size_t nested_at = index(extra + 1);
    for (std::size_t i = 0; i < extra + 1; ++i) {
      if (i == nested_at) {
        inputs.push_back(slot_string);
        args.push_back(inner);
      } else {
        IndexString is = random_string(outer, opt_.max_string_len);
        args.push_back(named_arg(string_shape(outer, is)));
        inputs.push_back(std::move(is));
      }
    }
    SymbolSet used;
    for (const auto& is : inputs) used.insert(is.begin(), is.end());
    Scope used_scope;
    for (const auto& s : used) {
      used_scope.syms.push_back(s);
      used_scope.dims[s] = outer.dims.at(s);
    }
    IndexString output = random_string(used_scope, opt_.max_string_len);
    return Expr::einsum({std::move(inputs), std::move(output)}, std::move(args));
  }

  // (output shape, expression) of an already generated constant-laden node
  struct Sub {
    Shape shape;
    ExprPtr expr;
  };

  ExprPtr constant_laden_node(std::size_t depth) { return constant_laden(depth).expr; }

  Sub constant_laden(std::size_t depth) {
    Scope scope = make_scope(2 + index(opt_.max_symbols - 1));
    std::size_t n = 1 + index(2);
    std::vector<IndexString> inputs;
    std::vector<ExprPtr> args;
    std::vector<bool> ordinary;  // named or nested: can carry inferable axes
    for (std::size_t i = 0; i < n; ++i) {
      if (depth > 0 && chance(0.25)) {
        Sub sub = constant_laden(depth - 1);
        std::vector<IndexSymbol> slot;
        for (std::size_t j = 0; j < sub.shape.order(); ++j)
          slot.push_back(symbol_with_dim(scope, sub.shape.dim(j)));
        inputs.push_back(IndexString(std::move(slot)));
        args.push_back(std::move(sub.expr));
      } else {
        IndexString is = random_string(scope, opt_.max_string_len);
        args.push_back(named_arg(string_shape(scope, is)));
        inputs.push_back(std::move(is));
      }
      ordinary.push_back(true);
    }

    auto bound_by_ordinary = [&](IndexSymbol s) {
      for (std::size_t i = 0; i < inputs.size(); ++i)
        if (ordinary[i] && inputs[i].contains(s)) return true;
      return false;
    };

    std::size_t extras = 1 + index(3);
    for (std::size_t k = 0; k < extras; ++k) {
      double roll = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
      if (roll < 0.35) {
        // unit matrix, sometimes degenerate (both axes on the same symbol)
        IndexSymbol s = scope.syms[index(scope.syms.size())];
        IndexSymbol t = chance(0.25) ? s : symbol_with_dim(scope, scope.dims[s]);
        bool inferable = bound_by_ordinary(s) || bound_by_ordinary(t);
        inputs.push_back(IndexString({s, t}));
        args.push_back(inferable && chance(0.5) ? Expr::delta(1)
                                                : Expr::delta(1, Shape({scope.dims[s]})));
      } else if (roll < 0.5) {
        IndexSymbol s1 = scope.syms[index(scope.syms.size())];
        IndexSymbol s2 = scope.syms[index(scope.syms.size())];
        IndexSymbol t1 = symbol_with_dim(scope, scope.dims[s1]);
        IndexSymbol t2 = symbol_with_dim(scope, scope.dims[s2]);
        inputs.push_back(IndexString({s1, s2, t1, t2}));
        args.push_back(Expr::delta(2, Shape({scope.dims[s1], scope.dims[s2]})));
      } else if (roll < 0.8) {
        // all-ones tensor, order 0..2; may bind an otherwise-unused symbol
        IndexString is = chance(0.3) ? IndexString({fresh_symbol(scope, random_dim())})
                                     : random_string(scope, 2);
        args.push_back(Expr::ones(string_shape(scope, is)));
        inputs.push_back(std::move(is));
      } else {
        inputs.push_back(IndexString{});
        args.push_back(Expr::scalar(std::to_string(range(0, opt_.scalar_max))));
      }
      ordinary.push_back(false);
    }

    SymbolSet used;
    for (const auto& is : inputs) used.insert(is.begin(), is.end());
    Scope used_scope;
    for (const auto& s : used) {
      used_scope.syms.push_back(s);
      used_scope.dims[s] = scope.dims.at(s);
    }
    IndexString output = random_string(used_scope, opt_.max_string_len);
    Shape out_shape = string_shape(scope, output);
    return {std::move(out_shape),
            Expr::einsum({std::move(inputs), std::move(output)}, std::move(args))};
  }
};

}  // namespace einsum
