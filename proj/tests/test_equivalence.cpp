#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "einsum/einsum.hpp"
#include "test_util.hpp"

using namespace einsum;

TEST_CASE("equivalent expressions pass every trial") {
  auto flat = parse_expression("#(ij,jk,k->i; A, B, v)");
  auto nested_left = parse_expression("#(ik,k->i; #(ij,jk->ik; A, B), v)");
  auto nested_right = parse_expression("#(ij,j->i; A, #(jk,k->j; B, v))");
  EquivOptions opt;
  opt.trials = 50;
  opt.dims.symbol_dims = {{IndexSymbol::letter('i'), 3},
                          {IndexSymbol::letter('j'), 3},
                          {IndexSymbol::letter('k'), 3}};
  for (const auto* lhs : {&flat, &nested_left}) {
    for (const auto* rhs : {&nested_left, &nested_right}) {
      auto report = check_equivalence<IntSemiring>(**lhs, **rhs, opt);
      CHECK(report.equivalent);
      CHECK(report.trials_run == 50);
    }
  }
}

TEST_CASE("argument swap without string permutation is caught quickly") {
  auto ab = parse_expression("#(ij,jk->ik; A, B)");
  auto ba = parse_expression("#(ij,jk->ik; B, A)");
  auto report = check_equivalence<IntSemiring>(*ab, *ba, {});
  REQUIRE(!report.equivalent);
  CHECK(report.trials_run <= 32);
  REQUIRE(report.counterexample);

  // the counterexample re-evaluates to unequal results, independently
  const auto& ce = *report.counterexample;
  auto va = eval<IntSemiring>(*ab, ce.bindings);
  auto vb = eval<IntSemiring>(*ba, ce.bindings);
  CHECK(va.at(ce.position) == ce.lhs);
  CHECK(vb.at(ce.position) == ce.rhs);
  CHECK(ce.lhs != ce.rhs);
}

TEST_CASE("an expression equals itself") {
  auto e = parse_expression("#(ij,jk->ik; A, B)");
  CHECK(check_equivalence<IntSemiring>(*e, *e, {}).equivalent);
  CHECK(check_equivalence<TropicalSemiring>(*e, *e, {}).equivalent);
  CHECK(check_equivalence<BoolSemiring>(*e, *e, {}).equivalent);
  CHECK(check_equivalence<FloatSemiring>(*e, *e, {}).equivalent);
}

TEST_CASE("reports are deterministic in the seed") {
  auto ab = parse_expression("#(ij,jk->ik; A, B)");
  auto ba = parse_expression("#(ij,jk->ik; B, A)");
  EquivOptions opt;
  opt.seed = 7;
  auto r1 = check_equivalence<IntSemiring>(*ab, *ba, opt);
  auto r2 = check_equivalence<IntSemiring>(*ab, *ba, opt);
  REQUIRE(r1.counterexample);
  REQUIRE(r2.counterexample);
  CHECK(r1.trials_run == r2.trials_run);
  CHECK(r1.counterexample->position == r2.counterexample->position);
  CHECK(r1.counterexample->bindings.at("A") == r2.counterexample->bindings.at("A"));
  opt.seed = 8;
  auto r3 = check_equivalence<IntSemiring>(*ab, *ba, opt);
  CHECK(!r3.equivalent);  // still found, possibly elsewhere
}

TEST_CASE("output shape disagreement is an error, not a verdict") {
  auto a = parse_expression("#(ij->ij; A)");
  auto b = parse_expression("#(ij->ji; A)");
  EquivOptions opt;
  opt.dims.symbol_dims = {{IndexSymbol::letter('i'), 2}, {IndexSymbol::letter('j'), 3}};
  try {
    check_equivalence<IntSemiring>(*a, *b, opt);
    FAIL("expected shape mismatch");
  } catch (const EinsumError& err) {
    CHECK(err.code() == Errc::shape_mismatch);
  }
}

TEST_CASE("exhaustive mode enumerates small palettes completely") {
  // over booleans: x . (y + z) == x . y + x . z elementwise
  auto lhs = parse_expression("#(i,i->i; x, (y + z))");
  auto rhs = parse_expression("(#(i,i->i; x, y) + #(i,i->i; x, z))");
  EquivOptions opt;
  opt.exhaustive = true;
  opt.dims.symbol_dims = {{IndexSymbol::letter('i'), 2}};
  auto report = check_equivalence<BoolSemiring>(*lhs, *rhs, opt);
  CHECK(report.equivalent);
  CHECK(report.exhaustive);
  CHECK(report.trials_run == 64);  // 2^(3 tensors * 2 entries)

  auto bad = parse_expression("#(i,i->i; x, y)");
  auto bad2 = parse_expression("#(i,i->i; x, x)");
  auto refute = check_equivalence<BoolSemiring>(*bad, *bad2, opt);
  CHECK(!refute.equivalent);

  EquivOptions big = opt;
  big.dims.symbol_dims = {{IndexSymbol::letter('i'), 9}};
  CHECK_THROWS_AS(check_equivalence<BoolSemiring>(*lhs, *rhs, big), EinsumError);
}

TEST_CASE("per-symbol dims reach both sides consistently") {
  auto a = parse_expression("#(ij,j->i; A, v)");
  auto b = parse_expression("#(j,ij->i; v, A)");
  EquivOptions opt;
  opt.dims.symbol_dims = {{IndexSymbol::letter('i'), 4}, {IndexSymbol::letter('j'), 2}};
  auto report = check_equivalence<IntSemiring>(*a, *b, opt);
  CHECK(report.equivalent);
  REQUIRE(report.counterexample == std::nullopt);
  // derived shapes honored the assignment
  ShapeBindings shapes = detail::derive_shared_shapes(*a, *b, opt.dims);
  CHECK(shapes.at("A") == Shape({4, 2}));
  CHECK(shapes.at("v") == Shape({2}));
}

TEST_CASE("generated expressions always validate") {
  ExpressionGenerator gen(2025);
  for (int i = 0; i < 1000; ++i) {
    auto g = gen.generate();
    auto report = validate(*g.expr, g.shapes);
    REQUIRE_MESSAGE(report.valid(), render(*g.expr));
  }
}

TEST_CASE("generation is deterministic in the seed") {
  ExpressionGenerator a(99), b(99);
  for (int i = 0; i < 20; ++i) {
    auto ga = a.generate();
    auto gb = b.generate();
    CHECK(*ga.expr == *gb.expr);
    CHECK(ga.shapes == gb.shapes);
  }
}

TEST_CASE("generated trees exercise the whole grammar") {
  ExpressionGenerator gen(4242);
  int deltas = 0, ones = 0, scalars = 0, aggregates = 0, nested = 0, duplicates = 0;
  for (int i = 0; i < 300; ++i) {
    auto g = gen.generate();
    std::vector<const Expr*> stack{g.expr.get()};
    while (!stack.empty()) {
      const Expr* e = stack.back();
      stack.pop_back();
      if (e->is_delta()) ++deltas;
      if (e->is_ones()) ++ones;
      if (e->is_scalar()) ++scalars;
      if (e->is_aggregate()) {
        ++aggregates;
        for (const auto& t : e->as_aggregate().terms) stack.push_back(t.get());
      }
      if (e->is_einsum()) {
        const auto& node = e->as_einsum();
        for (const auto& is : node.format.inputs)
          if (sigma(is).size() < is.size()) ++duplicates;
        for (const auto& arg : node.args) {
          if (arg->is_einsum()) ++nested;
          stack.push_back(arg.get());
        }
      }
    }
  }
  CHECK(deltas > 20);
  CHECK(ones > 20);
  CHECK(scalars > 20);
  CHECK(aggregates > 20);
  CHECK(nested > 20);
  CHECK(duplicates > 50);
}
