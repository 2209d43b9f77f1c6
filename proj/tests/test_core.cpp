#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "einsum/einsum.hpp"
#include "test_util.hpp"

using namespace einsum;

TEST_CASE("index symbols: two namespaces, deterministic order") {
  IndexSymbol a = IndexSymbol::letter('a');
  IndexSymbol z = IndexSymbol::letter('Z');
  IndexSymbol t0 = IndexSymbol::tag(0);
  IndexSymbol t7 = IndexSymbol::tag(7);

  CHECK(a.is_letter());
  CHECK(t0.is_tag());
  CHECK(a.str() == "a");
  CHECK(t7.str() == "{7}");

  // letters order before tags, each namespace internally ordered
  CHECK(a < z);
  CHECK(z < t0);
  CHECK(t0 < t7);
  CHECK(IndexSymbol::letter('b') < IndexSymbol::letter('B'));

  // the printed forms of the two namespaces can never collide
  CHECK(IndexSymbol::tag(0).str() != IndexSymbol::letter('a').str());
  CHECK(IndexSymbol::tag(0) != IndexSymbol::letter('a'));
}

TEST_CASE("sigma collapses duplicates") {
  CHECK(sigma(IndexString::of("iji")) ==
        SymbolSet{IndexSymbol::letter('i'), IndexSymbol::letter('j')});
  CHECK(sigma(IndexString::of("")) == SymbolSet{});
  CHECK(sigma(IndexString::of("ii")) == SymbolSet{IndexSymbol::letter('i')});
}

TEST_CASE("index strings keep order and duplicates") {
  IndexString s = IndexString::of("i{10}i");
  CHECK(s.size() == 3);
  CHECK(s[0] == IndexSymbol::letter('i'));
  CHECK(s[1] == IndexSymbol::tag(10));
  CHECK(s[2] == IndexSymbol::letter('i'));
  CHECK(s.str() == "i{10}i");
}

TEST_CASE("shape basics") {
  Shape s({2, 3});
  CHECK(s.order() == 2);
  CHECK(s.entry_count() == 6);
  CHECK(Shape().entry_count() == 1);  // scalar holds one entry
  CHECK_THROWS_AS(Shape({0}), EinsumError);
  CHECK(concat(Shape({2}), Shape({3})) == Shape({2, 3}));
}

TEST_CASE("tensor storage is row-major, last axis fastest") {
  Tensor<std::int64_t> t(Shape({2, 3}));
  CHECK(t.flat_index(std::vector<std::int64_t>{0, 0}) == 0);
  CHECK(t.flat_index(std::vector<std::int64_t>{0, 2}) == 2);
  CHECK(t.flat_index(std::vector<std::int64_t>{1, 0}) == 3);
  CHECK(t.flat_index(std::vector<std::int64_t>{1, 2}) == 5);
  CHECK_THROWS_AS(Tensor<std::int64_t>(Shape({2}), std::vector<std::int64_t>{1, 2, 3}),
                  EinsumError);
}

namespace {

template <typename R>
void check_semiring_axioms(const std::vector<typename R::value_type>& samples) {
  for (const auto& a : samples)
    for (const auto& b : samples) {
      CHECK(R::equal(R::add(a, b), R::add(b, a)));
      CHECK(R::equal(R::mul(a, b), R::mul(b, a)));
      CHECK(R::equal(R::add(a, R::zero()), a));
      CHECK(R::equal(R::mul(a, R::one()), a));
      CHECK(R::equal(R::mul(a, R::zero()), R::zero()));
      for (const auto& c : samples) {
        CHECK(R::equal(R::add(R::add(a, b), c), R::add(a, R::add(b, c))));
        CHECK(R::equal(R::mul(R::mul(a, b), c), R::mul(a, R::mul(b, c))));
        CHECK(R::equal(R::mul(a, R::add(b, c)), R::add(R::mul(a, b), R::mul(a, c))));
      }
    }
}

}  // namespace

TEST_CASE("semiring axioms hold on sampled elements") {
  check_semiring_axioms<IntSemiring>({-3, 0, 1, 2, 7});
  check_semiring_axioms<BoolSemiring>({0, 1});
  check_semiring_axioms<TropicalSemiring>({TropicalValue::of(0), TropicalValue::of(3),
                                           TropicalValue::of(-2), TropicalValue::infinity()});
  check_semiring_axioms<FloatSemiring>({0.0, 0.5, 1.0, 2.25});
}

TEST_CASE("semiring literal round trips") {
  CHECK(IntSemiring::parse("42") == 42);
  CHECK(!IntSemiring::parse("inf"));
  CHECK(TropicalSemiring::parse("inf") == TropicalValue::infinity());
  CHECK(TropicalSemiring::print(TropicalValue::infinity()) == "inf");
  CHECK(BoolSemiring::parse("true") == std::uint8_t{1});
  CHECK(FloatSemiring::parse("1.5e2") == 150.0);
  CHECK(!FloatSemiring::parse("nan"));
}

TEST_CASE("delta tensors materialize to generalized identities") {
  SUBCASE("order 0 is the scalar one") {
    auto d = materialize_delta<IntSemiring>(0, Shape());
    CHECK(d.shape() == Shape());
    CHECK(d.at_flat(0) == 1);
  }
  SUBCASE("order 1 is the unit matrix") {
    auto d = materialize_delta<IntSemiring>(1, Shape({2}));
    CHECK(d == testutil::make_tensor<std::int64_t>({2, 2}, {1, 0, 0, 1}));
  }
  SUBCASE("order 2: enumerate every position against the definition") {
    for (const Shape& half : {Shape({2, 2}), Shape({2, 3}), Shape({4, 2})}) {
      auto d = materialize_delta<IntSemiring>(2, half);
      CHECK(d.shape() == concat(half, half));
      for (std::int64_t p1 = 0; p1 < half.dim(0); ++p1)
        for (std::int64_t p2 = 0; p2 < half.dim(1); ++p2)
          for (std::int64_t q1 = 0; q1 < half.dim(0); ++q1)
            for (std::int64_t q2 = 0; q2 < half.dim(1); ++q2) {
              std::int64_t expect = (p1 == q1 && p2 == q2) ? 1 : 0;
              CHECK(d.at(std::vector<std::int64_t>{p1, p2, q1, q2}) == expect);
            }
    }
  }
}

TEST_CASE("all-ones tensors hold the combination identity of the active semiring") {
  CHECK(materialize_ones<IntSemiring>(Shape()).at_flat(0) == 1);
  CHECK(materialize_ones<IntSemiring>(Shape({3})) ==
        testutil::make_tensor<std::int64_t>({3}, {1, 1, 1}));
  auto trop = materialize_ones<TropicalSemiring>(Shape({2, 2}));
  for (std::size_t i = 0; i < trop.entry_count(); ++i)
    CHECK(trop.at_flat(i) == TropicalValue::of(0));
}

TEST_CASE("axis inference assigns one length per symbol") {
  SUBCASE("matrix product shapes") {
    auto e = parse_expression("#(ij,jk->ik; A, B)");
    AxisEnvironment env = infer_axes(*e, {{"A", Shape({2, 3})}, {"B", Shape({3, 4})}});
    CHECK(env.at(IndexSymbol::letter('i')) == 2);
    CHECK(env.at(IndexSymbol::letter('j')) == 3);
    CHECK(env.at(IndexSymbol::letter('k')) == 4);
  }
  SUBCASE("conflicting lengths are rejected") {
    auto e = parse_expression("#(ij,jk->ik; A, B)");
    try {
      infer_axes(*e, {{"A", Shape({2, 3})}, {"B", Shape({5, 4})}});
      FAIL("expected an axis mismatch");
    } catch (const EinsumError& err) {
      CHECK(err.code() == Errc::axis_mismatch);
      CHECK(std::string(err.what()).find("j") != std::string::npos);
      CHECK(std::string(err.what()).find("3") != std::string::npos);
      CHECK(std::string(err.what()).find("5") != std::string::npos);
    }
  }
  SUBCASE("duplicate output symbols share one axis") {
    auto e = parse_expression("#(i->ii; v)");
    AxisEnvironment env = infer_axes(*e, {{"v", Shape({4})}});
    CHECK(env.at(IndexSymbol::letter('i')) == 4);
  }
  SUBCASE("index string length must match the argument order") {
    auto e = parse_expression("#(ij->ij; v)");
    CHECK_THROWS_AS(infer_axes(*e, {{"v", Shape({4})}}), EinsumError);
  }
  SUBCASE("missing bindings are reported") {
    auto e = parse_expression("#(ij->ij; A)");
    try {
      infer_axes(*e, {});
      FAIL("expected unbound name");
    } catch (const EinsumError& err) {
      CHECK(err.code() == Errc::unbound_name);
    }
  }
}

TEST_CASE("validation lists violations instead of throwing") {
  SUBCASE("unbound output symbol names constraint III") {
    auto e = parse_expression("#(ij->ik; A)");
    auto report = validate(*e, {{"A", Shape({2, 2})}});
    REQUIRE(!report.valid());
    CHECK(report.violations[0].code == Errc::constraint_violation);
    CHECK(report.violations[0].message.find("constraint III") != std::string::npos);
  }
  SUBCASE("inner product validates") {
    auto e = parse_expression("#(i,i->; x, y)");
    CHECK(validate(*e, {{"x", Shape({3})}, {"y", Shape({3})}}).valid());
  }
  SUBCASE("scalar argument with the empty index string validates") {
    auto e = parse_expression("#( -> ; c)");
    CHECK(validate(*e, {{"c", Shape()}}).valid());
  }
  SUBCASE("aggregate terms must agree in shape") {
    auto e = parse_expression("(A + B)");
    auto report = validate(*e, {{"A", Shape({2})}, {"B", Shape({3})}});
    REQUIRE(!report.valid());
    CHECK(report.violations[0].code == Errc::shape_mismatch);
  }
  SUBCASE("delta axis lengths propagate through shared axes") {
    auto e = parse_expression("#(ab,bc,c->a; delta(1), delta(1), v)");
    CHECK(validate(*e, {{"v", Shape({3})}}).valid());
  }
  SUBCASE("unresolvable delta axis lengths are flagged") {
    auto e = parse_expression("#(ab->ab; delta(1))");
    auto report = validate(*e, {});
    REQUIRE(!report.valid());
    CHECK(report.violations[0].code == Errc::underdetermined_dims);
  }
}

TEST_CASE("every sub-einsum-expression of a valid expression is valid") {
  ExpressionGenerator gen(2024);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    auto g = gen.generate();
    REQUIRE(validate(*g.expr, g.shapes).valid());
    // walk the tree; each einsum subexpression must validate on its own
    std::vector<const Expr*> stack{g.expr.get()};
    while (!stack.empty()) {
      const Expr* e = stack.back();
      stack.pop_back();
      if (e->is_einsum()) {
        CHECK(validate(*e, g.shapes).valid());
        ++checked;
        for (const auto& a : e->as_einsum().args) stack.push_back(a.get());
      } else if (e->is_aggregate()) {
        for (const auto& t : e->as_aggregate().terms) stack.push_back(t.get());
      }
    }
  }
  CHECK(checked > 200);
}
