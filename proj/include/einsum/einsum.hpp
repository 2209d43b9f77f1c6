#pragma once

// Umbrella header for the einsum expression library: format strings, the
// expression tree, validation, the reference evaluator over commutative
// semirings, the equivalence-preserving rewrite rules, and randomized
// equivalence checking.

#include "einsum/analyze.hpp"
#include "einsum/bindings.hpp"
#include "einsum/equivalence.hpp"
#include "einsum/errors.hpp"
#include "einsum/evaluator.hpp"
#include "einsum/expression.hpp"
#include "einsum/parser.hpp"
#include "einsum/rewrite.hpp"
#include "einsum/semiring.hpp"
#include "einsum/shape.hpp"
#include "einsum/symbols.hpp"
#include "einsum/tensor.hpp"
