#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace einsum {

// Byte range into the source text a diagnostic refers to; end is exclusive.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

enum class Errc {
  syntax_error,
  constraint_violation,
  axis_mismatch,
  arity_mismatch,
  unbound_name,
  unassigned_symbol,
  underdetermined_dims,
  invalid_literal,
  shape_mismatch,
  invalid_permutation,
  precondition_violated,
  invalid_grouping,
  length_mismatch,
  not_nested,
  symbol_not_fresh,
  symbol_absent,
  not_a_delta,
  degenerate_delta,
  not_an_aggregate,
  not_factorable,
  not_identity,
  would_change_semantics,
  not_constant,
  malformed_path,
  target_in_use,
  unknown_semiring,
  io_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::syntax_error: return "syntax-error";
    case Errc::constraint_violation: return "constraint-violation";
    case Errc::axis_mismatch: return "axis-mismatch";
    case Errc::arity_mismatch: return "arity-mismatch";
    case Errc::unbound_name: return "unbound-name";
    case Errc::unassigned_symbol: return "unassigned-symbol";
    case Errc::underdetermined_dims: return "underdetermined-dims";
    case Errc::invalid_literal: return "invalid-literal";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::invalid_permutation: return "invalid-permutation";
    case Errc::precondition_violated: return "precondition-violated";
    case Errc::invalid_grouping: return "invalid-grouping";
    case Errc::length_mismatch: return "length-mismatch";
    case Errc::not_nested: return "not-nested";
    case Errc::symbol_not_fresh: return "symbol-not-fresh";
    case Errc::symbol_absent: return "symbol-absent";
    case Errc::not_a_delta: return "not-a-delta";
    case Errc::degenerate_delta: return "degenerate-delta";
    case Errc::not_an_aggregate: return "not-an-aggregate";
    case Errc::not_factorable: return "not-factorable";
    case Errc::not_identity: return "not-identity";
    case Errc::would_change_semantics: return "would-change-semantics";
    case Errc::not_constant: return "not-constant";
    case Errc::malformed_path: return "malformed-path";
    case Errc::target_in_use: return "target-in-use";
    case Errc::unknown_semiring: return "unknown-semiring";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

class EinsumError : public std::runtime_error {
 public:
  EinsumError(Errc code, std::string message, std::optional<SourceSpan> span = std::nullopt)
      : std::runtime_error(std::move(message)), code_(code), span_(span) {}

  Errc code() const noexcept { return code_; }
  const std::optional<SourceSpan>& span() const noexcept { return span_; }

 private:
  Errc code_;
  std::optional<SourceSpan> span_;
};

[[noreturn]] inline void fail(Errc code, std::string message,
                              std::optional<SourceSpan> span = std::nullopt) {
  throw EinsumError(code, std::move(message), span);
}

}  // namespace einsum
