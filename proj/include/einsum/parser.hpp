#pragma once

#include <cctype>
#include <map>
#include <string>
#include <string_view>

#include "einsum/expression.hpp"

namespace einsum {

// Side table mapping nodes of a parsed expression back to source ranges.
using SpanTable = std::map<const Expr*, SourceSpan>;

struct ParsedExpression {
  ExprPtr expr;
  SpanTable spans;
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  FormatString format_only() {
    FormatString f = format();
    skip_ws();
    if (pos_ != text_.size()) error("unexpected trailing input");
    return f;
  }

  ParsedExpression expression_only() {
    ExprPtr e = expression();
    skip_ws();
    if (pos_ != text_.size()) error("unexpected trailing input");
    return {std::move(e), std::move(spans_)};
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  SpanTable spans_;

  [[noreturn]] void error(std::string message, std::size_t begin, std::size_t end) {
    fail(Errc::syntax_error, std::move(message), SourceSpan{begin, end});
  }

  [[noreturn]] void error(std::string message) {
    std::size_t b = std::min(pos_, text_.size());
    error(std::move(message), b, std::min(b + 1, text_.size()));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool try_consume(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!try_consume(c)) error(std::string("expected '") + c + "' " + what);
  }

  bool lookahead(std::string_view s) {
    skip_ws();
    return text_.substr(pos_, s.size()) == s;
  }

  IndexSymbol symbol() {
    skip_ws();
    char c = pos_ < text_.size() ? text_[pos_] : '\0';
    if (std::isalpha(static_cast<unsigned char>(c))) {
      ++pos_;
      return IndexSymbol::letter(c);
    }
    if (c == '{') {
      std::size_t begin = pos_;
      ++pos_;
      std::int64_t n = 0;
      bool any = false;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        n = n * 10 + (text_[pos_] - '0');
        ++pos_;
        any = true;
      }
      if (!any || pos_ >= text_.size() || text_[pos_] != '}')
        error("malformed index tag", begin, std::min(pos_ + 1, text_.size()));
      ++pos_;
      return IndexSymbol::tag(n);
    }
    error("expected an index symbol");
  }

  // Possibly empty run of symbols; stops before ',', '->', ';' or ')'.
  IndexString index_string() {
    std::vector<IndexSymbol> syms;
    while (true) {
      char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '{') {
        syms.push_back(symbol());
      } else {
        break;
      }
    }
    return IndexString(std::move(syms));
  }

  FormatString format() {
    FormatString f;
    f.inputs.push_back(index_string());
    while (true) {
      if (try_consume(',')) {
        f.inputs.push_back(index_string());
      } else if (lookahead("->")) {
        pos_ += 2;
        break;
      } else {
        error("expected ',' or '->' in format string");
      }
    }
    f.output = index_string();
    return f;
  }

  std::string number_literal() {
    skip_ws();
    std::size_t begin = pos_;
    if (pos_ < text_.size() && text_[pos_] == '-') ++pos_;
    bool digits = false;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
      digits = true;
    }
    if (!digits) error("expected a number", begin, std::min(pos_ + 1, text_.size()));
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      bool frac = false;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        frac = true;
      }
      if (!frac) error("digits expected after decimal point", begin, pos_);
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      bool exp = false;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        exp = true;
      }
      if (!exp) error("digits expected in exponent", begin, pos_);
    }
    return std::string(text_.substr(begin, pos_ - begin));
  }

  std::string identifier() {
    skip_ws();
    std::size_t begin = pos_;
    if (pos_ >= text_.size() ||
        !(std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      error("expected an identifier");
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    return std::string(text_.substr(begin, pos_ - begin));
  }

  std::optional<std::int64_t> dim_entry() {
    if (try_consume('?')) return std::nullopt;
    skip_ws();
    std::size_t begin = pos_;
    std::int64_t v = 0;
    bool any = false;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + (text_[pos_] - '0');
      ++pos_;
      any = true;
    }
    if (!any) error("expected an axis length or '?'");
    if (v < 1) error("axis lengths must be >= 1", begin, pos_);
    return v;
  }

  DimSpec dim_list(char closer) {
    DimSpec dims;
    if (peek() == closer) return dims;
    dims.push_back(dim_entry());
    while (try_consume(',')) dims.push_back(dim_entry());
    return dims;
  }

  ExprPtr record(ExprPtr e, std::size_t begin) {
    spans_[e.get()] = SourceSpan{begin, pos_};
    return e;
  }

  ExprPtr expression() {
    skip_ws();
    std::size_t begin = pos_;
    char c = peek();
    if (c == '#') return einsum_node();
    if (c == '(') return aggregate_or_group();
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c)))
      return record(Expr::scalar(number_literal()), begin);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string id = identifier();
      if (id == "delta") return delta_leaf(begin);
      if (id == "ones") return ones_leaf(begin);
      if (id == "inf") return record(Expr::scalar("inf"), begin);
      return record(Expr::named(std::move(id)), begin);
    }
    error("expected an expression");
  }

  ExprPtr einsum_node() {
    skip_ws();
    std::size_t begin = pos_;
    expect('#', "to start an einsum expression");
    expect('(', "after '#'");
    FormatString f = format();
    expect(';', "between format string and arguments");
    std::vector<ExprPtr> args;
    args.push_back(expression());
    while (try_consume(',')) args.push_back(expression());
    expect(')', "to close the einsum expression");
    if (f.inputs.size() != args.size())
      fail(Errc::arity_mismatch,
           "format string lists " + std::to_string(f.inputs.size()) + " inputs but " +
               std::to_string(args.size()) + " arguments follow",
           SourceSpan{begin, pos_});
    return record(Expr::einsum(std::move(f), std::move(args)), begin);
  }

  ExprPtr aggregate_or_group() {
    skip_ws();
    std::size_t begin = pos_;
    expect('(', "to open a group");
    std::vector<ExprPtr> terms;
    terms.push_back(expression());
    while (try_consume('+')) terms.push_back(expression());
    expect(')', "to close the group");
    if (terms.size() == 1) return terms[0];  // plain grouping
    return record(Expr::aggregate(std::move(terms)), begin);
  }

  ExprPtr delta_leaf(std::size_t begin) {
    expect('(', "after 'delta'");
    skip_ws();
    std::size_t obegin = pos_;
    std::size_t order = 0;
    bool any = false;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      order = order * 10 + static_cast<std::size_t>(text_[pos_] - '0');
      ++pos_;
      any = true;
    }
    if (!any) error("expected the delta order", obegin, std::min(pos_ + 1, text_.size()));
    DimSpec dims;
    if (try_consume(';'))
      dims = dim_list(')');
    else
      dims = unknown_dims(order);
    expect(')', "to close 'delta'");
    if (dims.size() != order)
      fail(Errc::length_mismatch,
           "delta(" + std::to_string(order) + ") declares " + std::to_string(dims.size()) +
               " axis lengths",
           SourceSpan{begin, pos_});
    return record(Expr::delta(order, std::move(dims)), begin);
  }

  ExprPtr ones_leaf(std::size_t begin) {
    expect('(', "after 'ones'");
    DimSpec dims = dim_list(')');
    expect(')', "to close 'ones'");
    return record(Expr::ones(std::move(dims)), begin);
  }
};

}  // namespace detail

// Parses a bare format string and enforces constraint III on it.
inline FormatString parse_format(std::string_view text) {
  detail::Parser p(text);
  FormatString f = p.format_only();
  SymbolSet bound = f.input_symbols();
  for (const auto& s : f.output)
    if (!bound.count(s))
      fail(Errc::constraint_violation,
           "constraint III: output symbol " + s.str() + " does not appear in any input string");
  return f;
}

inline ParsedExpression parse_expression_with_spans(std::string_view text) {
  detail::Parser p(text);
  return p.expression_only();
}

inline ExprPtr parse_expression(std::string_view text) {
  return parse_expression_with_spans(text).expr;
}

namespace detail {

inline std::string render_dimspec(const DimSpec& dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ",";
    out += dims[i] ? std::to_string(*dims[i]) : "?";
  }
  return out;
}

}  // namespace detail

// Canonical single-line rendering; parse_expression(render(e)) reproduces e
// structurally for every expression the generator emits.
inline std::string render(const Expr& e) {
  if (e.is_named()) return e.as_named().name;
  if (e.is_scalar()) return e.as_scalar().literal;
  if (e.is_ones()) return "ones(" + detail::render_dimspec(e.as_ones().dims) + ")";
  if (e.is_delta()) {
    const auto& d = e.as_delta();
    std::string out = "delta(" + std::to_string(d.order);
    bool all_unknown = true;
    for (const auto& v : d.dims)
      if (v) all_unknown = false;
    if (!d.dims.empty() && !all_unknown) out += "; " + detail::render_dimspec(d.dims);
    return out + ")";
  }
  if (e.is_aggregate()) {
    const auto& agg = e.as_aggregate();
    std::string out = "(";
    for (std::size_t i = 0; i < agg.terms.size(); ++i) {
      if (i) out += " + ";
      out += render(*agg.terms[i]);
    }
    return out + ")";
  }
  const auto& node = e.as_einsum();
  std::string out = "#(" + node.format.str() + ";";
  for (std::size_t i = 0; i < node.args.size(); ++i) {
    out += i ? ", " : " ";
    out += render(*node.args[i]);
  }
  return out + ")";
}

inline std::string render(const ExprPtr& e) { return render(*e); }

}  // namespace einsum
