#pragma once

#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

namespace einsum {

// A semiring is a static policy type: carrier value_type, aggregation add
// (commutative, associative, identity zero) and combination mul (commutative,
// associative, identity one, zero annihilates), with mul distributing over add.
template <typename R>
concept SemiringLike = requires(typename R::value_type a, typename R::value_type b,
                                std::string_view s) {
  { R::zero() } -> std::same_as<typename R::value_type>;
  { R::one() } -> std::same_as<typename R::value_type>;
  { R::add(a, b) } -> std::same_as<typename R::value_type>;
  { R::mul(a, b) } -> std::same_as<typename R::value_type>;
  { R::equal(a, b) } -> std::same_as<bool>;
  { R::parse(s) } -> std::same_as<std::optional<typename R::value_type>>;
  { R::print(a) } -> std::same_as<std::string>;
  { R::name() } -> std::convertible_to<std::string_view>;
};

namespace detail {

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last) return std::nullopt;
  if (std::isnan(v) || std::isinf(v)) return std::nullopt;
  return v;
}

}  // namespace detail

// 64-bit integer arithmetic (+, *). The default semiring for exact testing.
struct IntSemiring {
  using value_type = std::int64_t;
  static std::string_view name() { return "int"; }
  static value_type zero() { return 0; }
  static value_type one() { return 1; }
  static value_type add(value_type a, value_type b) { return a + b; }
  static value_type mul(value_type a, value_type b) { return a * b; }
  static bool equal(value_type a, value_type b) { return a == b; }
  static std::optional<value_type> parse(std::string_view s) { return detail::parse_int(s); }
  static std::string print(value_type v) { return std::to_string(v); }
};

// Double arithmetic (+, *) with relative-tolerance equality.
struct FloatSemiring {
  using value_type = double;
  static constexpr double kRelTol = 1e-9;
  static std::string_view name() { return "float"; }
  static value_type zero() { return 0.0; }
  static value_type one() { return 1.0; }
  static value_type add(value_type a, value_type b) { return a + b; }
  static value_type mul(value_type a, value_type b) { return a * b; }
  static bool equal(value_type a, value_type b) {
    if (a == b) return true;
    return std::abs(a - b) <= kRelTol * std::max(std::abs(a), std::abs(b));
  }
  static std::optional<value_type> parse(std::string_view s) { return detail::parse_double(s); }
  static std::string print(value_type v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }
};

// Boolean semiring (or, and); values held as 0/1.
struct BoolSemiring {
  using value_type = std::uint8_t;
  static std::string_view name() { return "bool"; }
  static value_type zero() { return 0; }
  static value_type one() { return 1; }
  static value_type add(value_type a, value_type b) { return (a | b) ? 1 : 0; }
  static value_type mul(value_type a, value_type b) { return (a & b) ? 1 : 0; }
  static bool equal(value_type a, value_type b) { return a == b; }
  static std::optional<value_type> parse(std::string_view s) {
    if (s == "0" || s == "false") return value_type{0};
    if (s == "1" || s == "true") return value_type{1};
    return std::nullopt;
  }
  static std::string print(value_type v) { return v ? "1" : "0"; }
};

// Integer extended with +inf; +inf is the aggregation identity of min.
struct TropicalValue {
  std::int64_t finite = 0;
  bool inf = false;

  static TropicalValue of(std::int64_t v) { return {v, false}; }
  static TropicalValue infinity() { return {0, true}; }

  friend bool operator==(const TropicalValue&, const TropicalValue&) = default;
};

// Tropical min-plus semiring: aggregation = min, combination = +.
struct TropicalSemiring {
  using value_type = TropicalValue;
  static std::string_view name() { return "tropical"; }
  static value_type zero() { return TropicalValue::infinity(); }
  static value_type one() { return TropicalValue::of(0); }
  static value_type add(value_type a, value_type b) {
    if (a.inf) return b;
    if (b.inf) return a;
    return TropicalValue::of(a.finite < b.finite ? a.finite : b.finite);
  }
  static value_type mul(value_type a, value_type b) {
    if (a.inf || b.inf) return TropicalValue::infinity();
    return TropicalValue::of(a.finite + b.finite);
  }
  static bool equal(value_type a, value_type b) { return a == b; }
  static std::optional<value_type> parse(std::string_view s) {
    if (s == "inf") return TropicalValue::infinity();
    if (auto v = detail::parse_int(s)) return TropicalValue::of(*v);
    return std::nullopt;
  }
  static std::string print(value_type v) {
    return v.inf ? "inf" : std::to_string(v.finite);
  }
};

}  // namespace einsum
