#pragma once

#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "einsum/analyze.hpp"
#include "einsum/evaluator.hpp"

namespace einsum {

// Bindings file: an object mapping tensor names to
//   {"shape": [d1, ...], "values": [row-major entries]}.
// Entries are numbers; the tropical semiring also accepts the string "inf".

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& err) {
    fail(Errc::io_error, "cannot parse '" + path + "': " + err.what());
  }
  return j;
}

namespace detail {

inline Shape shape_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array()) fail(Errc::io_error, "shape of '" + name + "' must be an array");
  std::vector<std::int64_t> dims;
  for (const auto& d : j) {
    if (!d.is_number_integer() || d.get<std::int64_t>() < 1)
      fail(Errc::io_error, "shape of '" + name + "' must hold positive integers");
    dims.push_back(d.get<std::int64_t>());
  }
  return Shape(std::move(dims));
}

template <SemiringLike R>
typename R::value_type value_from_json(const nlohmann::json& j, const std::string& name) {
  std::string token;
  if (j.is_string())
    token = j.get<std::string>();
  else
    token = j.dump();
  auto v = R::parse(token);
  if (!v)
    fail(Errc::invalid_literal, "value " + j.dump() + " in '" + name +
                                    "' is not an element of the " + std::string(R::name()) +
                                    " semiring");
  return *v;
}

}  // namespace detail

inline ShapeBindings shape_bindings_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(Errc::io_error, "bindings must be an object of name -> tensor");
  ShapeBindings out;
  for (const auto& [name, spec] : j.items()) {
    if (!spec.is_object() || !spec.contains("shape"))
      fail(Errc::io_error, "binding '" + name + "' needs a \"shape\" field");
    out.emplace(name, detail::shape_from_json(spec["shape"], name));
  }
  return out;
}

template <SemiringLike R>
TensorBindings<R> tensor_bindings_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(Errc::io_error, "bindings must be an object of name -> tensor");
  TensorBindings<R> out;
  for (const auto& [name, spec] : j.items()) {
    if (!spec.is_object() || !spec.contains("shape") || !spec.contains("values"))
      fail(Errc::io_error, "binding '" + name + "' needs \"shape\" and \"values\" fields");
    Shape shape = detail::shape_from_json(spec["shape"], name);
    const auto& values = spec["values"];
    if (!values.is_array() ||
        static_cast<std::int64_t>(values.size()) != shape.entry_count())
      fail(Errc::io_error, "binding '" + name + "' needs " + std::to_string(shape.entry_count()) +
                               " values for shape " + shape.str());
    std::vector<typename R::value_type> data;
    data.reserve(values.size());
    for (const auto& v : values) data.push_back(detail::value_from_json<R>(v, name));
    out.emplace(name, Tensor<typename R::value_type>(std::move(shape), std::move(data)));
  }
  return out;
}

template <SemiringLike R>
nlohmann::json tensor_to_json(const Tensor<typename R::value_type>& t) {
  nlohmann::json j;
  j["shape"] = t.shape().dims();
  nlohmann::json values = nlohmann::json::array();
  for (std::size_t i = 0; i < t.entry_count(); ++i) {
    if constexpr (std::is_same_v<R, IntSemiring>) {
      values.push_back(t.at_flat(i));
    } else if constexpr (std::is_same_v<R, FloatSemiring>) {
      values.push_back(t.at_flat(i));
    } else if constexpr (std::is_same_v<R, BoolSemiring>) {
      values.push_back(static_cast<bool>(t.at_flat(i)));
    } else {
      const auto& v = t.at_flat(i);
      if (v.inf)
        values.push_back("inf");
      else
        values.push_back(v.finite);
    }
  }
  j["values"] = std::move(values);
  return j;
}

template <SemiringLike R>
nlohmann::json bindings_to_json(const TensorBindings<R>& bindings) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, tensor] : bindings) j[name] = tensor_to_json<R>(tensor);
  return j;
}

// Human-readable one-line tensor rendering: shape, then row-major values.
template <SemiringLike R>
std::string format_tensor(const Tensor<typename R::value_type>& t) {
  std::string out = "shape: " + t.shape().str() + "\nvalues:";
  for (std::size_t i = 0; i < t.entry_count(); ++i) out += " " + R::print(t.at_flat(i));
  return out;
}

}  // namespace einsum
