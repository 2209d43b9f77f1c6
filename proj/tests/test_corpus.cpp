#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "einsum/einsum.hpp"

// Replays the golden files under corpus/: fixed evaluations, rewrite results
// compared up to alpha-equivalence, and randomized equivalence verdicts.

using namespace einsum;
using nlohmann::json;

namespace {

DimAssignment dims_from(const json& check) {
  DimAssignment dims;
  if (check.contains("dims"))
    for (const auto& [key, value] : check["dims"].items())
      dims.symbol_dims.insert_or_assign(IndexString::of(key)[0], value.get<std::int64_t>());
  return dims;
}

ExprPtr apply_named_rule(const json& check, const ExprPtr& expr, const std::string& semiring) {
  const std::string rule = check["rule"];
  if (rule == "restricted-denest") return restricted_denest(*expr);
  if (rule == "general-denest") return general_denest(*expr);
  if (rule == "distribute") return distribute(*expr);
  if (rule == "factor") return factor(*expr);
  if (rule == "identity") return eliminate_identity(*expr);
  if (rule == "substitute-delta") return substitute_delta(*expr);
  if (rule == "drop-ones")
    return drop_neutral_ones(*expr, check["slot"].get<std::size_t>() - 1);
  if (rule == "add-ones")
    return add_neutral_ones(*expr, IndexString::of(check["indices"].get<std::string>()));
  if (rule == "apply-path")
    return apply_contraction_path(*expr, ContractionPath::parse(check["path"].get<std::string>()));
  if (rule == "normalize") {
    if (semiring == "tropical") return remove_deltas_and_constants<TropicalSemiring>(expr);
    if (semiring == "bool") return remove_deltas_and_constants<BoolSemiring>(expr);
    if (semiring == "float") return remove_deltas_and_constants<FloatSemiring>(expr);
    return remove_deltas_and_constants<IntSemiring>(expr);
  }
  FAIL("corpus uses unknown rule ", rule);
  return expr;
}

template <SemiringLike R>
void run_file(const json& doc) {
  TensorBindings<R> file_bindings;
  if (doc.contains("bindings")) file_bindings = tensor_bindings_from_json<R>(doc["bindings"]);

  for (const auto& check : doc["checks"]) {
    const std::string type = check["type"];
    CAPTURE(check.dump());
    if (type == "eval") {
      TensorBindings<R> bindings = file_bindings;
      if (check.contains("bindings")) {
        auto extra = tensor_bindings_from_json<R>(check["bindings"]);
        for (auto& [name, tensor] : extra) bindings.insert_or_assign(name, std::move(tensor));
      }
      auto expr = parse_expression(check["expression"].get<std::string>());
      auto got = eval<R>(*expr, bindings);
      auto want = tensor_bindings_from_json<R>(json{{"want", check["expect"]}}).at("want");
      CHECK(tensors_equal<R>(got, want));
    } else if (type == "rewrite") {
      auto expr = parse_expression(check["expression"].get<std::string>());
      auto got = apply_named_rule(check, expr, doc.value("semiring", "int"));
      auto want = parse_expression(check["expect_alpha"].get<std::string>());
      CHECK_MESSAGE(alpha_equal(*got, *want), render(*got), " !~ ", render(*want));
    } else if (type == "equiv" || type == "counterexample") {
      EquivOptions opt;
      opt.dims = dims_from(check);
      opt.trials = check.value("trials", 32);
      auto lhs = parse_expression(check["lhs"].get<std::string>());
      auto rhs = parse_expression(check["rhs"].get<std::string>());
      auto report = check_equivalence<R>(*lhs, *rhs, opt);
      if (type == "equiv")
        CHECK(report.equivalent);
      else
        CHECK(!report.equivalent);
    } else {
      FAIL("corpus uses unknown check type ", type);
    }
  }
}

}  // namespace

TEST_CASE("golden corpus replays cleanly") {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(CORPUS_DIR))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  REQUIRE(files.size() >= 6);

  for (const auto& path : files) {
    json doc = load_json_file(path.string());
    INFO("corpus file: ", path.filename().string());
    const std::string semiring = doc.value("semiring", "int");
    if (semiring == "int")
      run_file<IntSemiring>(doc);
    else if (semiring == "float")
      run_file<FloatSemiring>(doc);
    else if (semiring == "bool")
      run_file<BoolSemiring>(doc);
    else if (semiring == "tropical")
      run_file<TropicalSemiring>(doc);
    else
      FAIL("unknown semiring in corpus file");
  }
}
