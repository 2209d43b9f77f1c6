// Command-line surface over the einsum library: validate expressions, evaluate
// them against a bindings file, apply single rewrite rules, and check two
// expressions for semantic equivalence on random bindings.
//
// Exit codes: 0 success, 1 semantic failure (violations, counterexamples,
// evaluation or rewrite errors), 2 usage or parse errors.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "einsum/einsum.hpp"

namespace {

using nlohmann::json;

struct CliConfig {
  std::string expr_text;
  std::string expr_file;
  std::string second_expr;
  std::string bindings_path;
  std::string semiring = "int";
  std::string format = "human";
  std::string rule;
  bool verify = false;
  int trials = 32;
  std::uint64_t seed = 0;
  std::string dims;
  std::int64_t default_dim = 2;
  // rule arguments
  std::string perm, group, inner_output, symbol, fresh, occurrences, keep, indices, rule_dims,
      map, path;
  int slot = 0;  // 1-based; 0 = unset
};

bool structured(const CliConfig& cfg) { return cfg.format == "structured"; }

int usage_exit_code(einsum::Errc code) {
  switch (code) {
    case einsum::Errc::syntax_error:
    case einsum::Errc::io_error:
    case einsum::Errc::unknown_semiring:
      return 2;
    default:
      return 1;
  }
}

void emit_error(const CliConfig& cfg, const einsum::EinsumError& err) {
  if (structured(cfg)) {
    json j{{"error", errc_name(err.code())}, {"message", err.what()}};
    if (err.span()) j["span"] = {err.span()->begin, err.span()->end};
    std::cout << j.dump() << "\n";
  } else {
    std::cerr << "error (" << errc_name(err.code()) << "): " << err.what();
    if (err.span()) std::cerr << " [at " << err.span()->begin << ".." << err.span()->end << "]";
    std::cerr << "\n";
  }
}

std::string load_expression_text(const CliConfig& cfg) {
  if (!cfg.expr_file.empty()) {
    std::ifstream in(cfg.expr_file);
    if (!in) einsum::fail(einsum::Errc::io_error, "cannot open '" + cfg.expr_file + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  return cfg.expr_text;
}

einsum::DimAssignment parse_dim_assignment(const CliConfig& cfg) {
  einsum::DimAssignment dims;
  dims.default_dim = cfg.default_dim;
  std::stringstream ss(cfg.dims);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      einsum::fail(einsum::Errc::syntax_error, "--dims entries look like i=3");
    einsum::IndexString sym = einsum::IndexString::of(item.substr(0, eq));
    if (sym.size() != 1)
      einsum::fail(einsum::Errc::syntax_error, "--dims keys are single index symbols");
    auto v = einsum::detail::parse_int(item.substr(eq + 1));
    if (!v || *v < 1)
      einsum::fail(einsum::Errc::syntax_error, "--dims values are positive integers");
    dims.symbol_dims.insert_or_assign(sym[0], *v);
  }
  return dims;
}

std::vector<std::size_t> parse_position_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto v = einsum::detail::parse_int(item);
    if (!v || *v < 1)
      einsum::fail(einsum::Errc::syntax_error, std::string(what) + " takes 1-based positions");
    out.push_back(static_cast<std::size_t>(*v - 1));
  }
  if (out.empty()) einsum::fail(einsum::Errc::syntax_error, std::string(what) + " is empty");
  return out;
}

einsum::IndexSymbol parse_symbol(const std::string& text, const char* what) {
  einsum::IndexString s = einsum::IndexString::of(text);
  if (s.size() != 1)
    einsum::fail(einsum::Errc::syntax_error, std::string(what) + " takes one index symbol");
  return s[0];
}

std::vector<einsum::Occurrence> parse_occurrences(const std::string& text) {
  std::vector<einsum::Occurrence> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto colon = item.find(':');
    if (colon == std::string::npos)
      einsum::fail(einsum::Errc::syntax_error,
                   "--occurrences entries look like 2:1 (input:position) or out:1");
    std::string where = item.substr(0, colon);
    auto pos = einsum::detail::parse_int(item.substr(colon + 1));
    if (!pos || *pos < 1)
      einsum::fail(einsum::Errc::syntax_error, "--occurrences positions are 1-based");
    if (where == "out") {
      out.push_back(einsum::Occurrence::at_output(static_cast<std::size_t>(*pos - 1)));
    } else {
      auto input = einsum::detail::parse_int(where);
      if (!input || *input < 1)
        einsum::fail(einsum::Errc::syntax_error, "--occurrences inputs are 1-based");
      out.push_back(einsum::Occurrence::at_input(static_cast<std::size_t>(*input - 1),
                                                 static_cast<std::size_t>(*pos - 1)));
    }
  }
  return out;
}

einsum::DimSpec parse_dimspec(const std::string& text) {
  einsum::DimSpec out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "?") {
      out.push_back(std::nullopt);
      continue;
    }
    auto v = einsum::detail::parse_int(item);
    if (!v || *v < 1)
      einsum::fail(einsum::Errc::syntax_error, "--dims entries are positive integers or ?");
    out.push_back(*v);
  }
  return out;
}

template <typename F>
auto with_semiring(const std::string& name, F&& f) {
  if (name == "int") return f.template operator()<einsum::IntSemiring>();
  if (name == "float") return f.template operator()<einsum::FloatSemiring>();
  if (name == "bool") return f.template operator()<einsum::BoolSemiring>();
  if (name == "tropical") return f.template operator()<einsum::TropicalSemiring>();
  einsum::fail(einsum::Errc::unknown_semiring,
               "unknown semiring '" + name + "' (expected int, float, bool, or tropical)");
}

// ----------------------------------------------------------------------------

int cmd_validate(const CliConfig& cfg) {
  std::string text = load_expression_text(cfg);
  einsum::ParsedExpression parsed;
  try {
    parsed = einsum::parse_expression_with_spans(text);
  } catch (const einsum::EinsumError& expr_err) {
    // Not an expression: maybe a bare format string.
    try {
      einsum::parse_format(text);
      if (structured(cfg))
        std::cout << json{{"valid", true}}.dump() << "\n";
      else
        std::cout << "valid format string\n";
      return 0;
    } catch (const einsum::EinsumError& fmt_err) {
      if (fmt_err.code() == einsum::Errc::constraint_violation) {
        if (structured(cfg))
          std::cout << json{{"valid", false},
                            {"violations", json::array({fmt_err.what()})}}
                           .dump()
                    << "\n";
        else
          std::cout << "violation: " << fmt_err.what() << "\n";
        return 1;
      }
      throw expr_err;  // report the expression-level syntax error
    }
  }

  einsum::ValidityReport report;
  if (!cfg.bindings_path.empty()) {
    auto shapes = einsum::shape_bindings_from_json(einsum::load_json_file(cfg.bindings_path));
    report = einsum::validate(*parsed.expr, shapes);
  } else {
    report = einsum::validate_structure(*parsed.expr);
  }

  if (structured(cfg)) {
    json violations = json::array();
    for (const auto& v : report.violations) {
      json item{{"code", errc_name(v.code)}, {"message", v.message}};
      auto it = parsed.spans.find(v.where);
      if (it != parsed.spans.end()) item["span"] = {it->second.begin, it->second.end};
      violations.push_back(std::move(item));
    }
    std::cout << json{{"valid", report.valid()}, {"violations", std::move(violations)}}.dump()
              << "\n";
  } else {
    if (report.valid()) {
      std::cout << "valid\n";
    } else {
      for (const auto& v : report.violations) {
        std::cout << "violation: " << v.message;
        auto it = parsed.spans.find(v.where);
        if (it != parsed.spans.end())
          std::cout << " [at " << it->second.begin << ".." << it->second.end << "]";
        std::cout << "\n";
      }
    }
  }
  return report.valid() ? 0 : 1;
}

int cmd_eval(const CliConfig& cfg) {
  std::string text = load_expression_text(cfg);
  einsum::ExprPtr expr = einsum::parse_expression(text);
  json bindings_json = json::object();
  if (!cfg.bindings_path.empty()) bindings_json = einsum::load_json_file(cfg.bindings_path);
  return with_semiring(cfg.semiring, [&]<typename R>() {
    auto bindings = einsum::tensor_bindings_from_json<R>(bindings_json);
    auto result = einsum::eval<R>(*expr, bindings);
    if (structured(cfg))
      std::cout << einsum::tensor_to_json<R>(result).dump() << "\n";
    else
      std::cout << einsum::format_tensor<R>(result) << "\n";
    return 0;
  });
}

einsum::ExprPtr apply_rule(const CliConfig& cfg, const einsum::ExprPtr& expr) {
  using namespace einsum;
  const std::string& rule = cfg.rule;
  if (rule == "permute") {
    return permute_args(*expr, parse_position_list(cfg.perm, "--perm"));
  }
  if (rule == "restricted-denest") return restricted_denest(*expr);
  if (rule == "restricted-nest") {
    if (cfg.inner_output.empty())
      fail(Errc::syntax_error, "restricted-nest needs --inner-output");
    return restricted_nest(*expr, parse_position_list(cfg.group, "--group"),
                           IndexString::of(cfg.inner_output));
  }
  if (rule == "general-denest") {
    if (cfg.slot > 0) return general_denest_at(*expr, static_cast<std::size_t>(cfg.slot - 1));
    return general_denest(*expr);
  }
  if (rule == "delta-split") {
    auto occurrences = parse_occurrences(cfg.occurrences);
    return delta_split(*expr, parse_symbol(cfg.symbol, "--symbol"), occurrences,
                       parse_symbol(cfg.fresh, "--fresh"));
  }
  if (rule == "delta-merge") {
    if (cfg.slot < 1) fail(Errc::syntax_error, "delta-merge needs --slot");
    return delta_merge(*expr, static_cast<std::size_t>(cfg.slot - 1),
                       parse_symbol(cfg.keep, "--keep"));
  }
  if (rule == "distribute") {
    if (cfg.slot > 0) return distribute(*expr, static_cast<std::size_t>(cfg.slot - 1));
    return distribute(*expr);
  }
  if (rule == "factor") return factor(*expr);
  if (rule == "identity") return eliminate_identity(*expr);
  if (rule == "drop-ones") {
    if (cfg.slot < 1) fail(Errc::syntax_error, "drop-ones needs --slot");
    return drop_neutral_ones(*expr, static_cast<std::size_t>(cfg.slot - 1));
  }
  if (rule == "add-ones") return add_neutral_ones(*expr, IndexString::of(cfg.indices));
  if (rule == "vectorize-constant") {
    if (!cfg.rule_dims.empty())
      return vectorize_constant(*expr, parse_dimspec(cfg.rule_dims),
                                IndexString::of(cfg.indices));
    return vectorize_constant(*expr, IndexString::of(cfg.indices));
  }
  if (rule == "substitute-delta") return substitute_delta(*expr);
  if (rule == "normalize") {
    return with_semiring(cfg.semiring, [&]<typename R>() {
      return remove_deltas_and_constants<R>(expr);
    });
  }
  if (rule == "apply-path") return apply_contraction_path(*expr, ContractionPath::parse(cfg.path));
  if (rule == "rename") {
    SymbolMap map;
    std::stringstream ss(cfg.map);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      auto eq = item.find('=');
      if (eq == std::string::npos) fail(Errc::syntax_error, "--map entries look like i=p");
      map.set(parse_symbol(item.substr(0, eq), "--map"),
              parse_symbol(item.substr(eq + 1), "--map"));
    }
    return rename_symbols(*expr, map);
  }
  fail(Errc::syntax_error, "unknown rule '" + rule + "'");
}

int cmd_rewrite(const CliConfig& cfg) {
  std::string text = load_expression_text(cfg);
  einsum::ExprPtr expr = einsum::parse_expression(text);
  einsum::ExprPtr rewritten = apply_rule(cfg, expr);

  bool verified = false;
  if (cfg.verify) {
    einsum::EquivOptions opt;
    opt.trials = cfg.trials;
    opt.seed = cfg.seed;
    opt.dims = parse_dim_assignment(cfg);
    bool ok = with_semiring(cfg.semiring, [&]<typename R>() {
      auto report = einsum::check_equivalence<R>(*expr, *rewritten, opt);
      return report.equivalent;
    });
    if (!ok) {
      if (structured(cfg))
        std::cout << json{{"error", "verification-failed"},
                          {"expression", einsum::render(*rewritten)}}
                         .dump()
                  << "\n";
      else
        std::cerr << "error: rewrite is NOT semantically equivalent (counterexample found)\n";
      return 1;
    }
    verified = true;
  }

  if (structured(cfg)) {
    json j{{"expression", einsum::render(*rewritten)}};
    if (verified) j["verified"] = {{"trials", cfg.trials}};
    std::cout << j.dump() << "\n";
  } else {
    std::cout << einsum::render(*rewritten) << "\n";
  }
  return 0;
}

int cmd_equiv(const CliConfig& cfg) {
  einsum::ExprPtr lhs = einsum::parse_expression(load_expression_text(cfg));
  einsum::ExprPtr rhs = einsum::parse_expression(cfg.second_expr);
  einsum::EquivOptions opt;
  opt.trials = cfg.trials;
  opt.seed = cfg.seed;
  opt.dims = parse_dim_assignment(cfg);
  return with_semiring(cfg.semiring, [&]<typename R>() {
    try {
      auto report = einsum::check_equivalence<R>(*lhs, *rhs, opt);
      if (structured(cfg)) {
        json j{{"equivalent", report.equivalent},
               {"trials", report.trials_run},
               {"semiring", report.semiring}};
        if (report.counterexample) {
          j["counterexample"] = {
              {"bindings", einsum::bindings_to_json<R>(report.counterexample->bindings)},
              {"position", report.counterexample->position},
              {"lhs", R::print(report.counterexample->lhs)},
              {"rhs", R::print(report.counterexample->rhs)}};
        }
        std::cout << j.dump() << "\n";
      } else if (report.equivalent) {
        std::cout << "equal on all " << report.trials_run << " trials (" << report.semiring
                  << " semiring)\n";
      } else {
        const auto& ce = *report.counterexample;
        std::cout << "counterexample found after " << report.trials_run << " trials\n";
        std::cout << "bindings: " << einsum::bindings_to_json<R>(ce.bindings).dump() << "\n";
        std::cout << "position: " << json(ce.position).dump() << ", lhs = " << R::print(ce.lhs)
                  << ", rhs = " << R::print(ce.rhs) << "\n";
      }
      return report.equivalent ? 0 : 1;
    } catch (const einsum::EinsumError& err) {
      if (err.code() == einsum::Errc::shape_mismatch) {
        emit_error(cfg, err);
        return 2;
      }
      throw;
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"einsum expression language: validate, evaluate, rewrite, compare"};
  app.require_subcommand(1);
  CliConfig cfg;

  auto add_common = [&](CLI::App* sub, bool needs_expr) {
    if (needs_expr) {
      sub->add_option("expression", cfg.expr_text, "expression text");
      sub->add_option("--expr-file", cfg.expr_file, "read the expression from a file");
    }
    sub->add_option("--semiring", cfg.semiring, "int, float, bool, or tropical")
        ->default_val("int");
    sub->add_option("--format", cfg.format, "human or structured")->default_val("human");
  };

  CLI::App* validate = app.add_subcommand("validate", "check the validity constraints");
  add_common(validate, true);
  validate->add_option("--bindings", cfg.bindings_path, "JSON file with tensor shapes/values");

  CLI::App* eval = app.add_subcommand("eval", "evaluate an expression");
  add_common(eval, true);
  eval->add_option("--bindings", cfg.bindings_path, "JSON file with tensor values");

  CLI::App* rewrite = app.add_subcommand("rewrite", "apply one named rewrite rule");
  add_common(rewrite, true);
  rewrite->add_option("--rule", cfg.rule, "rule name")->required();
  rewrite->add_flag("--verify", cfg.verify, "check equivalence on random bindings");
  rewrite->add_option("--trials", cfg.trials, "verification trials")->default_val(32);
  rewrite->add_option("--seed", cfg.seed, "verification seed")->default_val(0);
  rewrite->add_option("--dims", cfg.dims, "per-symbol axis lengths, e.g. i=3,j=2");
  rewrite->add_option("--default-dim", cfg.default_dim, "axis length for unlisted symbols")
      ->default_val(2);
  rewrite->add_option("--perm", cfg.perm, "permute: 1-based argument order");
  rewrite->add_option("--group", cfg.group, "restricted-nest: 1-based operand positions");
  rewrite->add_option("--inner-output", cfg.inner_output, "restricted-nest: inner output string");
  rewrite->add_option("--slot", cfg.slot, "1-based operand position");
  rewrite->add_option("--symbol", cfg.symbol, "delta-split: symbol to split");
  rewrite->add_option("--fresh", cfg.fresh, "delta-split: fresh symbol");
  rewrite->add_option("--occurrences", cfg.occurrences,
                      "delta-split: entries input:pos or out:pos, 1-based");
  rewrite->add_option("--keep", cfg.keep, "delta-merge: surviving symbol");
  rewrite->add_option("--indices", cfg.indices, "index string argument");
  rewrite->add_option("--broadcast", cfg.rule_dims, "vectorize-constant: broadcast axis lengths");
  rewrite->add_option("--map", cfg.map, "rename: entries like i=p,j=q");
  rewrite->add_option("--path", cfg.path, "apply-path: contraction path, e.g. (2,3),(1,2)");

  CLI::App* equiv = app.add_subcommand("equiv", "compare two expressions on random bindings");
  add_common(equiv, true);
  equiv->add_option("expression2", cfg.second_expr, "second expression")->required();
  equiv->add_option("--trials", cfg.trials, "number of random trials")->default_val(32);
  equiv->add_option("--seed", cfg.seed, "random seed")->default_val(0);
  equiv->add_option("--dims", cfg.dims, "per-symbol axis lengths, e.g. i=3,j=2");
  equiv->add_option("--default-dim", cfg.default_dim, "axis length for unlisted symbols")
      ->default_val(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(validate)) return cmd_validate(cfg);
    if (app.got_subcommand(eval)) return cmd_eval(cfg);
    if (app.got_subcommand(rewrite)) return cmd_rewrite(cfg);
    if (app.got_subcommand(equiv)) return cmd_equiv(cfg);
  } catch (const einsum::EinsumError& err) {
    emit_error(cfg, err);
    return usage_exit_code(err.code());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 2;
}
