#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

// End-to-end checks of the command-line binary: exit-code contract
// (0 success, 1 semantic failure, 2 usage/parse), output formats, and
// determinism under fixed seeds.

namespace {

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run(const std::string& args) {
  std::string cmd = std::string(CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
  int status = pclose(pipe);
  return {WEXITSTATUS(status), output};
}

const char* kBindingsFile = "/tmp/einsum_cli_test_bindings.json";

void write_bindings() {
  std::ofstream out(kBindingsFile);
  out << R"({"A": {"shape": [2, 2], "values": [1, 2, 3, 4]},
             "B": {"shape": [2, 2], "values": [5, 6, 7, 8]}})";
}

}  // namespace

TEST_CASE("validate: exit codes follow the contract") {
  CHECK(run("validate \"#(ij,jk->ik; A, B)\"").exit_code == 0);
  CHECK(run("validate \"ij,jk->ik\"").exit_code == 0);

  auto unbound = run("validate \"ij->ik\"");
  CHECK(unbound.exit_code == 1);
  CHECK(unbound.output.find("constraint III") != std::string::npos);

  auto unbound_expr = run("validate \"#(ij->ik; A)\"");
  CHECK(unbound_expr.exit_code == 1);
  CHECK(unbound_expr.output.find("constraint III") != std::string::npos);

  CHECK(run("validate \"ij,jk-ik\"").exit_code == 2);
  CHECK(run("validate \"#(ij,jk->ik; A\"").exit_code == 2);

  write_bindings();
  CHECK(run(std::string("validate --bindings ") + kBindingsFile + " \"#(ij,jk->ik; A, B)\"")
            .exit_code == 0);
  // inconsistent shapes under bindings
  std::ofstream(kBindingsFile) << R"({"A": {"shape": [2, 3], "values": [0,0,0,0,0,0]},
                                      "B": {"shape": [5, 4], "values":
                                      [0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}})";
  auto mismatch =
      run(std::string("validate --bindings ") + kBindingsFile + " \"#(ij,jk->ik; A, B)\"");
  CHECK(mismatch.exit_code == 1);
  CHECK(mismatch.output.find("axis mismatch") != std::string::npos);
}

TEST_CASE("eval: prints shape and row-major values") {
  write_bindings();
  auto human = run(std::string("eval --bindings ") + kBindingsFile + " \"#(ij,jk->ik; A, B)\"");
  CHECK(human.exit_code == 0);
  CHECK(human.output.find("shape: (2, 2)") != std::string::npos);
  CHECK(human.output.find("19 22 43 50") != std::string::npos);

  auto structured = run(std::string("eval --format structured --bindings ") + kBindingsFile +
                        " \"#(ij,jk->ik; A, B)\"");
  CHECK(structured.exit_code == 0);
  auto j = nlohmann::json::parse(structured.output);
  CHECK(j["shape"] == nlohmann::json({2, 2}));
  CHECK(j["values"] == nlohmann::json({19, 22, 43, 50}));

  SUBCASE("scalar results print a single value") {
    auto scalar = run("eval \"#( -> ; 5)\"");
    CHECK(scalar.exit_code == 0);
    CHECK(scalar.output.find("shape: ()") != std::string::npos);
    CHECK(scalar.output.find("values: 5") != std::string::npos);
  }
  SUBCASE("the semiring flag switches the semantics of the same input") {
    std::ofstream(kBindingsFile) << R"({"A": {"shape": [2, 2], "values": [0, 1, "inf", 0]},
                                        "B": {"shape": [2, 2], "values": [0, 5, 2, 0]}})";
    auto tropical = run(std::string("eval --semiring tropical --bindings ") + kBindingsFile +
                        " \"#(ij,jk->ik; A, B)\"");
    CHECK(tropical.exit_code == 0);
    CHECK(tropical.output.find("0 1 2 0") != std::string::npos);
    // the same bindings are rejected by the integer semiring
    auto integer = run(std::string("eval --semiring int --bindings ") + kBindingsFile +
                       " \"#(ij,jk->ik; A, B)\"");
    CHECK(integer.exit_code == 1);
  }
  SUBCASE("unbound names are semantic failures") {
    CHECK(run("eval \"#(ij->ij; Missing)\"").exit_code == 1);
  }
}

TEST_CASE("rewrite: applies one named rule and can verify it") {
  auto denest = run("rewrite --rule general-denest \"#(ik,kj->ij; A, #(i->ii; v))\"");
  CHECK(denest.exit_code == 0);
  CHECK(denest.output.find("A, v)") != std::string::npos);

  auto verified =
      run("rewrite --rule general-denest --verify --seed 3 \"#(ik,kj->ij; A, #(i->ii; v))\"");
  CHECK(verified.exit_code == 0);

  auto path = run("rewrite --rule apply-path --path \"(2,3),(1,2)\" "
                  "\"#(ij,jk,k->i; A, B, v)\"");
  CHECK(path.exit_code == 0);
  CHECK(path.output.find("#(ij,j->i; A, #(jk,k->j; B, v))") != std::string::npos);

  auto norm = run("rewrite --rule normalize \"#(ij,jk->ik; delta(1; 3), A)\"");
  CHECK(norm.exit_code == 0);
  CHECK(norm.output.find("delta") == std::string::npos);

  SUBCASE("precondition violations are semantic failures with reason codes") {
    auto not_id = run("rewrite --rule identity --format structured \"#(ii->ii; A)\"");
    CHECK(not_id.exit_code == 1);
    auto j = nlohmann::json::parse(not_id.output);
    CHECK(j["error"] == "not-identity");
    CHECK(j["message"].get<std::string>().find("duplicate-symbols") != std::string::npos);
  }
  SUBCASE("permute moves strings and arguments together") {
    auto p = run("rewrite --rule permute --perm 2,1 \"#(ij,jk->ik; A, B)\"");
    CHECK(p.exit_code == 0);
    CHECK(p.output.find("#(jk,ij->ik; B, A)") != std::string::npos);
  }
  SUBCASE("delta-split and delta-merge") {
    auto split =
        run("rewrite --rule delta-split --symbol i --fresh j --occurrences 1:2 \"#(ii->i; A)\"");
    CHECK(split.exit_code == 0);
    CHECK(split.output.find("#(ij,ij->i; delta(1), A)") != std::string::npos);
    auto merge =
        run("rewrite --rule delta-merge --slot 1 --keep i \"#(ij,ij->i; delta(1), A)\"");
    CHECK(merge.exit_code == 0);
    CHECK(merge.output.find("#(ii->i; A)") != std::string::npos);
  }
  SUBCASE("rename") {
    auto renamed = run("rewrite --rule rename --map i=p,j=q \"#(ij->ji; A)\"");
    CHECK(renamed.exit_code == 0);
    CHECK(renamed.output.find("#(pq->qp; A)") != std::string::npos);
  }
}

TEST_CASE("equiv: exit codes distinguish verdicts from errors") {
  auto equal = run("equiv --trials 50 --dims i=3,j=3,k=3 \"#(ij,jk,k->i; A, B, v)\" "
                   "\"#(ij,j->i; A, #(jk,k->j; B, v))\"");
  CHECK(equal.exit_code == 0);
  CHECK(equal.output.find("equal on all 50 trials") != std::string::npos);

  auto swapped = run("equiv \"#(ij,jk->ik; A, B)\" \"#(ij,jk->ik; B, A)\"");
  CHECK(swapped.exit_code == 1);
  CHECK(swapped.output.find("counterexample") != std::string::npos);

  auto mismatched = run("equiv --dims i=2,j=3 \"#(ij->ij; A)\" \"#(ij->ji; A)\"");
  CHECK(mismatched.exit_code == 2);

  SUBCASE("structured verdicts carry the counterexample") {
    auto j = nlohmann::json::parse(
        run("equiv --format structured --seed 5 \"#(ij,jk->ik; A, B)\" \"#(ij,jk->ik; B, A)\"")
            .output);
    CHECK(j["equivalent"] == false);
    CHECK(j.contains("counterexample"));
    CHECK(j["counterexample"].contains("bindings"));
  }
  SUBCASE("reports are deterministic given the seed") {
    std::string cmd = "equiv --format structured --seed 11 \"#(ij,jk->ik; A, B)\" "
                      "\"#(ij,jk->ik; B, A)\"";
    CHECK(run(cmd).output == run(cmd).output);
  }
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run("frobnicate").exit_code == 2);
  CHECK(run("eval --semiring galois \"#( -> ; 1)\"").exit_code == 2);
  CHECK(run("rewrite --rule no-such-rule \"A\"").exit_code == 2);
  CHECK(run("eval --bindings /nonexistent.json \"A\"").exit_code == 2);
}

TEST_CASE("the output format never changes the exit code") {
  const char* cases[] = {
      "validate \"#(ij,jk->ik; A, B)\"",
      "validate \"#(ij->ik; A)\"",
      "validate \"ij,jk-ik\"",
      "eval \"#( -> ; 5)\"",
      "eval \"#(ij->ij; Missing)\"",
      "rewrite --rule identity \"#(ii->ii; A)\"",
      "equiv \"#(ij,jk->ik; A, B)\" \"#(ij,jk->ik; B, A)\"",
  };
  for (const char* c : cases) {
    int human = run(std::string(c) + " --format human").exit_code;
    int structured = run(std::string(c) + " --format structured").exit_code;
    CHECK(human == structured);
  }
}

TEST_CASE("denesting a deeply shared handoff through the CLI") {
  auto r = run("rewrite --rule general-denest --verify --trials 16 "
               "\"#(a,b,c,d,e,abbcde->bc; v1, v2, v3, v4, v5, "
               "#(i,j,k,l->iijkkl; v6, v7, v8, v9))\"");
  CHECK(r.exit_code == 0);
  // nine flat operands in the original order
  CHECK(r.output.find("v1, v2, v3, v4, v5, v6, v7, v8, v9") != std::string::npos);
  CHECK(r.output.find("#(") == 0);
  CHECK(r.output.find("#(", 2) == std::string::npos);  // single flat node
}
