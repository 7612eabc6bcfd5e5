#include <doctest.h>

#include "dglue/cli.hpp"
#include "dglue/error.hpp"
#include "dglue/presentation.hpp"

#include <fstream>

using namespace dglue;

TEST_CASE("the shipped wedge presentation parses and validates") {
    Presentation p = parse_presentation("fixtures/wedge.dg");
    CHECK(p.space.finite_locus());
    REQUIRE(p.bundle.has_value());
    CHECK(p.bundle->rank1() == 1);
    CHECK(p.metrics.size() == 2);
    CHECK(p.connections.size() == 2);
    CHECK(p.checks.size() == 6);

    // the Levi-Civita seed produced Γ = h'/(2h)
    const Connection& n1 = p.connection("n1");
    CHECK(n1.gamma[0][0].eval(1.0) == doctest::Approx(1.0 / 2.0 / 2.0 * 2.0).epsilon(1e-12));
}

TEST_CASE("presentation validation failures carry codes") {
    CHECK_THROWS_WITH_AS((void)parse_presentation("fixtures/bad_empty_gluing.dg"),
                         doctest::Contains("ValidationError"), Error);
    // the spec's division-domain example: a Christoffel entry 1/x
    CHECK_THROWS_WITH_AS((void)parse_presentation("fixtures/bad_division.dg"),
                         doctest::Contains("denominator"), Error);
    CHECK_THROWS_WITH_AS((void)parse_presentation("fixtures/missing.dg"),
                         doctest::Contains("ParseError"), Error);
    CHECK_THROWS_WITH_AS((void)parse_presentation_text("{not json"),
                         doctest::Contains("ParseError"), Error);

    // non-monotone interval gluing surfaces as a validation error naming the law
    const char* bad = R"({
      "pieces": [{"id": "A"}, {"id": "B"}],
      "gluing": {"type": "interval", "a": -1.0, "b": 1.0, "map": "x^3"}
    })";
    CHECK_THROWS_WITH_AS((void)parse_presentation_text(bad),
                         doctest::Contains("NonMonotoneGluingMap"), Error);
}

TEST_CASE("check command runs the wedge file clean") {
    cli::Options opts;
    cli::RunReport report = cli::run_check("fixtures/wedge.dg", opts);
    CHECK(report.all_pass());
    CHECK(report.checks.size() == 8); // parse + reduced_bundle + 6 named checks
}

TEST_CASE("check command handles interval gluings") {
    cli::Options opts;
    cli::RunReport report = cli::run_check("fixtures/interval.dg", opts);
    CHECK(report.all_pass());
    // identical Christoffel data on the overlap is required and sufficient,
    // so the induced connection assembles as well
    CHECK(cli::run_induce("fixtures/interval.dg", opts).all_pass());
}

TEST_CASE("reports are byte-identical for a fixed seed") {
    cli::Options opts;
    opts.seed = 7;
    std::string a = cli::run_suite("leibniz", opts).to_json_text();
    std::string b = cli::run_suite("leibniz", opts).to_json_text();
    CHECK(a == b);

    opts.seed = 8;
    std::string c = cli::run_suite("leibniz", opts).to_json_text();
    CHECK(a != c); // the seed is recorded, so reports differ across seeds
}

TEST_CASE("suites pass at their documented thresholds") {
    cli::Options opts;
    opts.seed = 7;
    CHECK(cli::run_suite("leibniz", opts).all_pass());
    CHECK(cli::run_suite("metric", opts).all_pass());
    CHECK(cli::run_suite("compat", opts).all_pass());
}

TEST_CASE("demos certify their tables") {
    cli::Options opts;
    std::string table;
    cli::RunReport delta = cli::run_demo("delta", opts, &table);
    CHECK(delta.all_pass());
    CHECK(table.find("h(p(x))") != std::string::npos);

    cli::RunReport wedge = cli::run_demo("wedge", opts);
    CHECK(wedge.all_pass());

    cli::RunReport witness = cli::run_demo("dim-witness", opts);
    CHECK(witness.all_pass());
}

TEST_CASE("induce-connection prints the three-branch formula") {
    cli::Options opts;
    std::string formula;
    cli::RunReport rep = cli::run_induce("fixtures/wedge.dg", opts, &formula);
    CHECK(rep.all_pass());
    CHECK(formula.find("i1(X1\\Y)") != std::string::npos);
    CHECK(formula.find("i2(f(Y))") != std::string::npos);
    CHECK(formula.find("Γ1") != std::string::npos);
}

TEST_CASE("cli entry point dispatches and returns exit codes") {
    CHECK(cli::run({"demo", "delta"}) == 0);
    CHECK(cli::run({"suite", "leibniz", "--seed", "7", "--samples", "64", "--tol",
                    "1e-9"}) == 0);
    CHECK(cli::run({"check", "fixtures/bad_division.dg"}) == 2);
    CHECK(cli::run({"demo", "no-such-demo"}) == 2);
}

TEST_CASE("the complement flag drives the quotient splitting") {
    // valid override: span(1,1) misses the kernel e2 of the fibre map [1 0]
    CHECK(cli::run({"check", "fixtures/kernel.dg", "--complement", "0=1,1"}) == 0);
    // the kernel direction itself is rejected
    CHECK(cli::run({"check", "fixtures/kernel.dg", "--complement", "0=0,1"}) == 1);
    // malformed values are a validation error, not a crash
    CHECK(cli::run({"check", "fixtures/kernel.dg", "--complement", "abc=1"}) == 2);
    CHECK(cli::run({"check", "fixtures/kernel.dg", "--complement", "0=oops"}) == 2);
}

TEST_CASE("report files are written when requested") {
    cli::Options opts;
    opts.report_path = "report_test.json";
    (void)cli::run({"demo", "delta", "--report", "report_test.json"});
    std::ifstream in("report_test.json");
    REQUIRE(in.good());
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    CHECK(content.find("\"schema_version\": 1") != std::string::npos);
    CHECK(content.find("delta_at_zero_is_one") != std::string::npos);
}
