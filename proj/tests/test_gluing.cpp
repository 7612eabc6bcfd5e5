#include <doctest.h>

#include "dglue/error.hpp"
#include "dglue/gluing.hpp"

#include <cmath>
#include <limits>

using namespace dglue;

namespace {

const Expr X = Expr::variable();

GluedSpace wedge() {
    return make_glued_space({"X1"}, {"X2"}, FinitePointsLocus{{{0.0, 0.0}}});
}

GluedSpace interval_gluing(double a, double b, const Expr& f) {
    return make_glued_space({"X1"}, {"X2"}, IntervalLocus{{a, b}, f});
}

} // namespace

TEST_CASE("make_glued_space: spec examples") {
    CHECK(wedge().finite_locus());
    CHECK(interval_gluing(0.0, 1.0, X).interval().domain.hi == 1.0);
    // f(x) = x^3 has f'(0) = 0, so it is not a diffeomorphism of [-1,1]
    CHECK_THROWS_WITH_AS(
        (void)interval_gluing(-1.0, 1.0, X.pow(3)),
        doctest::Contains("NonMonotoneGluingMap"), Error);
    CHECK_THROWS_WITH_AS(
        (void)make_glued_space({"X1"}, {"X2"},
                               FinitePointsLocus{{{0.0, 0.0}, {0.0, 1.0}}}),
        doctest::Contains("DuplicateLocusPoint"), Error);
    // per-point data (fibre maps) aligns positionally, so order is enforced
    CHECK_THROWS_WITH_AS(
        (void)make_glued_space({"X1"}, {"X2"},
                               FinitePointsLocus{{{1.0, 0.0}, {-1.0, 1.0}}}),
        doctest::Contains("UnsortedLocusPoints"), Error);
}

TEST_CASE("classify: spec examples") {
    GluedSpace w = wedge();
    CHECK(classify(w, 1, 1.0) == GluedPoint::first(1.0));
    CHECK(classify(w, 1, 0.0) == GluedPoint::second(0.0));

    GluedSpace g = interval_gluing(0.0, 1.0, Expr::constant(2.0) * X);
    CHECK(classify(g, 1, 0.5) == GluedPoint::second(1.0));
    CHECK(classify(g, 1, 2.0) == GluedPoint::first(2.0));
    CHECK(classify(g, 2, -1.0) == GluedPoint::second(-1.0));
}

TEST_CASE("classify is constant on glue classes") {
    GluedSpace s = make_glued_space(
        {"X1"}, {"X2"}, FinitePointsLocus{{{-1.0, 0.0}, {1.0, 0.0}, {2.0, 5.0}}});
    CHECK(classify(s, 1, -1.0) == classify(s, 1, 1.0));
    CHECK(classify(s, 1, 2.0) == GluedPoint::second(5.0));
}

TEST_CASE("glue_functions: spec examples") {
    GluedSpace w = wedge();
    GluedFunction ok = glue_functions(X.pow(2), Expr::sin(X), w);
    CHECK(ok.compatible);
    CHECK_THROWS_WITH_AS(
        (void)glue_functions(Expr::constant(1.0), Expr::constant(0.0), w),
        doctest::Contains("IncompatibleFunctions"), Error);
    CHECK(glue_functions(X, X, interval_gluing(0.0, 1.0, X)).compatible);
}

TEST_CASE("evaluate_glued_function: spec examples") {
    GluedSpace w = wedge();
    GluedFunction h = glue_functions(X.pow(2), Expr::sin(X), w);
    CHECK(evaluate_glued_function(h, GluedPoint::first(2.0)) == 4.0);
    CHECK(evaluate_glued_function(h, GluedPoint::second(0.0)) == 0.0);

    GluedFunction five =
        glue_functions(Expr::constant(5.0), Expr::constant(5.0), w);
    CHECK(evaluate_glued_function(five, GluedPoint::first(-3.25)) == 5.0);
    CHECK(evaluate_glued_function(five, GluedPoint::second(17.0)) == 5.0);
}

TEST_CASE("glued function evaluation agrees with the side-1 value on classes") {
    GluedSpace s = make_glued_space(
        {"X1"}, {"X2"}, FinitePointsLocus{{{-1.0, 1.0}, {2.0, 4.0}}});
    // h1(y) = y^2 matches h2(x) = x at both locus images exactly
    GluedFunction h = glue_functions(X.pow(2), X, s);
    for (double y : {-1.0, 2.0})
        CHECK(evaluate_glued_function(h, classify(s, 1, y)) == X.pow(2).eval(y));
}

TEST_CASE("glued_plot: spec examples") {
    GluedSpace w = wedge();
    GluedPlot p = glued_plot(w, X);
    CHECK(p(0.0) == GluedPoint::second(0.0));
    CHECK(p(2.5) == GluedPoint::first(2.5));
    CHECK(p(-1.0) == GluedPoint::first(-1.0));

    GluedPlot c = glued_plot(w, Expr::constant(0.0));
    CHECK(c(-7.0) == c(13.0)); // constant plots stay constant

    GluedSpace g = interval_gluing(0.0, 1.0, Expr::constant(2.0) * X);
    GluedPlot q = glued_plot(g, X);
    CHECK(q(0.5) == GluedPoint::second(1.0));
    CHECK(q(2.0) == GluedPoint::first(2.0));
}

TEST_CASE("quotient_base: spec examples") {
    GluedSpace merge = make_glued_space(
        {"X1"}, {"X2"}, FinitePointsLocus{{{-1.0, 0.0}, {1.0, 0.0}}});
    QuotientBase q = quotient_base(merge);
    REQUIRE(q.classes().size() == 1);
    CHECK(q.classes()[0] == std::vector<double>{-1.0, 1.0});
    CHECK(q.project(1.0) == -1.0);
    CHECK(q.project(0.5) == 0.5);

    GluedSpace inj = make_glued_space(
        {"X1"}, {"X2"}, FinitePointsLocus{{{-1.0, 2.0}, {1.0, 3.0}}});
    CHECK(quotient_base(inj).identity());

    GluedSpace mixed = make_glued_space(
        {"X1"}, {"X2"},
        FinitePointsLocus{{{0.0, 0.0}, {1.0, 0.0}, {2.0, 5.0}}});
    QuotientBase qm = quotient_base(mixed);
    REQUIRE(qm.classes().size() == 2);
    CHECK(qm.classes()[0] == std::vector<double>{0.0, 1.0});
    CHECK(qm.classes()[1] == std::vector<double>{2.0});
}

TEST_CASE("whole-line locus supports membership and preimages") {
    GluedSpace s = make_glued_space(
        {"X1"}, {"X2"},
        IntervalLocus{{-std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity()},
                      X});
    CHECK(s.in_domain(123.0));
    CHECK(classify(s, 1, 0.5) == GluedPoint::second(0.5));
    auto pre = s.preimages(-3.0);
    REQUIRE(pre.size() == 1);
    CHECK(pre[0] == doctest::Approx(-3.0).epsilon(1e-12));
}

TEST_CASE("delta demo reproduces the delta function") {
    DeltaDemo d = delta_demo();
    CHECK(d.value_at(0.0) == 1.0);
    CHECK(d.value_at(3.7) == 0.0);
    for (const auto& [x, v] : d.table) CHECK(v == (x == 0.0 ? 1.0 : 0.0));

    // the underlying plot takes the paper's local form
    GluedPlot p = d.plot();
    CHECK(p(0.0) == GluedPoint::second(0.0));
    CHECK(p(-2.5) == GluedPoint::first(-2.5));
}
