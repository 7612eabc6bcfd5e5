#include <doctest.h>

#include "dglue/error.hpp"
#include "dglue/generators.hpp"
#include "dglue/section.hpp"

#include <cmath>
#include <limits>

using namespace dglue;

namespace {

const Expr X = Expr::variable();

Eigen::MatrixXd mat1(double v) {
    Eigen::MatrixXd m(1, 1);
    m << v;
    return m;
}

GluedSpace wedge() {
    return make_glued_space({"X1"}, {"X2"}, FinitePointsLocus{{{0.0, 0.0}}});
}

GluedSpace merge_pair() {
    return make_glued_space({"X1"}, {"X2"}, FinitePointsLocus{{{-1.0, 0.0}, {1.0, 0.0}}});
}

GluedBundle line_bundle(const GluedSpace& s, std::vector<double> weights) {
    auto v1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(1));
    auto v2 = make_trivial_bundle("V2", {"X2"}, FibreDescriptor::standard(1));
    std::vector<Eigen::MatrixXd> ms;
    for (double w : weights) ms.push_back(mat1(w));
    return glue_bundles(v1, v2, s, FibreMapFinite{std::move(ms)});
}

// The quotient example's bundle: rank-2 rough fibre forgetting its first
// coordinate into a rank-1 rough fibre, glued along the whole line.
GluedBundle forgetful_bundle() {
    const double inf = std::numeric_limits<double>::infinity();
    GluedSpace s = make_glued_space({"X1"}, {"X2"}, IntervalLocus{{-inf, inf}, X});
    Eigen::VectorXd diag(2);
    diag << 1.0, 1.0;
    auto v1 = make_trivial_bundle("V1", {"X1"},
                                  FibreDescriptor{2, {{diag, Expr::abs(X)}}});
    auto v2 = make_trivial_bundle(
        "V2", {"X2"}, FibreDescriptor{1, {{Eigen::VectorXd::Ones(1), Expr::abs(X)}}});
    return glue_bundles(v1, v2, s,
                        FibreMapInterval{{{Expr::constant(0.0), Expr::constant(1.0)}}});
}

Section sec1(const Expr& e) { return Section{"V1", {e}}; }
Section sec2(const Expr& e) { return Section{"V2", {e}}; }

} // namespace

TEST_CASE("is_compatible: spec examples") {
    GluedBundle g = line_bundle(wedge(), {1.0});
    CHECK(is_compatible(sec1(X), sec2(X), g).ok);
    CHECK(is_compatible(sec1(Expr::constant(0.0)), sec2(Expr::constant(0.0)), g).ok);

    CompatReport bad = is_compatible(sec1(Expr::constant(1.0)), sec2(X), g);
    CHECK(!bad.ok);
    CHECK(bad.worst == doctest::Approx(1.0));
}

TEST_CASE("is_invariant: spec examples") {
    GluedBundle inj = line_bundle(
        make_glued_space({"X1"}, {"X2"}, FinitePointsLocus{{{-1.0, 2.0}, {1.0, 3.0}}}),
        {1.0, 1.0});
    CHECK(is_invariant(sec1(Expr::exp(X)), inj).ok);

    GluedBundle g = line_bundle(merge_pair(), {1.0, 1.0});
    CHECK(!is_invariant(sec1(X), g).ok);
    CHECK(is_invariant(sec1(X.pow(2)), g).ok);
}

TEST_CASE("every section compatible with some s2 is invariant") {
    GluedBundle g = line_bundle(merge_pair(), {1.0, 1.0});
    Rng rng(4242);
    for (int t = 0; t < 20; ++t) {
        // compatible by construction: s1 even, s2 pinned at the image point
        Expr even = random_polynomial(rng).compose(X.pow(2));
        Expr s2 = random_smooth(rng);
        Expr pinned = s2 - Expr::constant(s2.eval(0.0)) + Expr::constant(even.eval(1.0));
        CHECK(is_compatible(sec1(even), sec2(pinned), g).ok);
        CHECK(is_invariant(sec1(even), g).ok);
    }
}

TEST_CASE("glue_sections_S: spec examples") {
    GluedBundle g = line_bundle(wedge(), {1.0});
    GluedSection s = glue_sections_S(sec1(X), sec2(X), g);
    CHECK(eval_glued_section(s, GluedPoint::first(2.0))(0) == 2.0);
    CHECK(eval_glued_section(s, GluedPoint::second(0.0))(0) == 0.0);

    GluedSection zero =
        glue_sections_S(sec1(Expr::constant(0.0)), sec2(Expr::constant(0.0)), g);
    CHECK(eval_glued_section(zero, GluedPoint::first(-3.0))(0) == 0.0);

    CHECK_THROWS_WITH_AS(
        (void)glue_sections_S(sec1(Expr::constant(1.0)), sec2(Expr::constant(0.0)), g),
        doctest::Contains("IncompatibleSections"), Error);
}

TEST_CASE("section_add and section_mul: spec examples") {
    GluedBundle g = line_bundle(wedge(), {1.0});
    GluedSection s = glue_sections_S(sec1(X), sec2(X), g);
    GluedSection zero =
        glue_sections_S(sec1(Expr::constant(0.0)), sec2(Expr::constant(0.0)), g);
    GluedSection sq = glue_sections_S(sec1(X.pow(2)), sec2(X.pow(2)), g);

    GluedSection splus0 = section_add(s, zero);
    for (double x : sample_grid({-3, 3}, 21))
        CHECK(eval_glued_section(splus0, GluedPoint::first(x)) ==
              eval_glued_section(s, GluedPoint::first(x)));

    CHECK(eval_glued_section(section_add(s, sq), GluedPoint::first(2.0))(0) == 6.0);

    GluedFunction h = glue_functions(X.pow(2), X.pow(2), wedge());
    CHECK(eval_glued_section(section_mul(h, s), GluedPoint::second(3.0))(0) == 27.0);

    // compatibility is preserved without rechecking
    CHECK(is_compatible(section_add(s, sq).s1, section_add(s, sq).s2, g).ok);
    CHECK(is_compatible(section_mul(h, s).s1, section_mul(h, s).s2, g).ok);
}

TEST_CASE("invariance closure under sum and f-invariant multiplication") {
    GluedBundle g = line_bundle(merge_pair(), {1.0, 1.0});
    Rng rng(515151);
    for (int t = 0; t < 20; ++t) {
        Expr s = random_polynomial(rng).compose(X.pow(2));
        Expr u = random_polynomial(rng).compose(X.pow(2));
        Expr h = random_polynomial(rng, 2).compose(X.pow(2));
        REQUIRE(is_invariant(sec1(s), g).ok);
        REQUIRE(is_f_invariant_function(h, g.base()).ok);
        CHECK(is_invariant(sec1(s + u), g).ok);
        CHECK(is_invariant(sec1(h * s), g).ok);
    }
}

TEST_CASE("tensor_sections: spec examples") {
    GluedBundle g = line_bundle(wedge(), {1.0});
    GluedSection s = glue_sections_S(sec1(X), sec2(X), g);
    GluedSection one =
        glue_sections_S(sec1(Expr::constant(1.0)), sec2(Expr::constant(1.0)), g);
    GluedSection sq = glue_sections_S(sec1(X.pow(2)), sec2(X.pow(2)), g);
    GluedSection zero =
        glue_sections_S(sec1(Expr::constant(0.0)), sec2(Expr::constant(0.0)), g);

    GluedTensorResult iso = tensor_sections(s, g, one, g);
    for (double x : sample_grid({-2, 2}, 9))
        CHECK(eval_glued_section(iso.section, GluedPoint::first(x))(0) ==
              doctest::Approx(x));

    GluedTensorResult cube = tensor_sections(s, g, sq, g);
    CHECK(eval_glued_section(cube.section, GluedPoint::first(2.0))(0) == 8.0);

    GluedTensorResult z = tensor_sections(zero, g, sq, g);
    CHECK(eval_glued_section(z.section, GluedPoint::first(1.5))(0) == 0.0);

    // the glued tensor of glued sections is the gluing of the tensors
    Rng rng(808);
    for (int t = 0; t < 10; ++t) {
        Expr a2 = random_smooth(rng);
        Expr a1 = Expr::constant(a2.eval(0.0)) + X * random_polynomial(rng, 2);
        Expr b2 = random_smooth(rng);
        Expr b1 = Expr::constant(b2.eval(0.0)) + X * random_polynomial(rng, 2);
        GluedSection sa = glue_sections_S(sec1(a1), sec2(a2), g);
        GluedSection sb = glue_sections_S(sec1(b1), sec2(b2), g);
        GluedTensorResult tr = tensor_sections(sa, g, sb, g);
        CHECK(is_compatible(tr.section.s1, tr.section.s2, tr.bundle).ok);
        for (double x : {-1.7, 0.4, 2.2}) {
            CHECK(eval_glued_section(tr.section, GluedPoint::first(x))(0) ==
                  doctest::Approx(a1.eval(x) * b1.eval(x)).epsilon(1e-12));
        }
    }

    GluedBundle other = line_bundle(merge_pair(), {1.0, 1.0});
    GluedSection so = glue_sections_S(sec1(X.pow(2)), sec2(Expr::constant(1.0)), other);
    CHECK_THROWS_WITH_AS((void)tensor_sections(s, g, so, other),
                         doctest::Contains("BaseMismatch"), Error);
}

TEST_CASE("S1: spec examples") {
    // trivial kernel and injective f: S1 is the identity
    GluedBundle inj = line_bundle(
        make_glued_space({"X1"}, {"X2"}, FinitePointsLocus{{{-1.0, 2.0}, {1.0, 3.0}}}),
        {1.0, 2.0});
    ReducedBundle rinj = reduced_bundle(inj);
    Section s = sec1(Expr::sin(X));
    ReducedSection rs = S1(s, rinj);
    for (double x : sample_grid({-3, 3}, 31))
        CHECK(eval_reduced(rs, rinj, x)(0) == doctest::Approx(std::sin(x)).epsilon(1e-14));

    // forgetful bundle: (x, |g|, |g|) reduces to (x, 0, |g|)
    GluedBundle forget = forgetful_bundle();
    ReducedBundle rf = reduced_bundle(forget);
    Expr absg = Expr::abs(X);
    Section rough{"V1", {absg, absg}};
    ReducedSection image = S1(rough, rf);
    REQUIRE(image.on_locus.has_value());
    for (double x : sample_grid({-4, 4}, 41)) {
        Eigen::VectorXd v = eval_reduced(image, rf, x);
        CHECK(v(0) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(v(1) == doctest::Approx(std::fabs(x)).epsilon(1e-14));
    }

    // merged class: the reduced value is the common class evaluation
    GluedBundle gm = line_bundle(merge_pair(), {1.0, 1.0});
    ReducedBundle rm = reduced_bundle(gm);
    ReducedSection rcls = S1(sec1(X.pow(2)), rm);
    CHECK(eval_reduced(rcls, rm, -1.0)(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(eval_reduced(rcls, rm, 1.0)(0) == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_WITH_AS((void)S1(sec1(X), rm), doctest::Contains("NotInvariant"),
                         Error);
}

TEST_CASE("S1_right_inverse: spec examples and round trip") {
    // trivial kernel: identity lift
    GluedBundle inj = line_bundle(
        make_glued_space({"X1"}, {"X2"}, FinitePointsLocus{{{-1.0, 2.0}, {1.0, 3.0}}}),
        {1.0, 2.0});
    ReducedBundle rinj = reduced_bundle(inj);
    ReducedSection rs = S1(sec1(Expr::exp(X)), rinj);
    LiftedSection lift = S1_right_inverse(rs, rinj);
    CHECK(lift.pure());
    for (double x : {-1.0, 0.3, 1.0})
        CHECK(eval_lifted(lift, inj.base(), x)(0) ==
              doctest::Approx(std::exp(x)).epsilon(1e-14));

    // forgetful bundle with the rough diagonal complement: (x,0,|g|) lifts to
    // (x,|g|,|g|) at the expression level
    GluedBundle forget = forgetful_bundle();
    ComplementChoice diag;
    Eigen::MatrixXd c(2, 1);
    c << 1.0, 1.0;
    diag.uniform = c;
    ReducedBundle rdiag = reduced_bundle(forget, diag);
    ReducedSection in = reduced_section_from_exprs({Expr::constant(0.0), Expr::abs(X)},
                                                   rdiag);
    LiftedSection up = S1_right_inverse(in, rdiag);
    REQUIRE(up.pure());
    REQUIRE(up.off_locus.size() == 2);
    auto grid = sample_grid(kStandardWindow, 65);
    CHECK(equal_on_samples(up.off_locus[0], Expr::abs(X), grid, 1e-15));
    CHECK(equal_on_samples(up.off_locus[1], Expr::abs(X), grid, 1e-15));

    // the lift is invariant and S1 of it returns the input exactly
    CHECK(is_invariant(Section{"V1", up.off_locus}, forget).ok);
    ReducedSection back = S1(Section{"V1", up.off_locus}, rdiag);
    for (double x : grid) {
        Eigen::VectorXd got = eval_reduced(back, rdiag, x);
        CHECK(std::fabs(got(0)) <= 1e-12);
        CHECK(got(1) == doctest::Approx(std::fabs(x)).epsilon(1e-12));
    }

    // default orthogonal complement and kernel e_y: the lift of (0, z) is itself
    ReducedBundle rorth = reduced_bundle(forget);
    ReducedSection in2 = reduced_section_from_exprs({Expr::constant(0.0), X.pow(2)},
                                                    rorth);
    LiftedSection same = S1_right_inverse(in2, rorth);
    CHECK(equal_on_samples(same.off_locus[0], Expr::constant(0.0), grid, 1e-15));
    CHECK(equal_on_samples(same.off_locus[1], X.pow(2), grid, 1e-15));
}

TEST_CASE("S1 additivity and module linearity over the reduced base") {
    GluedBundle g = line_bundle(merge_pair(), {1.0, 1.0});
    ReducedBundle r = reduced_bundle(g);
    Rng rng(66001);
    auto eval_pts = sample_grid({-3, 3}, 25);
    for (int t = 0; t < 10; ++t) {
        Expr a = random_polynomial(rng).compose(X.pow(2));
        Expr b = random_polynomial(rng).compose(X.pow(2));
        Expr h = random_polynomial(rng, 2).compose(X.pow(2));
        ReducedSection sa = S1(sec1(a), r);
        ReducedSection sb = S1(sec1(b), r);
        ReducedSection sum = S1(sec1(a + b), r);
        ReducedSection prod = S1(sec1(h * a), r);
        for (double x : eval_pts) {
            CHECK(eval_reduced(sum, r, x)(0) ==
                  doctest::Approx(eval_reduced(sa, r, x)(0) + eval_reduced(sb, r, x)(0))
                      .epsilon(1e-9));
            // h^f on the reduced base evaluates through any class member
            CHECK(eval_reduced(prod, r, x)(0) ==
                  doctest::Approx(h.eval(r.base().project(x)) * eval_reduced(sa, r, x)(0))
                      .epsilon(1e-9));
        }
    }
}

TEST_CASE("S1 kernel-blindness at a merged class") {
    // rank-2 fibre forgetting its second coordinate at both locus points
    GluedSpace s = merge_pair();
    auto v1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(2));
    auto v2 = make_trivial_bundle("V2", {"X2"}, FibreDescriptor::standard(1));
    Eigen::MatrixXd a(1, 2);
    a << 1.0, 0.0;
    GluedBundle g = glue_bundles(v1, v2, s, FibreMapFinite{{a, a}});
    ReducedBundle r = reduced_bundle(g);

    Section base{"V1", {X.pow(2), X.pow(2)}};
    // kernel-direction bump supported near y = -1 only:
    // hat(x) = max(0, 1/2 - |x+1|) built from abs nodes
    Expr half = Expr::constant(0.5);
    Expr t = half - Expr::abs(X + Expr::constant(1.0));
    Expr hat = (t + Expr::abs(t)) * half;
    Section bumped{"V1", {X.pow(2), X.pow(2) + hat}};

    REQUIRE(hat.eval(-1.0) == 0.5);
    REQUIRE(hat.eval(-0.2) == 0.0);
    REQUIRE(hat.eval(1.0) == 0.0);

    ReducedSection r0 = S1(base, r);
    ReducedSection r1 = S1(bumped, r);
    // identical at the merged class (the kernel component is quotiented away)
    CHECK((eval_reduced(r0, r, -1.0) - eval_reduced(r1, r, -1.0)).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((eval_reduced(r0, r, 1.0) - eval_reduced(r1, r, 1.0)).cwiseAbs().maxCoeff() ==
          0.0);
    // and identical wherever the bump vanishes, although the inputs differ
    for (double x : {-2.0, -0.2, 0.5, 2.0})
        CHECK((eval_reduced(r0, r, x) - eval_reduced(r1, r, x)).cwiseAbs().maxCoeff() ==
              0.0);
    CHECK((eval_section(base, -0.9) - eval_section(bumped, -0.9)).cwiseAbs().maxCoeff() >
          0.0);
}

TEST_CASE("rough coordinates are flagged per component") {
    Section s{"V1", {X.pow(2), Expr::abs(X) + X, Expr::sin(X)}};
    std::vector<bool> flags = s.rough_flags();
    REQUIRE(flags.size() == 3);
    CHECK(!flags[0]);
    CHECK(flags[1]);
    CHECK(!flags[2]);
}

TEST_CASE("dim_witness: spec examples") {
    DimWitness empty = dim_witness({});
    CHECK(empty.section.components[1].is_zero());
    WitnessCertificate ce = certify_dim_witness(empty, 99);
    CHECK(ce.ok);
    CHECK(ce.worst_match <= 1e-6);

    DimWitness one = dim_witness({0.0});
    auto [l, r] = one_sided_derivatives(one.section.components[1], 0.0, 1e-3);
    CHECK(l == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(r == doctest::Approx(1.0).epsilon(1e-10));

    DimWitness two = dim_witness({-1.0, 2.0});
    WitnessCertificate c2 = certify_dim_witness(two, 7);
    CHECK(c2.ok);
    CHECK(c2.min_gap >= 1.9);
    SingularSet kinks =
        singular_candidates(two.section.components[1], kStandardWindow);
    REQUIRE(kinks.size() == 2);
    CHECK(kinks[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(kinks[1] == doctest::Approx(2.0).epsilon(1e-9));

    CHECK_THROWS_WITH_AS((void)dim_witness({1.0, 1.0}),
                         doctest::Contains("DuplicatePoints"), Error);
}
