#include <doctest.h>

#include "dglue/bundle.hpp"
#include "dglue/error.hpp"

#include <cmath>
#include <limits>

using namespace dglue;

namespace {

const Expr X = Expr::variable();

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

GluedSpace wedge() {
    return make_glued_space({"X1"}, {"X2"}, FinitePointsLocus{{{0.0, 0.0}}});
}

GluedSpace whole_line() {
    const double inf = std::numeric_limits<double>::infinity();
    return make_glued_space({"X1"}, {"X2"}, IntervalLocus{{-inf, inf}, X});
}

// The rank-2 over rank-1 bundle of the quotient example: the fibre map kills
// the first fibre coordinate and keeps the second.
GluedBundle forgetful_bundle(const GluedSpace& s) {
    auto v1 = make_trivial_bundle(
        "V1", {"X1"},
        FibreDescriptor{2, {{vec2(1.0, 1.0), Expr::abs(X)}}});
    auto v2 = make_trivial_bundle(
        "V2", {"X2"}, FibreDescriptor{1, {{Eigen::VectorXd::Ones(1), Expr::abs(X)}}});
    if (s.finite_locus()) {
        std::vector<Eigen::MatrixXd> ms(s.finite().points.size(), mat({{0.0, 1.0}}));
        return glue_bundles(v1, v2, s, FibreMapFinite{ms});
    }
    return glue_bundles(v1, v2, s,
                        FibreMapInterval{{{Expr::constant(0.0), Expr::constant(1.0)}}});
}

} // namespace

TEST_CASE("fibre_dual_dim: spec examples") {
    CHECK(fibre_dual_dim(FibreDescriptor::standard(3)) == 3);

    FibreDescriptor rough_z{2, {{vec2(0.0, 1.0), Expr::abs(X)}}};
    CHECK(fibre_dual_dim(rough_z) == 1);

    FibreDescriptor rough_diag{2, {{vec2(1.0, 1.0), Expr::abs(X)}}};
    CHECK(fibre_dual_dim(rough_diag) == 1);
}

TEST_CASE("make_trivial_bundle validates the descriptor") {
    CHECK_THROWS_AS(
        (void)make_trivial_bundle("V", {"X"}, FibreDescriptor{0, {}}), Error);
    CHECK_THROWS_AS((void)make_trivial_bundle(
                        "V", {"X"}, FibreDescriptor{2, {{vec2(0.0, 0.0), Expr::abs(X)}}}),
                    Error);
    // a rough profile without an abs node generates nothing rough
    CHECK_THROWS_AS(
        (void)make_trivial_bundle("V", {"X"}, FibreDescriptor{2, {{vec2(0.0, 1.0), X}}}),
        Error);
}

TEST_CASE("glue_bundles: spec examples") {
    GluedSpace w = wedge();
    auto line1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(1));
    auto line2 = make_trivial_bundle("V2", {"X2"}, FibreDescriptor::standard(1));

    GluedBundle v = glue_bundles(line1, line2, w, FibreMapFinite{{mat({{1.0}})}});
    CHECK(v.rank1() == 1);
    CHECK(v.matrix_at(0.0)(0, 0) == 1.0);

    GluedBundle zero = glue_bundles(line1, line2, w, FibreMapFinite{{mat({{0.0}})}});
    CHECK(zero.matrix_at(0.0)(0, 0) == 0.0);

    auto plane1 = make_trivial_bundle("W1", {"X1"}, FibreDescriptor::standard(2));
    GluedBundle proj =
        glue_bundles(plane1, line2, w, FibreMapFinite{{mat({{1.0, 0.0}})}});
    CHECK(proj.rank1() == 2);
    CHECK(proj.rank2() == 1);

    CHECK_THROWS_WITH_AS(
        (void)glue_bundles(plane1, line2, w, FibreMapFinite{{mat({{1.0}})}}),
        doctest::Contains("ShapeMismatch"), Error);
    CHECK_THROWS_WITH_AS(
        (void)glue_bundles(line1, line2, w,
                           FibreMapInterval{{{Expr::constant(1.0)}}}),
        doctest::Contains("LocusMismatch"), Error);
}

TEST_CASE("kernel: spec examples") {
    GluedSpace w = wedge();
    auto line1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(1));
    auto line2 = make_trivial_bundle("V2", {"X2"}, FibreDescriptor::standard(1));

    GluedBundle invertible =
        glue_bundles(line1, line2, w, FibreMapFinite{{mat({{2.0}})}});
    CHECK(kernel(invertible).dimension_at(0.0) == 0);

    // the forgetful map (y, z) -> z kills exactly the y-direction
    GluedBundle forget = forgetful_bundle(whole_line());
    KernelSubBundle k = kernel(forget);
    CHECK(k.locus_dimension() == 1);
    Eigen::MatrixXd basis = k.basis_at(0.3);
    REQUIRE(basis.cols() == 1);
    CHECK(std::fabs(basis(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(basis(1, 0)) <= 1e-12);

    auto plane1 = make_trivial_bundle("W1", {"X1"}, FibreDescriptor::standard(2));
    auto plane2 = make_trivial_bundle("W2", {"X2"}, FibreDescriptor::standard(2));
    GluedBundle half = glue_bundles(plane1, plane2, w,
                                    FibreMapFinite{{mat({{1.0, 0.0}, {0.0, 0.0}})}});
    Eigen::MatrixXd b = kernel(half).basis_at(0.0);
    REQUIRE(b.cols() == 1);
    CHECK(std::fabs(b(1, 0)) == doctest::Approx(1.0).epsilon(1e-12));

    // A_y e_kernel = 0 within the rank tolerance
    CHECK((half.matrix_at(0.0) * b).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("kernel rejects rank jumps on interval loci") {
    GluedSpace s = make_glued_space({"X1"}, {"X2"}, IntervalLocus{{-1.0, 1.0}, X});
    auto v1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(1));
    auto v2 = make_trivial_bundle("V2", {"X2"}, FibreDescriptor::standard(1));
    // A(y) = [y] drops rank at y = 0
    GluedBundle g = glue_bundles(v1, v2, s, FibreMapInterval{{{X}}});
    CHECK_THROWS_WITH_AS((void)kernel(g), doctest::Contains("NonconstantRankOnInterval"),
                         Error);
}

TEST_CASE("quotient_bundle: spec examples") {
    GluedSpace w = wedge();
    auto line1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(1));
    auto line2 = make_trivial_bundle("V2", {"X2"}, FibreDescriptor::standard(1));

    // trivial kernel: the quotient is V1 itself
    GluedBundle invertible =
        glue_bundles(line1, line2, w, FibreMapFinite{{mat({{3.0}})}});
    QuotientBundle triv = quotient_bundle(invertible);
    CHECK(triv.trivial_kernel());
    Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    CHECK(triv.project(0.0, one)(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(triv.project(2.0, one)(0) == 1.0); // identity off the locus

    // forgetful map: cosets are represented on the z-line
    GluedBundle forget = forgetful_bundle(whole_line());
    QuotientBundle q = quotient_bundle(forget);
    Eigen::VectorXd v = vec2(0.7, -1.3);
    Eigen::VectorXd rep = q.project(0.0, v);
    CHECK(rep(0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(rep(1) == doctest::Approx(-1.3).epsilon(1e-14));
    // idempotent on fibres over the locus
    CHECK((q.project(0.0, rep) - rep).cwiseAbs().maxCoeff() <= 1e-14);

    // A = [1 1]: kernel span(1,-1), default complement span(1,1)
    auto plane1 = make_trivial_bundle("W1", {"X1"}, FibreDescriptor::standard(2));
    GluedBundle sum =
        glue_bundles(plane1, line2, w, FibreMapFinite{{mat({{1.0, 1.0}})}});
    QuotientBundle qs = quotient_bundle(sum);
    Eigen::VectorXd r = qs.project(0.0, vec2(1.0, 0.0));
    CHECK(r(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r(1) == doctest::Approx(0.5).epsilon(1e-12));

    // kernel and complement dimensions split the fibre rank
    KernelSubBundle ks = kernel(sum);
    Eigen::JacobiSVD<Eigen::MatrixXd> proj_svd(qs.projection_matrix_at(0.0));
    int complement_dim =
        static_cast<int>((proj_svd.singularValues().array() > kRankTol).count());
    CHECK(ks.dimension_at(0.0) + complement_dim == sum.rank1());
}

TEST_CASE("quotient_bundle rejects complements that meet the kernel") {
    GluedBundle forget = forgetful_bundle(wedge());
    ComplementChoice bad;
    bad.per_point[0.0] = mat({{1.0}, {0.0}}); // the kernel direction itself
    CHECK_THROWS_WITH_AS((void)quotient_bundle(forget, bad),
                         doctest::Contains("InvalidComplement"), Error);

    ComplementChoice diag;
    diag.per_point[0.0] = mat({{1.0}, {1.0}});
    QuotientBundle q = quotient_bundle(forget, diag);
    // the lift of the canonical representative (0, z) is (z, z)
    Eigen::VectorXd lifted = q.lift(0.0, vec2(0.0, 2.0));
    CHECK(lifted(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(lifted(1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("reduced_bundle: spec examples") {
    // injective f and invertible fibre map: everything is the identity
    GluedSpace inj = make_glued_space({"X1"}, {"X2"},
                                      FinitePointsLocus{{{-1.0, 2.0}, {1.0, 3.0}}});
    auto line1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(1));
    auto line2 = make_trivial_bundle("V2", {"X2"}, FibreDescriptor::standard(1));
    GluedBundle gb = glue_bundles(line1, line2, inj,
                                  FibreMapFinite{{mat({{1.0}}), mat({{1.0}})}});
    ReducedBundle rb = reduced_bundle(gb);
    CHECK(rb.base().identity());
    Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    CHECK(rb.reduce(-1.0, one)(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rb.reduce(0.25, one)(0) == 1.0);

    // class merge with equal fibre maps
    GluedSpace merge = make_glued_space({"X1"}, {"X2"},
                                        FinitePointsLocus{{{-1.0, 0.0}, {1.0, 0.0}}});
    GluedBundle gm = glue_bundles(line1, line2, merge,
                                  FibreMapFinite{{mat({{1.0}}), mat({{1.0}})}});
    ReducedBundle rm = reduced_bundle(gm);
    REQUIRE(rm.base().classes().size() == 1);
    CHECK(rm.reduce(1.0, one)(0) == doctest::Approx(1.0).epsilon(1e-12));

    // unequal maps are still consistent: cosets transport through the image
    GluedBundle g2 = glue_bundles(line1, line2, merge,
                                  FibreMapFinite{{mat({{1.0}}), mat({{2.0}})}});
    ReducedBundle r2 = reduced_bundle(g2);
    // v over y=1 has image 2v, i.e. class coordinates 2v at the representative
    CHECK(r2.reduce(1.0, one)(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r2.pushforward(1.0, r2.reduce(1.0, one))(0) ==
          doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("reduced_bundle rejects classes with mismatched fibre images") {
    GluedSpace merge = make_glued_space({"X1"}, {"X2"},
                                        FinitePointsLocus{{{-1.0, 0.0}, {1.0, 0.0}}});
    auto line1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(1));
    auto plane2 = make_trivial_bundle("V2", {"X2"}, FibreDescriptor::standard(2));
    GluedBundle g = glue_bundles(
        line1, plane2, merge,
        FibreMapFinite{{mat({{1.0}, {0.0}}), mat({{0.0}, {1.0}})}});
    CHECK_THROWS_WITH_AS((void)reduced_bundle(g),
                         doctest::Contains("InconsistentClassImages"), Error);
}
