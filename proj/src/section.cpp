#include "dglue/section.hpp"

#include "dglue/error.hpp"
#include "dglue/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dglue {

std::vector<bool> Section::rough_flags() const {
    std::vector<bool> flags;
    flags.reserve(components.size());
    for (const Expr& c : components) flags.push_back(c.has_abs());
    return flags;
}

Eigen::VectorXd eval_section(const Section& s, double x) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(s.components.size()));
    for (size_t i = 0; i < s.components.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = s.components[i].eval(x);
    return v;
}

namespace {

std::vector<double> locus_samples(const GluedSpace& s) {
    if (s.finite_locus()) {
        std::vector<double> ys;
        for (const auto& [y, fy] : s.finite().points) ys.push_back(y);
        return ys;
    }
    Interval dom = s.interval().whole_line() ? kStandardWindow : s.interval().domain;
    return sample_grid(dom, kCompatibilitySamples + 2);
}

void check_rank(const Section& s, int rank, const char* what) {
    if (static_cast<int>(s.components.size()) != rank)
        fail("ShapeMismatch", std::string(what) + ": expected " + std::to_string(rank) +
                                  " components, got " +
                                  std::to_string(s.components.size()));
}

} // namespace

CompatReport is_compatible(const Section& s1, const Section& s2, const GluedBundle& g,
                           double tol) {
    check_rank(s1, g.rank1(), "side-1 section");
    check_rank(s2, g.rank2(), "side-2 section");
    CompatReport rep;
    for (double y : locus_samples(g.base())) {
        double fy = g.base().map_point(y);
        double res =
            (g.matrix_at(y) * eval_section(s1, y) - eval_section(s2, fy)).cwiseAbs().maxCoeff();
        if (res > rep.worst) {
            rep.worst = res;
            rep.at = y;
        }
    }
    rep.ok = rep.worst <= tol;
    return rep;
}

CompatReport is_invariant(const Section& s1, const GluedBundle& g, double tol) {
    check_rank(s1, g.rank1(), "side-1 section");
    CompatReport rep;
    if (!g.base().finite_locus()) return rep; // f injective: nothing to compare
    QuotientBase q = quotient_base(g.base());
    for (const auto& members : q.classes()) {
        if (members.size() < 2) continue;
        Eigen::VectorXd first = g.matrix_at(members[0]) * eval_section(s1, members[0]);
        for (size_t i = 1; i < members.size(); ++i) {
            double y = members[i];
            double res =
                (g.matrix_at(y) * eval_section(s1, y) - first).cwiseAbs().maxCoeff();
            if (res > rep.worst) {
                rep.worst = res;
                rep.at = y;
            }
        }
    }
    rep.ok = rep.worst <= tol;
    return rep;
}

CompatReport is_f_invariant_function(const Expr& h, const GluedSpace& s, double tol) {
    CompatReport rep;
    if (!s.finite_locus()) return rep;
    QuotientBase q = quotient_base(s);
    for (const auto& members : q.classes()) {
        for (size_t i = 1; i < members.size(); ++i) {
            double res = std::fabs(h.eval(members[i]) - h.eval(members[0]));
            if (res > rep.worst) {
                rep.worst = res;
                rep.at = members[i];
            }
        }
    }
    rep.ok = rep.worst <= tol;
    return rep;
}

GluedSection glue_sections_S(const Section& s1, const Section& s2, const GluedBundle& g,
                             double tol) {
    CompatReport rep = is_compatible(s1, s2, g, tol);
    if (!rep.ok) {
        std::ostringstream os;
        os << "f̃∘s1 - s2∘f = " << rep.worst << " at y = " << rep.at;
        fail("IncompatibleSections", os.str());
    }
    return GluedSection{s1, s2};
}

Eigen::VectorXd eval_glued_section(const GluedSection& s, const GluedPoint& p) {
    return p.tag == GluedPoint::Tag::kFirst ? eval_section(s.s1, p.coord)
                                            : eval_section(s.s2, p.coord);
}

GluedSection section_add(const GluedSection& a, const GluedSection& b) {
    if (a.s1.components.size() != b.s1.components.size() ||
        a.s2.components.size() != b.s2.components.size())
        fail("ShapeMismatch", "section_add needs sections of one bundle");
    GluedSection out = a;
    for (size_t i = 0; i < a.s1.components.size(); ++i)
        out.s1.components[i] = a.s1.components[i] + b.s1.components[i];
    for (size_t i = 0; i < a.s2.components.size(); ++i)
        out.s2.components[i] = a.s2.components[i] + b.s2.components[i];
    return out;
}

GluedSection section_mul(const GluedFunction& h, const GluedSection& a) {
    // the module structure needs an actual glued function; a raw pair would
    // break the compatibility closure
    if (!h.compatible)
        fail("IncompatibleFunctions", "section_mul needs a compatible glued function");
    GluedSection out = a;
    for (auto& c : out.s1.components) c = h.h1 * c;
    for (auto& c : out.s2.components) c = h.h2 * c;
    return out;
}

namespace {

bool same_locus(const GluedSpace& a, const GluedSpace& b) {
    if (a.finite_locus() != b.finite_locus()) return false;
    if (a.finite_locus()) return a.finite().points == b.finite().points;
    const auto& ia = a.interval();
    const auto& ib = b.interval();
    if (ia.domain.lo != ib.domain.lo || ia.domain.hi != ib.domain.hi) return false;
    Interval dom = ia.whole_line() ? kStandardWindow : ia.domain;
    return equal_on_samples(ia.map, ib.map, sample_grid(dom, kCompatibilitySamples + 2),
                            1e-12);
}

std::vector<Expr> kron_components(const std::vector<Expr>& a, const std::vector<Expr>& b) {
    std::vector<Expr> out;
    out.reserve(a.size() * b.size());
    for (const Expr& ai : a)
        for (const Expr& bj : b) out.push_back(ai * bj);
    return out;
}

ExprMatrix kron_expr(const ExprMatrix& a, const ExprMatrix& b) {
    const size_t ar = a.size(), ac = a.empty() ? 0 : a[0].size();
    const size_t br = b.size(), bc = b.empty() ? 0 : b[0].size();
    ExprMatrix out(ar * br, std::vector<Expr>(ac * bc));
    for (size_t i = 0; i < ar; ++i)
        for (size_t j = 0; j < ac; ++j)
            for (size_t k = 0; k < br; ++k)
                for (size_t l = 0; l < bc; ++l)
                    out[i * br + k][j * bc + l] = a[i][j] * b[k][l];
    return out;
}

} // namespace

GluedTensorResult tensor_sections(const GluedSection& a, const GluedBundle& ga,
                                  const GluedSection& b, const GluedBundle& gb) {
    if (!same_locus(ga.base(), gb.base()))
        fail("BaseMismatch", "tensor factors must be glued over the same base gluing");

    auto v1 = make_trivial_bundle(ga.v1().id + "⊗" + gb.v1().id, ga.v1().base,
                                  FibreDescriptor::standard(ga.rank1() * gb.rank1()));
    auto v2 = make_trivial_bundle(ga.v2().id + "⊗" + gb.v2().id, ga.v2().base,
                                  FibreDescriptor::standard(ga.rank2() * gb.rank2()));

    FibreMap map;
    if (ga.base().finite_locus()) {
        FibreMapFinite fin;
        for (const auto& [y, fy] : ga.base().finite().points) {
            const Eigen::MatrixXd ma = ga.matrix_at(y);
            const Eigen::MatrixXd mb = gb.matrix_at(y);
            Eigen::MatrixXd k(ma.rows() * mb.rows(), ma.cols() * mb.cols());
            for (Eigen::Index i = 0; i < ma.rows(); ++i)
                for (Eigen::Index j = 0; j < ma.cols(); ++j)
                    k.block(i * mb.rows(), j * mb.cols(), mb.rows(), mb.cols()) =
                        ma(i, j) * mb;
            fin.matrices.push_back(std::move(k));
        }
        map = std::move(fin);
    } else {
        // an interval base locus always comes with an interval fibre map
        const auto& ea = std::get<FibreMapInterval>(ga.fibre_map()).entries;
        const auto& eb = std::get<FibreMapInterval>(gb.fibre_map()).entries;
        map = FibreMapInterval{kron_expr(ea, eb)};
    }

    GluedBundle bundle = glue_bundles(v1, v2, ga.base(), std::move(map));
    GluedSection section{
        Section{v1.id, kron_components(a.s1.components, b.s1.components)},
        Section{v2.id, kron_components(a.s2.components, b.s2.components)}};
    return GluedTensorResult{std::move(bundle), std::move(section)};
}

const std::optional<Eigen::VectorXd> PiecewiseSection::value_at(double key) const {
    for (const auto& [k, v] : at_points)
        if (k == key) return v;
    return std::nullopt;
}

Eigen::VectorXd eval_reduced(const ReducedSection& s, const ReducedBundle& r, double x) {
    const GluedSpace& space = r.source().base();
    if (space.finite_locus()) {
        double rep = r.base().project(x);
        if (auto v = s.value_at(rep)) return *v;
        Eigen::VectorXd out(static_cast<Eigen::Index>(s.off_locus.size()));
        for (size_t i = 0; i < s.off_locus.size(); ++i)
            out(static_cast<Eigen::Index>(i)) = s.off_locus[i].eval(rep);
        return out;
    }
    if (space.in_domain(x)) {
        if (s.on_locus) {
            Eigen::VectorXd out(static_cast<Eigen::Index>(s.on_locus->size()));
            for (size_t i = 0; i < s.on_locus->size(); ++i)
                out(static_cast<Eigen::Index>(i)) = (*s.on_locus)[i].eval(x);
            return out;
        }
        Eigen::VectorXd raw(static_cast<Eigen::Index>(s.off_locus.size()));
        for (size_t i = 0; i < s.off_locus.size(); ++i)
            raw(static_cast<Eigen::Index>(i)) = s.off_locus[i].eval(x);
        return r.reduce(x, raw);
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(s.off_locus.size()));
    for (size_t i = 0; i < s.off_locus.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = s.off_locus[i].eval(x);
    return out;
}

Eigen::VectorXd eval_lifted(const LiftedSection& s, const GluedSpace& space, double x) {
    if (auto v = s.value_at(x)) return *v;
    const std::vector<Expr>& exprs =
        (s.on_locus && space.in_domain(x)) ? *s.on_locus : s.off_locus;
    Eigen::VectorXd out(static_cast<Eigen::Index>(exprs.size()));
    for (size_t i = 0; i < exprs.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = exprs[i].eval(x);
    return out;
}

namespace {

std::vector<Expr> apply_matrix(const Eigen::MatrixXd& m, const std::vector<Expr>& v) {
    std::vector<Expr> out(static_cast<size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Expr acc = Expr::constant(0.0);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            acc = acc + Expr::constant(m(i, j)) * v[static_cast<size_t>(j)];
        out[static_cast<size_t>(i)] = acc;
    }
    return out;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd inv = svd.singularValues();
    for (Eigen::Index i = 0; i < inv.size(); ++i)
        inv(i) = inv(i) > kRankTol ? 1.0 / inv(i) : 0.0;
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

} // namespace

ReducedSection reduced_section_from_exprs(std::vector<Expr> components,
                                          const ReducedBundle& r) {
    ReducedSection out;
    out.off_locus = components;
    const GluedSpace& space = r.source().base();
    if (space.finite_locus()) {
        for (const auto& members : r.base().classes()) {
            double rep = members.front();
            Eigen::VectorXd raw(static_cast<Eigen::Index>(components.size()));
            for (size_t i = 0; i < components.size(); ++i)
                raw(static_cast<Eigen::Index>(i)) = components[i].eval(rep);
            out.at_points.emplace_back(rep, r.quotient().projection_matrix_at(rep) * raw);
        }
    } else if (r.source().constant_fibre_map()) {
        double probe = locus_samples(space).front();
        out.on_locus =
            apply_matrix(r.quotient().projection_matrix_at(probe), components);
    }
    return out;
}

ReducedSection S1(const Section& s1, const ReducedBundle& r, double tol) {
    CompatReport inv = is_invariant(s1, r.source(), tol);
    if (!inv.ok) {
        std::ostringstream os;
        os << "fibre images differ by " << inv.worst << " at y = " << inv.at;
        fail("NotInvariant", os.str());
    }
    return reduced_section_from_exprs(s1.components, r);
}

LiftedSection S1_right_inverse(const ReducedSection& s, const ReducedBundle& r) {
    const GluedSpace& space = r.source().base();
    LiftedSection out;
    out.off_locus = s.off_locus;

    if (space.finite_locus()) {
        for (size_t ci = 0; ci < r.base().classes().size(); ++ci) {
            const auto& members = r.base().classes()[ci];
            double rep = members.front();
            Eigen::VectorXd class_value = eval_reduced(s, r, rep);
            Eigen::VectorXd image = r.pushforward(rep, class_value);
            for (double y : members) {
                // the coset over y with the class's image, represented in the
                // chosen complement at y
                Eigen::VectorXd canonical =
                    y == rep ? class_value : pinv(r.source().matrix_at(y)) * image;
                Eigen::VectorXd lifted = r.quotient().lift(y, canonical);
                Eigen::VectorXd generic(static_cast<Eigen::Index>(s.off_locus.size()));
                for (size_t i = 0; i < s.off_locus.size(); ++i)
                    generic(static_cast<Eigen::Index>(i)) = s.off_locus[i].eval(y);
                if ((lifted - generic).cwiseAbs().maxCoeff() > 1e-12)
                    out.at_points.emplace_back(y, lifted);
            }
        }
        return out;
    }

    if (!r.source().constant_fibre_map())
        fail("NonconstantFibreMapLift",
             "symbolic lifting over an interval locus needs a constant fibre map");
    double probe = locus_samples(space).front();
    const std::vector<Expr>& reduced_exprs = s.on_locus ? *s.on_locus : s.off_locus;
    std::vector<Expr> lifted =
        apply_matrix(r.quotient().lift_matrix_at(probe), reduced_exprs);
    if (space.interval().whole_line()) {
        out.off_locus = lifted;
    } else {
        out.on_locus = std::move(lifted);
    }
    return out;
}

DimWitness dim_witness(std::vector<double> points) {
    std::sort(points.begin(), points.end());
    for (size_t i = 0; i + 1 < points.size(); ++i)
        if (points[i] == points[i + 1])
            fail("DuplicatePoints", "witness points must be distinct");

    const Expr x = Expr::variable();
    Expr z = Expr::constant(0.0);
    for (double p : points) z = z + Expr::abs(x - Expr::constant(p));

    Eigen::VectorXd ez(2);
    ez << 0.0, 1.0;
    auto bundle = make_trivial_bundle(
        "witness", {"X", 1}, FibreDescriptor{2, {{ez, Expr::abs(x)}}});
    Section s{bundle.id, {Expr::constant(0.0), z}};
    return DimWitness{std::move(bundle), std::move(s), std::move(points)};
}

WitnessCertificate certify_dim_witness(const DimWitness& w, std::uint64_t seed,
                                       int samples, double gap_threshold,
                                       double match_tol) {
    const Expr& z = w.section.components[1];
    constexpr double kStep = 1e-3;

    WitnessCertificate cert;
    cert.min_gap = std::numeric_limits<double>::infinity();
    if (w.points.empty()) cert.min_gap = 0.0;
    for (double p : w.points) {
        auto [l, r] = one_sided_derivatives(z, p, kStep);
        cert.min_gap = std::min(cert.min_gap, std::fabs(r - l));
    }

    Rng rng(seed);
    int kept = 0;
    while (kept < samples) {
        double x = rng.uniform(kStandardWindow.lo, kStandardWindow.hi);
        bool near_kink = false;
        for (double p : w.points)
            if (std::fabs(x - p) < 0.05) near_kink = true;
        if (near_kink) continue;
        auto [l, r] = one_sided_derivatives(z, x, kStep);
        cert.worst_match = std::max(cert.worst_match, std::fabs(r - l));
        ++kept;
    }

    cert.ok = (w.points.empty() || cert.min_gap >= gap_threshold) &&
              cert.worst_match <= match_tol;
    return cert;
}

} // namespace dglue
