#include "dglue/forms.hpp"

#include "dglue/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dglue {

OneFormPiece differential(const Expr& h) { return OneFormPiece{h.derivative()}; }

OneFormPiece pullback(const Expr& fexpr, const OneFormPiece& w, Interval dom) {
    ScanReport rep = scan_constant_sign(fexpr.derivative(), dom, 1e-6);
    if (!rep.ok) {
        std::ostringstream os;
        os << "pullback map has f' = " << rep.worst << " at x = " << rep.at;
        fail("NonMonotone", os.str());
    }
    return OneFormPiece{w.coeff.compose(fexpr) * fexpr.derivative()};
}

RestrictedForm restrict_form(const OneFormPiece& w, const GluedSpace& s, LocusPart part) {
    if (s.finite_locus()) return RestrictedForm{true, Expr::constant(0.0), {0.0, 0.0}};
    const IntervalLocus& loc = s.interval();
    Interval dom = loc.whole_line() ? kStandardWindow : loc.domain;
    if (part == LocusPart::kImage) {
        double fa = loc.map.eval(dom.lo);
        double fb = loc.map.eval(dom.hi);
        dom = Interval{std::min(fa, fb), std::max(fa, fb)};
    }
    return RestrictedForm{false, w.coeff, dom};
}

ForResidual forms_compatible_report(const OneFormPiece& w1, const OneFormPiece& w2,
                                    const GluedSpace& s, double tol) {
    ForResidual rep;
    if (s.finite_locus()) return rep; // forms vanish on a finite point set
    const IntervalLocus& loc = s.interval();
    Interval dom = loc.whole_line() ? kStandardWindow : loc.domain;
    Expr fprime = loc.map.derivative();
    for (double x : sample_grid(dom, kCompatibilitySamples + 2)) {
        double res = std::fabs(w1.coeff.eval(x) -
                               w2.coeff.eval(loc.map.eval(x)) * fprime.eval(x));
        if (res > rep.worst) {
            rep.worst = res;
            rep.at = x;
        }
    }
    rep.ok = rep.worst <= tol;
    return rep;
}

bool forms_compatible(const OneFormPiece& w1, const OneFormPiece& w2,
                      const GluedSpace& s, double tol) {
    return forms_compatible_report(w1, w2, s, tol).ok;
}

LambdaFibre lambda_fibre(const GluedSpace& s, const GluedPoint& p) {
    if (p.tag == GluedPoint::Tag::kFirst) return LambdaFibre{1, "Λ¹(X1)"};
    if (!s.in_image(p.coord)) return LambdaFibre{1, "Λ¹(X2)"};
    if (s.finite_locus()) return LambdaFibre{2, "direct sum"};
    return LambdaFibre{1, "compatible pairs"};
}

std::string to_string(const LambdaFibreValue& v) {
    std::ostringstream os;
    if (const double* x = std::get_if<double>(&v)) {
        os << *x;
    } else {
        auto [a, b] = std::get<std::pair<double, double>>(v);
        os << "(" << a << ", " << b << ")";
    }
    return os.str();
}

GluedOneForm glue_one_forms(const OneFormPiece& w1, const OneFormPiece& w2,
                            const GluedSpace& s, double tol) {
    ForResidual rep = forms_compatible_report(w1, w2, s, tol);
    if (!rep.ok) {
        std::ostringstream os;
        os << "a1 - (a2∘f)·f' = " << rep.worst << " at y = " << rep.at;
        fail("IncompatibleForms", os.str());
    }
    return GluedOneForm{w1, w2};
}

LambdaFibreValue eval_glued_one_form(const GluedOneForm& w, const GluedSpace& s,
                                     const GluedPoint& p) {
    if (p.tag == GluedPoint::Tag::kFirst) return w.w1.coeff.eval(p.coord);
    auto pre = s.preimages(p.coord);
    if (pre.empty()) return w.w2.coeff.eval(p.coord);
    return std::make_pair(w.w1.coeff.eval(pre.front()), w.w2.coeff.eval(p.coord));
}

GluedDifferential::GluedDifferential(GluedFunction h, GluedSpace space)
    : h_(std::move(h)), space_(std::move(space)), dh1_(h_.h1.derivative()),
      dh2_(h_.h2.derivative()) {}

LambdaFibreValue GluedDifferential::at(const GluedPoint& p) const {
    if (p.tag == GluedPoint::Tag::kFirst) return dh1_.eval(p.coord);
    auto pre = space_.preimages(p.coord);
    if (pre.empty()) return dh2_.eval(p.coord);
    return std::make_pair(dh1_.eval(pre.front()), dh2_.eval(p.coord));
}

GluedDifferential glued_differential(const GluedFunction& h, const GluedSpace& s) {
    return GluedDifferential(h, s);
}

double pair_against(const GluedDualSection& t, const GluedSpace& s, const GluedPoint& p,
                    const LambdaFibreValue& v) {
    if (const double* x = std::get_if<double>(&v)) {
        const Expr& coeff = p.tag == GluedPoint::Tag::kFirst ? t.t1 : t.t2;
        return coeff.eval(p.coord) * *x;
    }
    auto [a, b] = std::get<std::pair<double, double>>(v);
    auto pre = s.preimages(p.coord);
    if (pre.empty())
        fail("PointOutsideLocus", "pair-valued Λ¹ element away from the gluing locus");
    return t.t1.eval(pre.front()) * a + t.t2.eval(p.coord) * b;
}

} // namespace dglue
