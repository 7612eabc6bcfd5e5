#include "dglue/gluing.hpp"

#include "dglue/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dglue {

bool GluedSpace::finite_locus() const {
    return std::holds_alternative<FinitePointsLocus>(locus_);
}

const FinitePointsLocus& GluedSpace::finite() const {
    return std::get<FinitePointsLocus>(locus_);
}

const IntervalLocus& GluedSpace::interval() const {
    return std::get<IntervalLocus>(locus_);
}

bool GluedSpace::in_domain(double y) const {
    if (finite_locus()) {
        for (const auto& [p, _] : finite().points)
            if (p == y) return true;
        return false;
    }
    return interval().domain.contains(y);
}

double GluedSpace::map_point(double y) const {
    if (finite_locus()) {
        for (const auto& [p, fy] : finite().points)
            if (p == y) return fy;
        fail("PointOutsideLocus", "map_point called off the gluing domain");
    }
    if (!interval().domain.contains(y))
        fail("PointOutsideLocus", "map_point called off the gluing domain");
    return interval().map.eval(y);
}

bool GluedSpace::in_image(double x2) const { return !preimages(x2).empty(); }

namespace {

// Solve f(y) = target for strictly monotone f on [lo, hi] by bisection.
std::optional<double> invert_monotone(const Expr& f, double lo, double hi, double target) {
    double flo = f.eval(lo);
    double fhi = f.eval(hi);
    const bool increasing = flo < fhi;
    double a = std::min(flo, fhi);
    double b = std::max(flo, fhi);
    if (target < a || target > b) return std::nullopt;
    for (int iter = 0; iter < 200 && hi - lo > 1e-14 * (1.0 + std::fabs(lo)); ++iter) {
        double mid = 0.5 * (lo + hi);
        double fm = f.eval(mid);
        if (fm == target) return mid;
        if ((fm < target) == increasing) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

std::vector<double> GluedSpace::preimages(double x2) const {
    std::vector<double> out;
    if (finite_locus()) {
        for (const auto& [y, fy] : finite().points)
            if (fy == x2) out.push_back(y);
        return out;
    }
    const IntervalLocus& loc = interval();
    double lo = loc.domain.lo;
    double hi = loc.domain.hi;
    if (loc.whole_line()) {
        // expand a bracket until the target is enclosed
        lo = -1.0;
        hi = 1.0;
        for (int i = 0; i < 60; ++i) {
            double a = loc.map.eval(lo);
            double b = loc.map.eval(hi);
            if ((x2 - a) * (x2 - b) <= 0) break;
            lo *= 2.0;
            hi *= 2.0;
        }
    }
    if (auto y = invert_monotone(loc.map, lo, hi, x2)) {
        // accept only genuine solutions (the bracket may not contain one)
        if (std::fabs(loc.map.eval(*y) - x2) <= 1e-9 * (1.0 + std::fabs(x2)))
            out.push_back(*y);
    }
    return out;
}

Interval GluedSpace::window1() const {
    if (!finite_locus() && !interval().whole_line()) {
        // widen a bounded locus a little so off-locus behaviour is sampled too
        Interval d = interval().domain;
        double pad = std::max(1.0, 0.5 * d.length());
        return {std::min(d.lo - pad, kStandardWindow.lo),
                std::max(d.hi + pad, kStandardWindow.hi)};
    }
    return kStandardWindow;
}

Interval GluedSpace::window2() const { return kStandardWindow; }

GluedSpace make_glued_space(Piece x1, Piece x2, GluingLocus locus) {
    if (x1.dim != 0 && x1.dim != 1) fail("UnsupportedPiece", "piece dimension must be 0 or 1");
    if (x2.dim != 0 && x2.dim != 1) fail("UnsupportedPiece", "piece dimension must be 0 or 1");

    if (auto* fin = std::get_if<FinitePointsLocus>(&locus)) {
        // strict ascending order: fibre maps and other per-point data are
        // aligned positionally with this list
        for (size_t i = 0; i + 1 < fin->points.size(); ++i) {
            if (fin->points[i].first == fin->points[i + 1].first)
                fail("DuplicateLocusPoint",
                     "repeated locus point y = " + std::to_string(fin->points[i].first));
            if (fin->points[i].first > fin->points[i + 1].first)
                fail("UnsortedLocusPoints",
                     "locus points must be listed in ascending y order");
        }
        if (fin->points.empty())
            fail("EmptyLocus", "a gluing needs at least one locus point");
    } else {
        auto& iv = std::get<IntervalLocus>(locus);
        if (!iv.whole_line() && !(iv.domain.lo < iv.domain.hi))
            fail("EmptyLocus", "interval locus needs lo < hi");
        Interval scan = iv.whole_line() ? kStandardWindow : iv.domain;
        ScanReport rep = scan_constant_sign(iv.map.derivative(), scan, 1e-6,
                                            kCompatibilitySamples + 2);
        if (!rep.ok) {
            std::ostringstream os;
            os << "f' = " << rep.worst << " at y = " << rep.at
               << "; the gluing map must be strictly monotone on its domain";
            fail("NonMonotoneGluingMap", os.str());
        }
    }

    GluedSpace s;
    s.x1_ = std::move(x1);
    s.x2_ = std::move(x2);
    s.locus_ = std::move(locus);
    return s;
}

std::string to_string(const GluedPoint& p) {
    std::ostringstream os;
    os << (p.tag == GluedPoint::Tag::kFirst ? "First(" : "Second(") << p.coord << ")";
    return os.str();
}

GluedPoint classify(const GluedSpace& s, int side, double x) {
    if (side == 2) return GluedPoint::second(x);
    if (side != 1) fail("InternalError", "side must be 1 or 2");
    if (s.in_domain(x)) return GluedPoint::second(s.map_point(x));
    return GluedPoint::first(x);
}

namespace {

struct WorstResidual {
    double value = 0.0;
    double at = 0.0;

    void update(double residual, double where) {
        if (residual > value) {
            value = residual;
            at = where;
        }
    }
};

// Max |h1(y) - h2(f(y))| over the locus: every point of a finite locus, the
// fixed 64-sample grid plus endpoints for an interval one.
WorstResidual locus_residual(const Expr& h1, const Expr& h2, const GluedSpace& s) {
    WorstResidual worst;
    if (s.finite_locus()) {
        for (const auto& [y, fy] : s.finite().points)
            worst.update(std::fabs(h1.eval(y) - h2.eval(fy)), y);
        return worst;
    }
    const IntervalLocus& loc = s.interval();
    Interval dom = loc.whole_line() ? kStandardWindow : loc.domain;
    for (double y : sample_grid(dom, kCompatibilitySamples + 2))
        worst.update(std::fabs(h1.eval(y) - h2.eval(loc.map.eval(y))), y);
    return worst;
}

} // namespace

FunctionCompatReport functions_compatibility(const Expr& h1, const Expr& h2,
                                             const GluedSpace& s, double tol) {
    WorstResidual worst = locus_residual(h1, h2, s);
    return FunctionCompatReport{worst.value <= tol, worst.value, worst.at};
}

GluedFunction glue_functions(const Expr& h1, const Expr& h2, const GluedSpace& s,
                             double tol) {
    FunctionCompatReport rep = functions_compatibility(h1, h2, s, tol);
    if (!rep.ok) {
        std::ostringstream os;
        os << "h1 - h2∘f = " << rep.worst << " at y = " << rep.at;
        fail("IncompatibleFunctions", os.str());
    }
    return GluedFunction{h1, h2, true};
}

double evaluate_glued_function(const GluedFunction& h, const GluedPoint& p) {
    return p.tag == GluedPoint::Tag::kFirst ? h.h1.eval(p.coord) : h.h2.eval(p.coord);
}

GluedPlot glued_plot(const GluedSpace& s, const Expr& p1) { return GluedPlot(s, p1); }

bool QuotientBase::identity() const {
    for (const auto& c : classes_)
        if (c.size() > 1) return false;
    return true;
}

double QuotientBase::project(double x) const {
    for (const auto& c : classes_)
        if (std::find(c.begin(), c.end(), x) != c.end()) return c.front();
    return x;
}

std::optional<int> QuotientBase::class_of(double x) const {
    for (size_t i = 0; i < classes_.size(); ++i)
        if (std::find(classes_[i].begin(), classes_[i].end(), x) != classes_[i].end())
            return static_cast<int>(i);
    return std::nullopt;
}

QuotientBase quotient_base(const GluedSpace& s) {
    QuotientBase q;
    if (!s.finite_locus()) return q; // diffeomorphism on an interval: identity
    // group locus points by exact f-image, preserving the y-order
    std::vector<std::pair<double, std::vector<double>>> groups;
    for (const auto& [y, fy] : s.finite().points) {
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return g.first == fy; });
        if (it == groups.end()) {
            groups.push_back({fy, {y}});
        } else {
            it->second.push_back(y);
        }
    }
    for (auto& [fy, members] : groups) q.classes_.push_back(std::move(members));
    return q;
}

DeltaDemo delta_demo(const std::vector<double>& probe_points) {
    Piece axis{"x-axis", 1};
    Piece point{"external-point", 0};
    GluedSpace space =
        make_glued_space(axis, point, FinitePointsLocus{{{0.0, 0.0}}});

    // The height function is defined through the covering i1(X1\Y) ⊔ i2(X2):
    // zero along the axis, one at the external point. No matching across the
    // locus is involved, so the pair is assembled directly.
    GluedFunction h{Expr::constant(0.0), Expr::constant(1.0), false};

    DeltaDemo demo{space, h, {}};
    std::vector<double> xs = probe_points;
    if (xs.empty()) {
        xs = {-3.0, -1.0, -0.5, 0.0, 0.25, 1.0, 3.7};
    }
    for (double x : xs) demo.table.emplace_back(x, demo.value_at(x));
    return demo;
}

double DeltaDemo::value_at(double x) const {
    GluedPlot p = glued_plot(space, Expr::variable());
    return evaluate_glued_function(h, p(x));
}

} // namespace dglue
