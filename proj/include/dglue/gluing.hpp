#ifndef DGLUE_GLUING_HPP
#define DGLUE_GLUING_HPP

#include "dglue/expr.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dglue {

// One base piece: a copy of the standard R (dim 1). The single dim-0 piece in
// the library is the one-point space of the delta demo.
struct Piece {
    std::string id;
    int dim = 1;
};

/// Gluing domain Y given as finitely many points y with their images f(y).
struct FinitePointsLocus {
    std::vector<std::pair<double, double>> points; // (y, f(y)), sorted by y
};

// Gluing domain Y = [a, b] together with a smooth f that is strictly monotone
// there (a diffeomorphism onto its image). Infinite endpoints present Y as the
// whole line; monotonicity is then checked on the standard window.
struct IntervalLocus {
    Interval domain;
    Expr map;

    bool whole_line() const {
        return std::isinf(domain.lo) && std::isinf(domain.hi);
    }
};

using GluingLocus = std::variant<FinitePointsLocus, IntervalLocus>;

// Presentation of X1 ∪_f X2. Membership in Y and f(Y) is decidable exactly:
// point lookup for finite loci, endpoint comparisons for interval ones.
class GluedSpace {
public:
    const Piece& piece1() const { return x1_; }
    const Piece& piece2() const { return x2_; }
    const GluingLocus& locus() const { return locus_; }

    bool finite_locus() const;
    const FinitePointsLocus& finite() const;
    const IntervalLocus& interval() const;

    bool in_domain(double y) const;  // y ∈ Y
    bool in_image(double x2) const;  // x2 ∈ f(Y)
    double map_point(double y) const; // f(y); requires in_domain(y)

    /// All y ∈ Y with f(y) = x2 (ascending). Empty when x2 ∉ f(Y).
    std::vector<double> preimages(double x2) const;

    /// Window used by sampled checks on side-1 / side-2 expressions.
    Interval window1() const;
    Interval window2() const;

    friend GluedSpace make_glued_space(Piece x1, Piece x2, GluingLocus locus);

private:
    GluedSpace() = default;
    Piece x1_, x2_;
    GluingLocus locus_;
};

/// Validates the locus invariants (monotonicity, no duplicate points).
GluedSpace make_glued_space(Piece x1, Piece x2, GluingLocus locus);

// A point of X1 ∪_f X2, canonically represented: glue classes live on the X2
// side, so First(x) is only ever constructed with x ∉ Y and equality is
// syntactic.
struct GluedPoint {
    enum class Tag { kFirst, kSecond };
    Tag tag;
    double coord;

    static GluedPoint first(double x) { return {Tag::kFirst, x}; }
    static GluedPoint second(double x2) { return {Tag::kSecond, x2}; }
    bool operator==(const GluedPoint&) const = default;
};

std::string to_string(const GluedPoint& p);

// side 1, x ∈ Y resolves through ĩ1 = i2 ∘ f; everything else embeds as is.
GluedPoint classify(const GluedSpace& s, int side, double x);

// A function on the glued space, presented by its restrictions along the
// covering i1(X1 \ Y) ⊔ i2(X2). When `compatible` is set the pair also
// matches across the locus (h1|_Y = h2 ∘ f) and deserves the name h1 ∪_f h2.
struct GluedFunction {
    Expr h1, h2;
    bool compatible = false;
};

inline constexpr double kCompatibilityTol = 1e-9;
inline constexpr int kCompatibilitySamples = 64;

struct FunctionCompatReport {
    bool ok = true;
    double worst = 0.0;
    double at = 0.0;
};

/// Worst residual of h1|_Y = h2 ∘ f over the locus.
FunctionCompatReport functions_compatibility(const Expr& h1, const Expr& h2,
                                             const GluedSpace& s,
                                             double tol = kCompatibilityTol);

/// Checks h1|_Y = h2 ∘ f and returns the glued function; throws
/// Error("IncompatibleFunctions") with the worst offending point otherwise.
GluedFunction glue_functions(const Expr& h1, const Expr& h2, const GluedSpace& s,
                             double tol = kCompatibilityTol);

double evaluate_glued_function(const GluedFunction& h, const GluedPoint& p);

// Plot of the glued space in the paper's local form: u ↦ i1(p1(u)) off the
// locus and i2(f(p1(u))) on it.
class GluedPlot {
public:
    GluedPlot(GluedSpace space, Expr p1) : space_(std::move(space)), p1_(std::move(p1)) {}
    GluedPoint operator()(double u) const { return classify(space_, 1, p1_.eval(u)); }
    const Expr& lift() const { return p1_; }

private:
    GluedSpace space_;
    Expr p1_;
};

GluedPlot glued_plot(const GluedSpace& s, const Expr& p1);

// The quotient X1^f = X1/∼f. Classes are the groups of locus points sharing
// an f-image; everything else projects identically. Class representative:
// the smallest member.
class QuotientBase {
public:
    const std::vector<std::vector<double>>& classes() const { return classes_; }
    bool identity() const;
    double project(double x) const;
    std::optional<int> class_of(double x) const;

    friend QuotientBase quotient_base(const GluedSpace& s);

private:
    std::vector<std::vector<double>> classes_;
};

QuotientBase quotient_base(const GluedSpace& s);

// The delta-function demonstration: the x-axis glued to an external point at
// height one, the projection-to-height function, and the identity plot. The
// composite h ∘ p is the classical delta.
struct DeltaDemo {
    GluedSpace space;
    GluedFunction h;
    std::vector<std::pair<double, double>> table; // (x, h(p(x)))

    GluedPlot plot() const { return GluedPlot(space, Expr::variable()); }
    double value_at(double x) const;
};

DeltaDemo delta_demo(const std::vector<double>& probe_points = {});

} // namespace dglue

#endif
