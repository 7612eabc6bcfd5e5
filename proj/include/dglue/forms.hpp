#ifndef DGLUE_FORMS_HPP
#define DGLUE_FORMS_HPP

#include "dglue/expr.hpp"
#include "dglue/gluing.hpp"

#include <string>
#include <utility>
#include <variant>

namespace dglue {

// A 1-form a(x)dx on a standard line piece. The fibre Λ¹_x of the values
// bundle is identified with R through the coefficient value: the forms
// vanishing at x are exactly those with a(x) = 0, so the coset of a form at x
// is pinned by a(x).
struct OneFormPiece {
    Expr coeff;
};

/// d h = h'(x) dx.
OneFormPiece differential(const Expr& h);

/// Classical pullback (f*ω)(x) = a(f(x))·f'(x) dx. The map must be monotone
/// on the scan domain; throws Error("NonMonotone") otherwise.
OneFormPiece pullback(const Expr& fexpr, const OneFormPiece& w,
                      Interval dom = kStandardWindow);

enum class LocusPart { kDomain, kImage }; // restrict to Y (i*) or to f(Y) (j*)

// i*ω / j*ω. Over a finite point set every plot is locally constant, so all
// forms restrict to zero there; an interval keeps its coefficient.
struct RestrictedForm {
    bool zero = false;
    Expr coeff;
    Interval dom{0.0, 0.0};
};

RestrictedForm restrict_form(const OneFormPiece& w, const GluedSpace& s, LocusPart part);

/// The compatibility criterion i*(ω1) = (f* j*)(ω2): automatic at a finite
/// locus, the relation a1(x) = a2(f(x))·f'(x) sampled over an interval one.
bool forms_compatible(const OneFormPiece& w1, const OneFormPiece& w2,
                      const GluedSpace& s, double tol = kCompatibilityTol);

struct ForResidual {
    bool ok = true;
    double worst = 0.0;
    double at = 0.0;
};

/// Same check with the worst residual reported.
ForResidual forms_compatible_report(const OneFormPiece& w1, const OneFormPiece& w2,
                                    const GluedSpace& s, double tol = kCompatibilityTol);

// Fibre of Λ¹(X1 ∪_f X2) at a point: a factor fibre away from the gluing, the
// direct sum over a finite-locus class, and the compatible-pair line over an
// interval-locus class (the relation pins one coordinate).
struct LambdaFibre {
    int dim = 1;
    std::string tag;
};

LambdaFibre lambda_fibre(const GluedSpace& s, const GluedPoint& p);

/// Scalar off the gluing locus, an ordered (Λ¹(X1), Λ¹(X2)) pair on it.
using LambdaFibreValue = std::variant<double, std::pair<double, double>>;

std::string to_string(const LambdaFibreValue& v);

// A 1-form on the glued space, represented by its pullback pair to the two
// factors. The pair determines the form because the joint pullback to the
// disjoint union is injective.
struct GluedOneForm {
    OneFormPiece w1, w2;
};

/// Checks forms_compatible and assembles the pair; throws
/// Error("IncompatibleForms") with the worst residual otherwise.
GluedOneForm glue_one_forms(const OneFormPiece& w1, const OneFormPiece& w2,
                            const GluedSpace& s, double tol = kCompatibilityTol);

/// Pointwise value in the Λ¹ fibre at p: a coefficient away from the gluing
/// locus, the ordered pair over a glue class.
LambdaFibreValue eval_glued_one_form(const GluedOneForm& w, const GluedSpace& s,
                                     const GluedPoint& p);

// d(h1 ∪_f h2) as a map on glued points: dh1 off the locus, dh2 off the
// image, and the pair (dh1(y), dh2(f(y))) over a glue class.
class GluedDifferential {
public:
    GluedDifferential(GluedFunction h, GluedSpace space);
    LambdaFibreValue at(const GluedPoint& p) const;
    const Expr& dh1() const { return dh1_; }
    const Expr& dh2() const { return dh2_; }

private:
    GluedFunction h_;
    GluedSpace space_;
    Expr dh1_, dh2_;
};

GluedDifferential glued_differential(const GluedFunction& h, const GluedSpace& s);

// A section of (Λ¹)* on a glued space: one coefficient per side, pairing
// componentwise against the Λ¹ fibre decomposition at glue classes.
struct GluedDualSection {
    Expr t1, t2;
};

/// Pairing of the dual section at p against a Λ¹ fibre value at p.
double pair_against(const GluedDualSection& t, const GluedSpace& s, const GluedPoint& p,
                    const LambdaFibreValue& v);

} // namespace dglue

#endif
