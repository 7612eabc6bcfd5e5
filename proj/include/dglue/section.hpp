#ifndef DGLUE_SECTION_HPP
#define DGLUE_SECTION_HPP

#include "dglue/bundle.hpp"
#include "dglue/expr.hpp"
#include "dglue/gluing.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dglue {

// A smooth section of a trivial pseudo-bundle: one expression per fibre
// coordinate, as a function of the base variable.
struct Section {
    std::string bundle_id;
    std::vector<Expr> components;

    /// Which coordinates carry abs nodes, i.e. use the rough generated-plot
    /// form rather than an ordinary smooth function.
    std::vector<bool> rough_flags() const;
};

Eigen::VectorXd eval_section(const Section& s, double x);

struct CompatReport {
    bool ok = true;
    double worst = 0.0;
    double at = 0.0;
};

/// f̃ ∘ s1 = s2 ∘ f on the gluing domain, within tol.
CompatReport is_compatible(const Section& s1, const Section& s2, const GluedBundle& g,
                           double tol = kCompatibilityTol);

/// (f,f̃)-invariance of s1: equal fibre images across every f-class. Vacuous
/// (true) over interval loci, where f is a diffeomorphism with its image.
CompatReport is_invariant(const Section& s1, const GluedBundle& g,
                          double tol = kCompatibilityTol);

/// f-invariance of a scalar function: h(y) = h(y') whenever f(y) = f(y').
CompatReport is_f_invariant_function(const Expr& h, const GluedSpace& s,
                                     double tol = kCompatibilityTol);

// s1 ∪_(f,f̃) s2: value s1(x) on i1(X1 \ Y) and s2(x2) on i2(X2), the latter
// covering the glue classes.
struct GluedSection {
    Section s1, s2;
};

/// Throws Error("IncompatibleSections") when is_compatible fails.
GluedSection glue_sections_S(const Section& s1, const Section& s2, const GluedBundle& g,
                             double tol = kCompatibilityTol);

Eigen::VectorXd eval_glued_section(const GluedSection& s, const GluedPoint& p);

// Module structure: compatibility is closed under these, so the results are
// assembled without rechecking.
GluedSection section_add(const GluedSection& a, const GluedSection& b);
GluedSection section_mul(const GluedFunction& h, const GluedSection& a);

struct GluedTensorResult {
    GluedBundle bundle;
    GluedSection section;
};

/// Kronecker product per side, over the tensor bundle with fibre map A ⊗ A'.
/// Throws Error("BaseMismatch") when the base gluings differ.
GluedTensorResult tensor_sections(const GluedSection& a, const GluedBundle& ga,
                                  const GluedSection& b, const GluedBundle& gb);

// A section presented piecewise along the gluing domain: expressions away
// from the locus, an optional symbolic form over an interval locus, and
// prescribed values at finitely many points. Reduced sections key their
// point values by class representative; lifted sections by locus point.
struct PiecewiseSection {
    std::vector<Expr> off_locus;
    std::optional<std::vector<Expr>> on_locus;
    std::vector<std::pair<double, Eigen::VectorXd>> at_points;

    bool pure() const { return !on_locus.has_value() && at_points.empty(); }
    const std::optional<Eigen::VectorXd> value_at(double key) const;
};

using ReducedSection = PiecewiseSection;
using LiftedSection = PiecewiseSection;

/// Value of a reduced section at the class of x.
Eigen::VectorXd eval_reduced(const ReducedSection& s, const ReducedBundle& r, double x);

/// Value of a lifted (V1-valued) section at x.
Eigen::VectorXd eval_lifted(const LiftedSection& s, const GluedSpace& space, double x);

/// Reduced section given by ambient fibre expressions (canonicalized on Y).
ReducedSection reduced_section_from_exprs(std::vector<Expr> components,
                                          const ReducedBundle& r);

/// S1: push an (f,f̃)-invariant section through χ1^f̃; the image is stored in
/// canonical (orthogonal-complement) coordinates. Throws Error("NotInvariant").
ReducedSection S1(const Section& s1, const ReducedBundle& r,
                  double tol = kCompatibilityTol);

/// Right inverse of S1 determined by the stored complement choice: each coset
/// is represented by its unique member in the chosen complement. The result
/// is (f,f̃)-invariant and satisfies S1 ∘ S1_right_inverse = id.
LiftedSection S1_right_inverse(const ReducedSection& s, const ReducedBundle& r);

// The infinite-dimension witness: a section of the rank-2 rough bundle over
// the line whose classical derivative fails exactly at the prescribed points.
struct DimWitness {
    TrivialPseudoBundle bundle;
    Section section;
    std::vector<double> points;
};

/// Throws Error("DuplicatePoints") on repeated entries.
DimWitness dim_witness(std::vector<double> points);

struct WitnessCertificate {
    bool ok = false;
    double min_gap = 0.0;     // smallest one-sided mismatch over the kinks
    double worst_match = 0.0; // largest left/right disagreement elsewhere
};

/// One-sided-derivative certification: mismatch >= gap_threshold at each
/// prescribed point, agreement within match_tol at `samples` seeded points
/// kept away from the kinks.
WitnessCertificate certify_dim_witness(const DimWitness& w, std::uint64_t seed,
                                       int samples = 50, double gap_threshold = 1.0,
                                       double match_tol = 1e-6);

} // namespace dglue

#endif
