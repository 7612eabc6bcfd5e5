#ifndef DGLUE_CONNECTION_HPP
#define DGLUE_CONNECTION_HPP

#include "dglue/bundle.hpp"
#include "dglue/expr.hpp"
#include "dglue/forms.hpp"
#include "dglue/section.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dglue {

// A connection on a trivial pseudo-bundle over a line piece, stored through
// its Christoffel matrix: ∇(s) has dx-coefficient vector s' + Γ·s. That
// coefficient contract is forced by the Leibniz rule once ∇ of the constant
// frame sections is Γ.
struct Connection {
    std::string bundle_id;
    std::string base_id;
    ExprMatrix gamma;

    int rank() const { return static_cast<int>(gamma.size()); }
};

/// Validates shape (square, matching the fibre rank).
Connection make_connection(const TrivialPseudoBundle& bundle, ExprMatrix gamma);

/// dx-coefficient vector of ∇s: components (s' + Γ·s)_i.
std::vector<Expr> apply_connection(const Connection& c, const Section& s);

// Kink candidates of ∇s inside the window: points where abs arguments of the
// section (or the Christoffel data) vanish, so s' is only one-sided there.
// Residual checks skip these points rather than smoothing over them.
SingularSet covariant_kinks(const Connection& c, const Section& s, Interval window);

struct CheckReport {
    bool pass = false;
    double worst = 0.0;
    double at = 0.0;
};

/// Residual of ∇(h·s) - (dh ⊗ s + h·∇s) over the samples.
CheckReport leibniz_check(const Connection& c, const Expr& h, const Section& s,
                          std::span<const double> samples, double tol);

/// Levi-Civita connection of the rank-1 metric h·dz²: Γ = h'/(2h). The metric
/// must stay positive on the scan domain; throws Error("NonPositiveMetric").
Connection levi_civita_1d(const Expr& h, Interval dom = kStandardWindow);

// A section of (Λ¹X)* on one piece: the pairing t·(a dx) = t(x)·a(x).
struct DualSectionPiece {
    Expr coeff;
};

/// ∇_t s = t·(s' + Γ·s) componentwise.
Section covariant_derivative(const Connection& c, const DualSectionPiece& t,
                             const Section& s);

/// C∞-linearity in the direction argument: ∇_{t1+t2} = ∇_{t1} + ∇_{t2} and
/// ∇_{h·t} = h·∇_t.
CheckReport covariant_linearity_check(const Connection& c, const DualSectionPiece& t1,
                                      const DualSectionPiece& t2, const Expr& h,
                                      const Section& s, std::span<const double> samples,
                                      double tol);

/// Block-diagonal Christoffel matrix; throws Error("BaseMismatch").
Connection direct_sum_connection(const Connection& a, const Connection& b);

/// Γ⊗ = Γ¹⊗I + I⊗Γ² on the Kronecker fibre; throws Error("BaseMismatch").
Connection tensor_connection(const Connection& a, const Connection& b);

// A pseudo-metric on a trivial pseudo-bundle: symmetric, eigenvalues bounded
// below by -1e-10 at every sampled base point, rank equal to the fibre's dual
// dimension.
struct PseudoMetric {
    std::string bundle_id;
    ExprMatrix g;

    int rank() const { return static_cast<int>(g.size()); }
};

inline constexpr double kEigenvalueFloor = -1e-10;

/// Validates the pseudo-metric conditions on the scan domain.
PseudoMetric make_pseudo_metric(const TrivialPseudoBundle& bundle, ExprMatrix g,
                                Interval dom = kStandardWindow);

Eigen::MatrixXd eval_metric(const PseudoMetric& g, double x);

/// Residual of d(g(s,t)) - g(∇s,t) - g(s,∇t) over the samples.
CheckReport metric_compatible_check(const Connection& c, const PseudoMetric& g,
                                    const Section& s, const Section& t,
                                    std::span<const double> samples, double tol);

/// Gluing compatibility of pseudo-metrics: G1(y) = A_yᵀ G2(f(y)) A_y.
CheckReport metrics_compatible_check(const PseudoMetric& g1, const PseudoMetric& g2,
                                     const GluedBundle& g, double tol = kCompatibilityTol);

// The induced pseudo-metric on a glued bundle: g1 on i1(X1\Y), g2 on i2(X2).
struct GluedMetric {
    PseudoMetric g1, g2;
};

/// Throws Error("IncompatibleMetrics") when the compatibility check fails.
GluedMetric induced_pseudo_metric(const PseudoMetric& g1, const PseudoMetric& g2,
                                  const GluedBundle& g, double tol = kCompatibilityTol);

Eigen::MatrixXd eval_glued_metric(const GluedMetric& g, const GluedPoint& p);

// Certificate of the connection compatibility check. Over a finite locus the
// restriction maps i* and j* kill every form, so any pair passes; over an
// interval the defining identity A·(s1'+Γ¹s1)(y) = f'(y)·(s2'+Γ²s2)(f(y)) is
// sampled on a fixed family of compatible section pairs (polynomial basis up
// to degree 3, transported through the gluing).
struct ConnectionCompatCertificate {
    bool pass = false;
    bool automatic = false; // finite locus: no condition to check
    double worst = 0.0;
    double at = 0.0;
    int pairs = 0;
    int samples = 0;
};

ConnectionCompatCertificate connections_compatible_check(
    const Connection& c1, const Connection& c2, const GluedBundle& g,
    double tol = kCompatibilityTol);

// The induced connection on V1 ∪_f̃ V2 determined by a compatible pair: acts
// as ∇¹ over i1(X1\Y), as ∇² over i2(X2\f(Y)), and pair-valued over glue
// classes.
struct GluedConnection {
    Connection c1, c2;
    ConnectionCompatCertificate certificate;
};

/// Requires the gluing to be by diffeomorphisms (injective f, invertible
/// fibre matrices): throws Error("NonInvertibleGluing") otherwise, and
/// Error("IncompatibleConnections") when the compatibility check fails.
GluedConnection induce_connection(const Connection& c1, const Connection& c2,
                                  const GluedBundle& g,
                                  double tol = kCompatibilityTol);

// Value of ∇∪s at a point: a dx-coefficient vector in the owning factor's
// fibre away from the gluing, and over a glue class the ordered pair of both
// covariant values with the side-1 vector pushed into the V2 fibre by f̃.
struct GluedCovariantValue {
    struct Single {
        int side = 1;
        Eigen::VectorXd coeff;
    };
    struct Pair {
        Eigen::VectorXd from_side1; // f̃ ∘ (∇¹s1)(y), in the V2 fibre
        Eigen::VectorXd from_side2; // (∇²s2)(f(y))
    };
    std::variant<Single, Pair> v;

    bool is_pair() const { return std::holds_alternative<Pair>(v); }
    const Single& single() const { return std::get<Single>(v); }
    const Pair& pair() const { return std::get<Pair>(v); }
};

GluedCovariantValue apply_glued_connection(const GluedConnection& gc,
                                           const GluedSection& s, const GluedBundle& g,
                                           const GluedPoint& p);

/// d(g̃(s,t)) = g̃(∇∪s,t) + g̃(s,∇∪t), verified branchwise: the scalar
/// identity off the gluing locus and the Λ¹-pair identity over glue classes.
/// Factor compatibility (∇¹ with g1, ∇² with g2) is checked first.
CheckReport induced_metric_compatibility_check(const GluedConnection& gc,
                                               const GluedMetric& gm,
                                               const GluedBundle& g,
                                               const GluedSection& s,
                                               const GluedSection& t, int samples,
                                               double tol);

} // namespace dglue

#endif
