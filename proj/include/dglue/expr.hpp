#ifndef DGLUE_EXPR_HPP
#define DGLUE_EXPR_HPP

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dglue {

/// One closed interval of the real line; used for sampling domains.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Default sampling window for pieces presented as whole copies of R.
inline constexpr Interval kStandardWindow{-5.0, 5.0};

/// n equispaced points on [iv.lo, iv.hi], both endpoints included (n >= 2).
std::vector<double> sample_grid(Interval iv, int n);

enum class ExprKind {
    kConstant,
    kVariable,
    kAdd,
    kNegate,
    kMultiply,
    kPower,      // integer exponent >= 0
    kReciprocal, // 1/u, valid only on declared domains where u is nonvanishing
    kExp,
    kSin,
    kCos,
    kAbs,
};

// Expression tree over one real variable. Immutable and structurally shared:
// copies are cheap and evaluation is pure, so values can be shared across
// threads freely.
//
// The grammar is closed under sum, product, composition and differentiation.
// The derivative of an abs node is u'·u/|u|, which is classically valid away
// from the zeros of u; those points are reported by singular-candidate scans
// and probed with one-sided difference quotients, never smoothed over.
class Expr {
public:
    Expr(); // the constant 0

    static Expr constant(double v);
    static Expr variable();

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    Expr operator-() const;

    /// u^n with n >= 0; throws Error("NegativeExponent") otherwise.
    Expr pow(int exponent) const;

    static Expr reciprocal(const Expr& denom);
    static Expr exp(const Expr& u);
    static Expr sin(const Expr& u);
    static Expr cos(const Expr& u);
    static Expr abs(const Expr& u);

    double eval(double x) const;

    /// Symbolic derivative, valid away from zeros of abs arguments.
    Expr derivative() const;

    /// Substitute the free variable by `inner`.
    Expr compose(const Expr& inner) const;

    ExprKind kind() const;
    double constant_value() const; // kConstant only
    int exponent() const;          // kPower only
    int child_count() const;
    Expr child(int i) const;

    bool has_abs() const;
    bool has_reciprocal() const;
    bool is_zero() const; // structurally the constant 0

    std::string str() const;

    friend bool same_node(const Expr& a, const Expr& b) { return a.node_ == b.node_; }

    struct Node; // defined in expr.cpp

private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

/// Ascending, deduplicated list of suspected non-differentiability points.
using SingularSet = std::vector<double>;

/// Resolution used when deduplicating singular candidates.
inline constexpr double kSingularResolution = 1e-9;

// Result of differentiate(): the symbolic derivative together with the
// generator of candidate singular points (zeros of abs arguments, located by
// sign-change bisection over a sampling grid of the requested density).
struct Derivative {
    Expr expr;
    std::vector<Expr> abs_arguments;

    SingularSet candidates(Interval window, int density = 256) const;
};

Derivative differentiate(const Expr& e);

/// Zeros of the abs arguments of `e` inside `window` (sign-change bisection).
SingularSet singular_candidates(const Expr& e, Interval window, int density = 256);

/// Left/right difference quotients at x, Richardson-extrapolated from step h0.
std::pair<double, double> one_sided_derivatives(const Expr& e, double x, double h0);

/// True iff |a(x) - b(x)| <= tol at every sample point.
bool equal_on_samples(const Expr& a, const Expr& b, std::span<const double> samples,
                      double tol);

// Text grammar: decimal literals, `x`, `+ - * / ^`, `exp( ) sin( ) cos( )
// abs( )`, parentheses. `^` takes a nonnegative integer literal; `/` becomes
// multiplication by a reciprocal node whose denominator must later pass the
// nonvanishing scan on its declared domain.
Expr parse_expr(const std::string& text);

/// All denominators of reciprocal nodes in `e` (for division-domain checks).
std::vector<Expr> reciprocal_denominators(const Expr& e);

struct ScanReport {
    bool ok = true;
    double worst = 0.0; // extremal value found
    double at = 0.0;    // where it was found
};

/// min |e| over an n-point grid; ok iff it stays >= margin.
ScanReport scan_nonvanishing(const Expr& e, Interval dom, double margin, int n = 256);

/// ok iff e >= margin on the whole grid.
ScanReport scan_positive(const Expr& e, Interval dom, double margin, int n = 256);

/// ok iff e keeps one sign with |e| >= margin on the whole grid.
ScanReport scan_constant_sign(const Expr& e, Interval dom, double margin, int n = 256);

} // namespace dglue

#endif
