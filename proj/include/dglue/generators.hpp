#ifndef DGLUE_GENERATORS_HPP
#define DGLUE_GENERATORS_HPP

#include "dglue/expr.hpp"
#include "dglue/rng.hpp"

namespace dglue {

// The seedable generator family used by the verification suites: polynomials
// of degree <= 3, exp and sin terms with bounded coefficients. Compatibility
// certificates and the randomized law checks all draw from here, so a seed
// pins the whole run.

// Window on which the randomized law suites sample their residuals. The
// identities are exact, so the only error is floating-point cancellation;
// keeping |x| <= 2 keeps products of three family members near unit scale
// and the 1e-9 residual thresholds meaningful.
inline constexpr Interval kSuiteWindow{-2.0, 2.0};

/// c0 + c1 x + ... with coefficients in [-2, 2], degree <= max_degree.
inline Expr random_polynomial(Rng& rng, int max_degree = 3) {
    const Expr x = Expr::variable();
    int deg = rng.uniform_int(0, max_degree);
    Expr e = Expr::constant(rng.uniform(-2.0, 2.0));
    for (int k = 1; k <= deg; ++k)
        e = e + Expr::constant(rng.uniform(-2.0, 2.0)) * x.pow(k);
    return e;
}

/// Polynomial, optionally with a sin term or scaled by exp(c·x), |c| <= 1/2.
inline Expr random_smooth(Rng& rng) {
    const Expr x = Expr::variable();
    Expr e = random_polynomial(rng);
    switch (rng.uniform_int(0, 2)) {
    case 0: break;
    case 1: e = e + Expr::constant(rng.uniform(-2.0, 2.0)) * Expr::sin(x); break;
    default:
        e = e * Expr::exp(Expr::constant(rng.uniform(-0.5, 0.5)) * x);
        break;
    }
    return e;
}

/// Strictly increasing on any window: a·x + b + eps·sin(x) with a > |eps|.
inline Expr random_monotone(Rng& rng) {
    const Expr x = Expr::variable();
    double a = rng.uniform(1.0, 3.0);
    double eps = rng.uniform(0.0, 0.4 * a);
    Expr e = Expr::constant(a) * x + Expr::constant(rng.uniform(-1.0, 1.0));
    if (rng.coin()) e = e + Expr::constant(eps) * Expr::sin(x);
    if (rng.coin()) e = e + Expr::constant(rng.uniform(0.0, 0.3)) * x.pow(3);
    return e;
}

// Monotone map with slope near one and small offset. Compositions of a few
// of these keep arguments inside the suite window, which the absolute
// residual thresholds of the law checks rely on.
inline Expr random_gentle_monotone(Rng& rng) {
    const Expr x = Expr::variable();
    double a = rng.uniform(0.6, 1.1);
    double eps = rng.uniform(0.0, 0.4 * a);
    Expr e = Expr::constant(a) * x + Expr::constant(rng.uniform(-0.5, 0.5));
    if (rng.coin()) e = e + Expr::constant(eps) * Expr::sin(x);
    return e;
}

/// Positive on the standard window: 0.5 + poly² or c·exp(d·x), c >= 0.5.
inline Expr random_positive(Rng& rng) {
    if (rng.coin()) {
        Expr p = random_polynomial(rng, 1);
        return Expr::constant(0.5) + p * p;
    }
    return Expr::constant(rng.uniform(0.5, 2.0)) *
           Expr::exp(Expr::constant(rng.uniform(-0.3, 0.3)) * Expr::variable());
}

} // namespace dglue

#endif
