#include "dglue/connection.hpp"

#include "dglue/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dglue {

namespace {

void check_square(const ExprMatrix& m, int rank, const char* what) {
    if (static_cast<int>(m.size()) != rank)
        fail("ShapeMismatch", std::string(what) + " must be " + std::to_string(rank) +
                                  "x" + std::to_string(rank));
    for (const auto& row : m)
        if (static_cast<int>(row.size()) != rank)
            fail("ShapeMismatch", std::string(what) + " must be square");
}

std::vector<Expr> matvec(const ExprMatrix& m, const std::vector<Expr>& v) {
    std::vector<Expr> out(m.size(), Expr::constant(0.0));
    for (size_t i = 0; i < m.size(); ++i)
        for (size_t j = 0; j < v.size(); ++j) out[i] = out[i] + m[i][j] * v[j];
    return out;
}

Expr bilinear(const std::vector<Expr>& s, const ExprMatrix& g,
              const std::vector<Expr>& t) {
    Expr acc = Expr::constant(0.0);
    for (size_t i = 0; i < g.size(); ++i)
        for (size_t j = 0; j < g[i].size(); ++j) acc = acc + s[i] * g[i][j] * t[j];
    return acc;
}

CheckReport max_residual(const std::vector<Expr>& residuals,
                         std::span<const double> samples, double tol) {
    CheckReport rep;
    int evaluated = 0;
    for (const Expr& r : residuals) {
        for (double x : samples) {
            double v = std::fabs(r.eval(x));
            if (!std::isfinite(v)) continue; // abs-argument kink: one-sided only
            ++evaluated;
            if (v > rep.worst) {
                rep.worst = v;
                rep.at = x;
            }
        }
    }
    rep.pass = evaluated > 0 && rep.worst <= tol;
    return rep;
}

std::vector<double> locus_grid(const GluedSpace& s) {
    Interval dom = s.interval().whole_line() ? kStandardWindow : s.interval().domain;
    return sample_grid(dom, kCompatibilitySamples + 2);
}

// Expression-level determinant by Laplace expansion; the fibres here are
// small (the paper's examples are rank one or two).
Expr expr_determinant(const ExprMatrix& m) {
    const size_t n = m.size();
    if (n == 0) return Expr::constant(1.0);
    if (n == 1) return m[0][0];
    Expr det = Expr::constant(0.0);
    for (size_t j = 0; j < n; ++j) {
        ExprMatrix minor(n - 1, std::vector<Expr>(n - 1));
        for (size_t r = 1; r < n; ++r) {
            size_t cc = 0;
            for (size_t c = 0; c < n; ++c) {
                if (c == j) continue;
                minor[r - 1][cc++] = m[r][c];
            }
        }
        Expr term = m[0][j] * expr_determinant(minor);
        det = (j % 2 == 0) ? det + term : det - term;
    }
    return det;
}

// inverse = adj(m) / det(m); requires det nonvanishing on the domain in use.
ExprMatrix expr_inverse(const ExprMatrix& m) {
    const size_t n = m.size();
    Expr det = expr_determinant(m);
    Expr invdet = Expr::reciprocal(det);
    ExprMatrix inv(n, std::vector<Expr>(n));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            ExprMatrix minor(n - 1, std::vector<Expr>(n - 1));
            size_t rr = 0;
            for (size_t r = 0; r < n; ++r) {
                if (r == j) continue;
                size_t cc = 0;
                for (size_t c = 0; c < n; ++c) {
                    if (c == i) continue;
                    minor[rr][cc++] = m[r][c];
                }
                ++rr;
            }
            Expr cof = expr_determinant(minor);
            if ((i + j) % 2 == 1) cof = -cof;
            inv[i][j] = cof * invdet;
        }
    }
    return inv;
}

ExprMatrix fibre_map_exprs(const GluedBundle& g) {
    if (const auto* iv = std::get_if<FibreMapInterval>(&g.fibre_map())) return iv->entries;
    fail("InternalError", "expression fibre map requested for a finite locus");
}

} // namespace

Connection make_connection(const TrivialPseudoBundle& bundle, ExprMatrix gamma) {
    check_square(gamma, bundle.fibre.rank, "Christoffel matrix");
    return Connection{bundle.id, bundle.base.id, std::move(gamma)};
}

std::vector<Expr> apply_connection(const Connection& c, const Section& s) {
    if (static_cast<int>(s.components.size()) != c.rank())
        fail("ShapeMismatch", "section rank does not match the connection");
    std::vector<Expr> out = matvec(c.gamma, s.components);
    for (size_t i = 0; i < out.size(); ++i) out[i] = s.components[i].derivative() + out[i];
    return out;
}

SingularSet covariant_kinks(const Connection& c, const Section& s, Interval window) {
    SingularSet out;
    for (const Expr& comp : s.components) {
        SingularSet k = singular_candidates(comp, window);
        out.insert(out.end(), k.begin(), k.end());
    }
    for (const auto& row : c.gamma)
        for (const Expr& e : row) {
            SingularSet k = singular_candidates(e, window);
            out.insert(out.end(), k.begin(), k.end());
        }
    std::sort(out.begin(), out.end());
    SingularSet dedup;
    for (double v : out)
        if (dedup.empty() || v - dedup.back() > kSingularResolution) dedup.push_back(v);
    return dedup;
}

CheckReport leibniz_check(const Connection& c, const Expr& h, const Section& s,
                          std::span<const double> samples, double tol) {
    Section hs = s;
    for (auto& comp : hs.components) comp = h * comp;
    std::vector<Expr> lhs = apply_connection(c, hs);
    std::vector<Expr> rhs = apply_connection(c, s);
    Expr dh = h.derivative();
    std::vector<Expr> residuals;
    for (size_t i = 0; i < lhs.size(); ++i)
        residuals.push_back(lhs[i] - dh * s.components[i] - h * rhs[i]);
    return max_residual(residuals, samples, tol);
}

Connection levi_civita_1d(const Expr& h, Interval dom) {
    ScanReport rep = scan_positive(h, dom, 1e-6);
    if (!rep.ok) {
        std::ostringstream os;
        os << "metric coefficient reaches " << rep.worst << " at x = " << rep.at;
        fail("NonPositiveMetric", os.str());
    }
    Expr gamma = h.derivative() * Expr::reciprocal(Expr::constant(2.0) * h);
    return Connection{"", "", ExprMatrix{{gamma}}};
}

Section covariant_derivative(const Connection& c, const DualSectionPiece& t,
                             const Section& s) {
    std::vector<Expr> cov = apply_connection(c, s);
    for (auto& comp : cov) comp = t.coeff * comp;
    return Section{s.bundle_id, std::move(cov)};
}

CheckReport covariant_linearity_check(const Connection& c, const DualSectionPiece& t1,
                                      const DualSectionPiece& t2, const Expr& h,
                                      const Section& s, std::span<const double> samples,
                                      double tol) {
    DualSectionPiece tsum{t1.coeff + t2.coeff};
    DualSectionPiece tscaled{h * t1.coeff};
    Section sum = covariant_derivative(c, tsum, s);
    Section a = covariant_derivative(c, t1, s);
    Section b = covariant_derivative(c, t2, s);
    Section scaled = covariant_derivative(c, tscaled, s);
    std::vector<Expr> residuals;
    for (size_t i = 0; i < sum.components.size(); ++i) {
        residuals.push_back(sum.components[i] - a.components[i] - b.components[i]);
        residuals.push_back(scaled.components[i] - h * a.components[i]);
    }
    return max_residual(residuals, samples, tol);
}

Connection direct_sum_connection(const Connection& a, const Connection& b) {
    if (a.base_id != b.base_id)
        fail("BaseMismatch", "direct sum needs connections over one base piece");
    const int ka = a.rank();
    const int kb = b.rank();
    ExprMatrix gamma(static_cast<size_t>(ka + kb),
                     std::vector<Expr>(static_cast<size_t>(ka + kb), Expr::constant(0.0)));
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < ka; ++j) gamma[i][j] = a.gamma[i][j];
    for (int i = 0; i < kb; ++i)
        for (int j = 0; j < kb; ++j) gamma[ka + i][ka + j] = b.gamma[i][j];
    return Connection{a.bundle_id + "⊕" + b.bundle_id, a.base_id, std::move(gamma)};
}

Connection tensor_connection(const Connection& a, const Connection& b) {
    if (a.base_id != b.base_id)
        fail("BaseMismatch", "tensor product needs connections over one base piece");
    const int ka = a.rank();
    const int kb = b.rank();
    const int k = ka * kb;
    ExprMatrix gamma(static_cast<size_t>(k),
                     std::vector<Expr>(static_cast<size_t>(k), Expr::constant(0.0)));
    // Γ¹ ⊗ I + I ⊗ Γ²
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < ka; ++j)
            for (int d = 0; d < kb; ++d)
                gamma[static_cast<size_t>(i * kb + d)][static_cast<size_t>(j * kb + d)] =
                    gamma[static_cast<size_t>(i * kb + d)][static_cast<size_t>(j * kb + d)] +
                    a.gamma[static_cast<size_t>(i)][static_cast<size_t>(j)];
    for (int d = 0; d < ka; ++d)
        for (int i = 0; i < kb; ++i)
            for (int j = 0; j < kb; ++j)
                gamma[static_cast<size_t>(d * kb + i)][static_cast<size_t>(d * kb + j)] =
                    gamma[static_cast<size_t>(d * kb + i)][static_cast<size_t>(d * kb + j)] +
                    b.gamma[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return Connection{a.bundle_id + "⊗" + b.bundle_id, a.base_id, std::move(gamma)};
}

PseudoMetric make_pseudo_metric(const TrivialPseudoBundle& bundle, ExprMatrix g,
                                Interval dom) {
    check_square(g, bundle.fibre.rank, "pseudo-metric matrix");
    const int want_rank = fibre_dual_dim(bundle.fibre);
    for (double x : sample_grid(dom, 65)) {
        Eigen::MatrixXd m = eval_matrix(g, x);
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            fail("InvalidPseudoMetric", "matrix is not symmetric at x = " + std::to_string(x));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
        if (eig.eigenvalues().minCoeff() < kEigenvalueFloor)
            fail("InvalidPseudoMetric",
                 "negative eigenvalue " + std::to_string(eig.eigenvalues().minCoeff()) +
                     " at x = " + std::to_string(x));
        int rank = static_cast<int>((eig.eigenvalues().array() > kRankTol).count());
        if (rank != want_rank)
            fail("InvalidPseudoMetric",
                 "rank " + std::to_string(rank) + " at x = " + std::to_string(x) +
                     " does not match the dual dimension " + std::to_string(want_rank));
    }
    return PseudoMetric{bundle.id, std::move(g)};
}

Eigen::MatrixXd eval_metric(const PseudoMetric& g, double x) { return eval_matrix(g.g, x); }

CheckReport metric_compatible_check(const Connection& c, const PseudoMetric& g,
                                    const Section& s, const Section& t,
                                    std::span<const double> samples, double tol) {
    Expr pairing = bilinear(s.components, g.g, t.components);
    std::vector<Expr> cov_s = apply_connection(c, s);
    std::vector<Expr> cov_t = apply_connection(c, t);
    Expr rhs = bilinear(cov_s, g.g, t.components) + bilinear(s.components, g.g, cov_t);
    std::vector<Expr> residuals{pairing.derivative() - rhs};
    return max_residual(residuals, samples, tol);
}

CheckReport metrics_compatible_check(const PseudoMetric& g1, const PseudoMetric& g2,
                                     const GluedBundle& g, double tol) {
    CheckReport rep;
    auto update = [&](double y) {
        double fy = g.base().map_point(y);
        Eigen::MatrixXd a = g.matrix_at(y);
        double res = (eval_metric(g1, y) - a.transpose() * eval_metric(g2, fy) * a)
                         .cwiseAbs()
                         .maxCoeff();
        if (res > rep.worst) {
            rep.worst = res;
            rep.at = y;
        }
    };
    if (g.base().finite_locus()) {
        for (const auto& [y, fy] : g.base().finite().points) update(y);
    } else {
        for (double y : locus_grid(g.base())) update(y);
    }
    rep.pass = rep.worst <= tol;
    return rep;
}

GluedMetric induced_pseudo_metric(const PseudoMetric& g1, const PseudoMetric& g2,
                                  const GluedBundle& g, double tol) {
    CheckReport rep = metrics_compatible_check(g1, g2, g, tol);
    if (!rep.pass) {
        std::ostringstream os;
        os << "G1 - AᵀG2A = " << rep.worst << " at y = " << rep.at;
        fail("IncompatibleMetrics", os.str());
    }
    return GluedMetric{g1, g2};
}

Eigen::MatrixXd eval_glued_metric(const GluedMetric& g, const GluedPoint& p) {
    return p.tag == GluedPoint::Tag::kFirst ? eval_metric(g.g1, p.coord)
                                            : eval_metric(g.g2, p.coord);
}

ConnectionCompatCertificate connections_compatible_check(const Connection& c1,
                                                         const Connection& c2,
                                                         const GluedBundle& g,
                                                         double tol) {
    ConnectionCompatCertificate cert;
    if (g.base().finite_locus()) {
        // i* and j* are zero maps on forms over a finite point set, so the
        // defining identity holds for every pair of connections.
        cert.pass = true;
        cert.automatic = true;
        return cert;
    }

    const Expr x = Expr::variable();
    const Expr& f = g.base().interval().map;
    Expr fprime = f.derivative();
    ExprMatrix a = fibre_map_exprs(g);
    ExprMatrix ainv = expr_inverse(a);
    const int k2 = g.rank2();

    auto grid = locus_grid(g.base());
    for (int degree = 0; degree <= 3; ++degree) {
        for (int j = 0; j < k2; ++j) {
            Section s2{c2.bundle_id, std::vector<Expr>(static_cast<size_t>(k2),
                                                       Expr::constant(0.0))};
            s2.components[static_cast<size_t>(j)] = x.pow(degree);
            // transport the basis section through the gluing to make the
            // compatible partner: s1 = A⁻¹ · (s2 ∘ f)
            std::vector<Expr> s2_on_y(static_cast<size_t>(k2));
            for (int i = 0; i < k2; ++i)
                s2_on_y[static_cast<size_t>(i)] =
                    s2.components[static_cast<size_t>(i)].compose(f);
            Section s1{c1.bundle_id, matvec(ainv, s2_on_y)};

            std::vector<Expr> cov1 = apply_connection(c1, s1);
            std::vector<Expr> cov2 = apply_connection(c2, s2);
            std::vector<Expr> lhs = matvec(a, cov1);
            ++cert.pairs;
            for (double y : grid) {
                double fy = f.eval(y);
                ++cert.samples;
                for (int i = 0; i < k2; ++i) {
                    double l = lhs[static_cast<size_t>(i)].eval(y);
                    double r =
                        fprime.eval(y) * cov2[static_cast<size_t>(i)].eval(fy);
                    double res = std::fabs(l - r);
                    if (res > cert.worst) {
                        cert.worst = res;
                        cert.at = y;
                    }
                }
            }
        }
    }
    cert.pass = cert.worst <= tol;
    return cert;
}

GluedConnection induce_connection(const Connection& c1, const Connection& c2,
                                  const GluedBundle& g, double tol) {
    if (c1.rank() != g.rank1() || c2.rank() != g.rank2())
        fail("ShapeMismatch", "connection ranks must match the glued bundle");

    // the construction requires the gluing maps to be diffeomorphisms with
    // their images: injective f and pointwise-invertible fibre matrices
    if (g.base().finite_locus()) {
        QuotientBase q = quotient_base(g.base());
        if (!q.identity())
            fail("NonInvertibleGluing", "the gluing map must be injective");
        for (const auto& [y, fy] : g.base().finite().points) {
            Eigen::MatrixXd a = g.matrix_at(y);
            if (a.rows() != a.cols() ||
                std::fabs(Eigen::FullPivLU<Eigen::MatrixXd>(a).determinant()) <= kRankTol)
                fail("NonInvertibleGluing",
                     "fibre map is singular at y = " + std::to_string(y));
        }
    } else {
        if (g.rank1() != g.rank2())
            fail("NonInvertibleGluing", "fibre map must be square over an interval locus");
        Expr det = expr_determinant(fibre_map_exprs(g));
        Interval dom = g.base().interval().whole_line() ? kStandardWindow
                                                        : g.base().interval().domain;
        if (!scan_nonvanishing(det, dom, 1e-6).ok)
            fail("NonInvertibleGluing", "fibre map determinant vanishes on the locus");
    }

    ConnectionCompatCertificate cert = connections_compatible_check(c1, c2, g, tol);
    if (!cert.pass) {
        std::ostringstream os;
        os << "defining identity residual " << cert.worst << " at y = " << cert.at;
        fail("IncompatibleConnections", os.str());
    }
    return GluedConnection{c1, c2, cert};
}

GluedCovariantValue apply_glued_connection(const GluedConnection& gc,
                                           const GluedSection& s, const GluedBundle& g,
                                           const GluedPoint& p) {
    auto eval_cov = [](const Connection& c, const Section& sec, double x) {
        std::vector<Expr> cov = apply_connection(c, sec);
        Eigen::VectorXd out(static_cast<Eigen::Index>(cov.size()));
        for (size_t i = 0; i < cov.size(); ++i)
            out(static_cast<Eigen::Index>(i)) = cov[i].eval(x);
        return out;
    };

    if (p.tag == GluedPoint::Tag::kFirst)
        return GluedCovariantValue{
            GluedCovariantValue::Single{1, eval_cov(gc.c1, s.s1, p.coord)}};

    auto pre = g.base().preimages(p.coord);
    if (pre.empty())
        return GluedCovariantValue{
            GluedCovariantValue::Single{2, eval_cov(gc.c2, s.s2, p.coord)}};

    double y = pre.front();
    return GluedCovariantValue{GluedCovariantValue::Pair{
        g.matrix_at(y) * eval_cov(gc.c1, s.s1, y), eval_cov(gc.c2, s.s2, p.coord)}};
}

CheckReport induced_metric_compatibility_check(const GluedConnection& gc,
                                               const GluedMetric& gm,
                                               const GluedBundle& g,
                                               const GluedSection& s,
                                               const GluedSection& t, int samples,
                                               double tol) {
    CheckReport rep;
    auto update = [&](double res, double at) {
        if (res > rep.worst) {
            rep.worst = res;
            rep.at = at;
        }
    };

    // factor compatibility first
    Interval w1 = g.base().window1();
    Interval w2 = g.base().window2();
    auto grid1 = sample_grid(w1, samples);
    auto grid2 = sample_grid(w2, samples);
    CheckReport side1 = metric_compatible_check(gc.c1, gm.g1, s.s1, t.s1, grid1, tol);
    CheckReport side2 = metric_compatible_check(gc.c2, gm.g2, s.s2, t.s2, grid2, tol);
    update(side1.worst, side1.at);
    update(side2.worst, side2.at);

    // glued-point pair identity: d(h1 ∪ h2) against the pair-valued pairing
    Expr h1 = bilinear(s.s1.components, gm.g1.g, t.s1.components);
    Expr h2 = bilinear(s.s2.components, gm.g2.g, t.s2.components);
    GluedDifferential dh = glued_differential(GluedFunction{h1, h2, true}, g.base());

    std::vector<double> locus_pts;
    if (g.base().finite_locus()) {
        for (const auto& [y, fy] : g.base().finite().points) locus_pts.push_back(y);
    } else {
        locus_pts = locus_grid(g.base());
    }

    for (double y : locus_pts) {
        double fy = g.base().map_point(y);
        GluedPoint cls = GluedPoint::second(fy);
        LambdaFibreValue lhs = dh.at(cls);
        auto [lhs1, lhs2] = std::get<std::pair<double, double>>(lhs);

        GluedCovariantValue cov_s = apply_glued_connection(gc, s, g, cls);
        GluedCovariantValue cov_t = apply_glued_connection(gc, t, g, cls);
        Eigen::MatrixXd g2v = eval_metric(gm.g2, fy);
        Eigen::VectorXd s2v = eval_section(s.s2, fy);
        Eigen::VectorXd t2v = eval_section(t.s2, fy);

        double rhs1 = cov_s.pair().from_side1.dot(g2v * t2v) +
                      s2v.dot(g2v * cov_t.pair().from_side1);
        double rhs2 = cov_s.pair().from_side2.dot(g2v * t2v) +
                      s2v.dot(g2v * cov_t.pair().from_side2);
        update(std::fabs(lhs1 - rhs1), y);
        update(std::fabs(lhs2 - rhs2), y);
    }

    rep.pass = rep.worst <= tol;
    return rep;
}

} // namespace dglue
