#include "dglue/bundle.hpp"

#include "dglue/error.hpp"
#include "dglue/rng.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace dglue {

namespace {

int matrix_rank(const Eigen::MatrixXd& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return static_cast<int>((svd.singularValues().array() > kRankTol).count());
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::VectorXd inv = sv;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        inv(i) = sv(i) > kRankTol ? 1.0 / sv(i) : 0.0;
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// Grid used to probe expression matrices along an interval locus. An odd
// point count keeps the centre of a symmetric domain on the grid, where rank
// drops tend to hide.
std::vector<double> locus_grid(const GluedSpace& s) {
    const IntervalLocus& loc = s.interval();
    Interval dom = loc.whole_line() ? kStandardWindow : loc.domain;
    return sample_grid(dom, kCompatibilitySamples + 3);
}

} // namespace

int fibre_dual_dim(const FibreDescriptor& d) {
    if (d.rough.empty()) return d.rank;
    Eigen::MatrixXd dirs(d.rank, static_cast<Eigen::Index>(d.rough.size()));
    for (size_t j = 0; j < d.rough.size(); ++j)
        dirs.col(static_cast<Eigen::Index>(j)) = d.rough[j].direction;
    return d.rank - matrix_rank(dirs);
}

TrivialPseudoBundle make_trivial_bundle(std::string id, Piece base, FibreDescriptor fibre) {
    if (fibre.rank < 1) fail("InvalidFibre", "fibre rank must be positive");
    for (const RoughGenerator& g : fibre.rough) {
        if (g.direction.size() != fibre.rank)
            fail("InvalidFibre", "rough direction has wrong dimension");
        if (g.direction.norm() == 0.0)
            fail("InvalidFibre", "rough direction must be nonzero");
        if (!g.profile.has_abs())
            fail("InvalidFibre", "rough profiles must contain an abs node");
    }
    return TrivialPseudoBundle{std::move(id), std::move(base), std::move(fibre)};
}

Eigen::MatrixXd eval_matrix(const ExprMatrix& m, double x) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()),
                        m.empty() ? 0 : static_cast<Eigen::Index>(m[0].size()));
    for (size_t i = 0; i < m.size(); ++i)
        for (size_t j = 0; j < m[i].size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                m[i][j].eval(x);
    return out;
}

Eigen::MatrixXd GluedBundle::matrix_at(double y) const {
    if (const auto* fin = std::get_if<FibreMapFinite>(&map_)) {
        const auto& pts = base_.finite().points;
        for (size_t i = 0; i < pts.size(); ++i)
            if (pts[i].first == y) return fin->matrices[i];
        fail("PointOutsideLocus", "fibre map queried off the gluing domain");
    }
    if (!base_.in_domain(y))
        fail("PointOutsideLocus", "fibre map queried off the gluing domain");
    return eval_matrix(std::get<FibreMapInterval>(map_).entries, y);
}

bool GluedBundle::constant_fibre_map() const {
    const auto* iv = std::get_if<FibreMapInterval>(&map_);
    if (!iv) return true;
    for (const auto& row : iv->entries)
        for (const Expr& e : row)
            if (e.kind() != ExprKind::kConstant) {
                // nonconstant syntax may still be a constant function
                auto grid = locus_grid(base_);
                Eigen::MatrixXd first = eval_matrix(iv->entries, grid.front());
                for (double y : grid)
                    if ((eval_matrix(iv->entries, y) - first).cwiseAbs().maxCoeff() >
                        1e-12)
                        return false;
                return true;
            }
    return true;
}

GluedBundle glue_bundles(const TrivialPseudoBundle& v1, const TrivialPseudoBundle& v2,
                         const GluedSpace& s, FibreMap f) {
    const int k1 = v1.fibre.rank;
    const int k2 = v2.fibre.rank;

    if (const auto* fin = std::get_if<FibreMapFinite>(&f)) {
        if (!s.finite_locus())
            fail("LocusMismatch", "finite fibre map over an interval locus");
        if (fin->matrices.size() != s.finite().points.size())
            fail("LocusMismatch", "one matrix per locus point is required");
        for (const auto& m : fin->matrices)
            if (m.rows() != k2 || m.cols() != k1) {
                std::ostringstream os;
                os << "expected " << k2 << "x" << k1 << ", got " << m.rows() << "x"
                   << m.cols();
                fail("ShapeMismatch", os.str());
            }
    } else {
        if (s.finite_locus())
            fail("LocusMismatch", "interval fibre map over a finite locus");
        const auto& entries = std::get<FibreMapInterval>(f).entries;
        if (static_cast<int>(entries.size()) != k2)
            fail("ShapeMismatch", "fibre map must have k2 rows");
        Interval dom = s.interval().whole_line() ? kStandardWindow : s.interval().domain;
        for (const auto& row : entries) {
            if (static_cast<int>(row.size()) != k1)
                fail("ShapeMismatch", "fibre map must have k1 columns");
            // entries must stay finite on the locus: divisions need their
            // denominators bounded away from zero there
            for (const Expr& e : row)
                for (const Expr& den : reciprocal_denominators(e))
                    if (!scan_nonvanishing(den, dom, 1e-6).ok)
                        fail("ShapeMismatch",
                             "fibre-map entry " + e.str() +
                                 " divides by a vanishing denominator on the locus");
        }
    }

    return GluedBundle(v1, v2, s, std::move(f));
}

Eigen::MatrixXd KernelSubBundle::basis_at(double y) const {
    const GluedBundle& g = *bundle_;
    const int k1 = g.rank1();
    if (!g.base().in_domain(y)) return Eigen::MatrixXd(k1, 0);
    Eigen::MatrixXd a = g.matrix_at(y);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    int r = static_cast<int>((svd.singularValues().array() > kRankTol).count());
    return svd.matrixV().rightCols(k1 - r);
}

int KernelSubBundle::dimension_at(double y) const {
    return static_cast<int>(basis_at(y).cols());
}

KernelSubBundle kernel(const GluedBundle& g) {
    KernelSubBundle k;
    k.bundle_ = &g;
    if (g.base().finite_locus()) {
        const auto& pts = g.base().finite().points;
        k.locus_dim_ = g.rank1() - matrix_rank(g.matrix_at(pts.front().first));
        return k;
    }
    auto grid = locus_grid(g.base());
    int r0 = matrix_rank(g.matrix_at(grid.front()));
    for (double y : grid) {
        int r = matrix_rank(g.matrix_at(y));
        if (r != r0) {
            std::ostringstream os;
            os << "rank " << r << " at y = " << y << " differs from rank " << r0
               << " at y = " << grid.front();
            fail("NonconstantRankOnInterval", os.str());
        }
    }
    k.locus_dim_ = g.rank1() - r0;
    return k;
}

QuotientBundle::PointData QuotientBundle::build_point(
    const Eigen::MatrixXd& a, const Eigen::MatrixXd* complement_override) {
    const Eigen::Index k1 = a.cols();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const int r = static_cast<int>((svd.singularValues().array() > kRankTol).count());

    PointData d;
    d.kernel = svd.matrixV().rightCols(k1 - r);
    d.canonical = svd.matrixV().leftCols(r);
    d.proj = d.canonical * d.canonical.transpose();

    if (complement_override) {
        const Eigen::MatrixXd& c = *complement_override;
        if (c.rows() != k1 || c.cols() != r)
            fail("InvalidComplement",
                 "complement must have one column per coset dimension");
        Eigen::MatrixXd joint(k1, k1);
        joint << c, d.kernel;
        if (matrix_rank(joint) != k1)
            fail("InvalidComplement", "complement intersects the kernel");
        d.complement = c;
    } else {
        d.complement = d.canonical;
    }

    // lift: solve [C K](a;b) = rep and keep the complement part
    Eigen::MatrixXd joint(k1, k1);
    joint << d.complement, d.kernel;
    Eigen::MatrixXd inv = joint.inverse();
    d.lift = d.complement * inv.topRows(r);
    return d;
}

QuotientBundle::PointData QuotientBundle::data_at(double y) const {
    if (!finite_.empty()) {
        auto it = finite_.find(y);
        if (it == finite_.end())
            fail("PointOutsideLocus", "quotient data queried off the gluing domain");
        return it->second;
    }
    if (interval_) return *interval_;
    const Eigen::MatrixXd* ov = choice_.uniform ? &*choice_.uniform : nullptr;
    return build_point(bundle_->matrix_at(y), ov);
}

Eigen::VectorXd QuotientBundle::project(double x, const Eigen::VectorXd& v) const {
    if (!bundle_->base().in_domain(x)) return v;
    return data_at(x).proj * v;
}

Eigen::VectorXd QuotientBundle::lift(double x, const Eigen::VectorXd& rep) const {
    if (!bundle_->base().in_domain(x)) return rep;
    return data_at(x).lift * rep;
}

Eigen::MatrixXd QuotientBundle::lift_matrix_at(double y) const { return data_at(y).lift; }

Eigen::MatrixXd QuotientBundle::projection_matrix_at(double y) const {
    return data_at(y).proj;
}

bool QuotientBundle::trivial_kernel() const {
    if (!finite_.empty()) {
        for (const auto& [y, d] : finite_)
            if (d.kernel.cols() > 0) return false;
        return true;
    }
    if (interval_) return interval_->kernel.cols() == 0;
    return kernel(*bundle_).locus_dimension() == 0;
}

QuotientBundle quotient_bundle(const GluedBundle& g, const ComplementChoice& c) {
    (void)kernel(g); // enforces the constant-rank precondition on intervals

    QuotientBundle q;
    q.bundle_ = &g;
    q.choice_ = c;
    if (g.base().finite_locus()) {
        for (const auto& key : c.per_point)
            if (!g.base().in_domain(key.first))
                fail("InvalidComplement",
                     "complement override at a point outside the gluing domain");
        for (const auto& [y, fy] : g.base().finite().points) {
            auto it = c.per_point.find(y);
            const Eigen::MatrixXd* ov = it != c.per_point.end() ? &it->second : nullptr;
            q.finite_[y] = QuotientBundle::build_point(g.matrix_at(y), ov);
        }
    } else if (g.constant_fibre_map()) {
        double probe = locus_grid(g.base()).front();
        const Eigen::MatrixXd* ov = c.uniform ? &*c.uniform : nullptr;
        q.interval_ = QuotientBundle::build_point(g.matrix_at(probe), ov);
    }
    return q;
}

Eigen::VectorXd ReducedBundle::reduce(double x, const Eigen::VectorXd& v) const {
    const GluedSpace& s = source().base();
    if (s.finite_locus()) {
        auto cls = base_.class_of(x);
        if (!cls) return v;
        const auto& members = base_.classes()[static_cast<size_t>(*cls)];
        if (x == members.front()) return quotient_.project(x, v);
        // transport through the common image: the coset of v at x and the
        // returned representative have the same f̃-value
        return transport_[static_cast<size_t>(*cls)] * (source().matrix_at(x) * v);
    }
    return quotient_.project(x, v);
}

Eigen::VectorXd ReducedBundle::pushforward(double x, const Eigen::VectorXd& rep) const {
    const GluedSpace& s = source().base();
    if (s.finite_locus()) {
        auto cls = base_.class_of(x);
        if (!cls) fail("PointOutsideLocus", "pushforward defined over the locus only");
        double ry = base_.classes()[static_cast<size_t>(*cls)].front();
        return source().matrix_at(ry) * rep;
    }
    if (!s.in_domain(x))
        fail("PointOutsideLocus", "pushforward defined over the locus only");
    return source().matrix_at(x) * rep;
}

ReducedBundle reduced_bundle(const GluedBundle& g, const ComplementChoice& c) {
    ReducedBundle r;
    r.base_ = quotient_base(g.base());
    r.quotient_ = quotient_bundle(g, c);

    const int k1 = g.rank1();
    Rng rng(0xD1FFE0u);

    auto random_fibre = [&] {
        Eigen::VectorXd v(k1);
        for (int i = 0; i < k1; ++i) v(i) = rng.uniform(-2.0, 2.0);
        return v;
    };

    if (g.base().finite_locus()) {
        for (const auto& members : r.base_.classes())
            r.transport_.push_back(pseudo_inverse(g.matrix_at(members.front())));

        // f̃∼ ∘ χ1^f̃ = f̃ must hold on every class member; otherwise the
        // pushforward is not well-defined on the reduced fibre.
        for (const auto& members : r.base_.classes()) {
            for (double y : members) {
                Eigen::MatrixXd a = g.matrix_at(y);
                for (int t = 0; t < 100; ++t) {
                    Eigen::VectorXd v = random_fibre();
                    double res =
                        (r.pushforward(y, r.reduce(y, v)) - a * v).cwiseAbs().maxCoeff();
                    if (res > kRankTol) {
                        std::ostringstream os;
                        os << "pushforward residual " << res << " at locus point " << y
                           << "; class members map to different fibre images";
                        fail("InconsistentClassImages", os.str());
                    }
                }
            }
        }
    } else {
        auto grid = locus_grid(g.base());
        for (int t = 0; t < 100; ++t) {
            double y = grid[static_cast<size_t>(
                rng.uniform_int(0, static_cast<int>(grid.size()) - 1))];
            Eigen::MatrixXd a = g.matrix_at(y);
            Eigen::VectorXd v = random_fibre();
            double res = (r.pushforward(y, r.reduce(y, v)) - a * v).cwiseAbs().maxCoeff();
            if (res > kRankTol)
                fail("InconsistentClassImages", "pushforward residual over interval locus");
        }
    }
    return r;
}

} // namespace dglue
