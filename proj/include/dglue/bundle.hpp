#ifndef DGLUE_BUNDLE_HPP
#define DGLUE_BUNDLE_HPP

#include "dglue/expr.hpp"
#include "dglue/gluing.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dglue {

/// Threshold below which singular values / pivots count as zero.
inline constexpr double kRankTol = 1e-10;

// One generating plot of a fibre diffeology that is rougher than standard:
// u ↦ profile(u) · direction, with profile carrying at least one abs node.
struct RoughGenerator {
    Eigen::VectorXd direction;
    Expr profile;
};

// What the library records of a fibre's diffeology: the rank and the span of
// the rough directions. That span is exactly what the dual dimension and the
// pseudo-metric rank rule depend on.
struct FibreDescriptor {
    int rank = 1;
    std::vector<RoughGenerator> rough;

    static FibreDescriptor standard(int k) { return FibreDescriptor{k, {}}; }
};

/// Dimension of the diffeological dual: rank minus dim span(rough directions).
int fibre_dual_dim(const FibreDescriptor& d);

struct TrivialPseudoBundle {
    std::string id;
    Piece base;
    FibreDescriptor fibre;
};

/// Validates the descriptor (nonzero directions, abs in every profile).
TrivialPseudoBundle make_trivial_bundle(std::string id, Piece base, FibreDescriptor fibre);

using ExprMatrix = std::vector<std::vector<Expr>>;

Eigen::MatrixXd eval_matrix(const ExprMatrix& m, double x);

// The fibrewise-linear lift f̃ covering the gluing map: one numeric matrix per
// finite locus point, or a matrix of expressions in the base variable over an
// interval locus.
struct FibreMapFinite {
    std::vector<Eigen::MatrixXd> matrices; // aligned with the sorted locus points
};

struct FibreMapInterval {
    ExprMatrix entries;
};

using FibreMap = std::variant<FibreMapFinite, FibreMapInterval>;

// V1 ∪_f̃ V2 presented by its two trivial factors, the base gluing, and f̃.
class GluedBundle {
public:
    const TrivialPseudoBundle& v1() const { return v1_; }
    const TrivialPseudoBundle& v2() const { return v2_; }
    const GluedSpace& base() const { return base_; }
    const FibreMap& fibre_map() const { return map_; }

    int rank1() const { return v1_.fibre.rank; }
    int rank2() const { return v2_.fibre.rank; }

    /// A_y for y in the gluing domain.
    Eigen::MatrixXd matrix_at(double y) const;

    /// True when the fibre map does not vary along an interval locus (always
    /// true for a single-point locus).
    bool constant_fibre_map() const;

    friend GluedBundle glue_bundles(const TrivialPseudoBundle& v1,
                                    const TrivialPseudoBundle& v2, const GluedSpace& s,
                                    FibreMap f);

private:
    GluedBundle(TrivialPseudoBundle v1, TrivialPseudoBundle v2, GluedSpace base,
                FibreMap map)
        : v1_(std::move(v1)), v2_(std::move(v2)), base_(std::move(base)),
          map_(std::move(map)) {}
    TrivialPseudoBundle v1_, v2_;
    GluedSpace base_;
    FibreMap map_;
};

GluedBundle glue_bundles(const TrivialPseudoBundle& v1, const TrivialPseudoBundle& v2,
                         const GluedSpace& s, FibreMap f);

// Ker(f̃): null(A_y) over each locus point, the zero subspace elsewhere.
// Borrows the glued bundle it was computed from, which must outlive it.
class KernelSubBundle {
public:
    /// Orthonormal basis of the kernel fibre at y (k1 × dim, no columns off Y).
    Eigen::MatrixXd basis_at(double y) const;
    int dimension_at(double y) const;

    /// Kernel dimension over the locus (constant by construction).
    int locus_dimension() const { return locus_dim_; }

    friend KernelSubBundle kernel(const GluedBundle& g);

private:
    const GluedBundle* bundle_ = nullptr;
    int locus_dim_ = 0;
};

/// Throws Error("NonconstantRankOnInterval") when rank(A_y) varies along an
/// interval locus (sampled at the standard 64-point grid).
KernelSubBundle kernel(const GluedBundle& g);

// Complement choices for the quotient: the Euclidean orthogonal complement of
// the kernel unless overridden per locus point (finite loci) or uniformly
// (interval loci).
struct ComplementChoice {
    std::map<double, Eigen::MatrixXd> per_point;
    std::optional<Eigen::MatrixXd> uniform;
};

// V1(f̃) = V1 / Ker(f̃). Cosets are stored through their canonical
// representative, the unique member lying in the orthogonal complement of the
// kernel; the chosen (possibly oblique) complement only drives lifting.
// Borrows the glued bundle, which must outlive it.
class QuotientBundle {
public:
    const GluedBundle& source() const { return *bundle_; }

    /// χ: the canonical representative of the coset of v at base point x.
    Eigen::VectorXd project(double x, const Eigen::VectorXd& v) const;

    /// The member of the coset with canonical representative `rep` that lies
    /// in the chosen complement at x.
    Eigen::VectorXd lift(double x, const Eigen::VectorXd& rep) const;

    /// rep ↦ lift as a constant matrix, available when the fibre map is
    /// constant over the locus (or the point is a finite-locus point).
    Eigen::MatrixXd lift_matrix_at(double y) const;
    Eigen::MatrixXd projection_matrix_at(double y) const;

    bool trivial_kernel() const;

    friend QuotientBundle quotient_bundle(const GluedBundle& g, const ComplementChoice& c);

private:
    struct PointData {
        Eigen::MatrixXd kernel;      // orthonormal basis of null(A_y)
        Eigen::MatrixXd canonical;   // orthonormal basis of rowspace(A_y)
        Eigen::MatrixXd complement;  // chosen complement (defaults to canonical)
        Eigen::MatrixXd proj;        // v ↦ canonical representative
        Eigen::MatrixXd lift;        // representative ↦ complement member
    };
    PointData data_at(double y) const;
    static PointData build_point(const Eigen::MatrixXd& a,
                                 const Eigen::MatrixXd* complement_override);

    const GluedBundle* bundle_ = nullptr;
    std::map<double, PointData> finite_;       // finite loci
    std::optional<PointData> interval_;        // constant-map interval loci
    ComplementChoice choice_;
};

/// Throws Error("InvalidComplement") when a supplied complement meets the
/// kernel or has the wrong dimension.
QuotientBundle quotient_bundle(const GluedBundle& g, const ComplementChoice& c = {});

// V1^f̃ over X1^f: the quotient bundle together with the base quotient and the
// identification of fibres over merged points through the pushforward f̃∼.
// Coordinates at a merged class live at its representative (smallest member).
class ReducedBundle {
public:
    const QuotientBase& base() const { return base_; }
    const QuotientBundle& quotient() const { return quotient_; }
    const GluedBundle& source() const { return quotient_.source(); }

    /// χ1^f̃ in class coordinates: the value of the reduced section obtained
    /// from fibre vector v over base point x.
    Eigen::VectorXd reduce(double x, const Eigen::VectorXd& v) const;

    /// f̃∼: image in the V2 fibre of a reduced value at reduced point x.
    Eigen::VectorXd pushforward(double x, const Eigen::VectorXd& rep) const;

    friend ReducedBundle reduced_bundle(const GluedBundle& g, const ComplementChoice& c);

private:
    QuotientBase base_;
    QuotientBundle quotient_;
    // per class: pseudo-inverse of A at the representative, for transporting
    // values from other members through their common image
    std::vector<Eigen::MatrixXd> transport_;
};

/// Composes quotient_base and quotient_bundle and verifies the projection
/// commutation and f̃∼ ∘ χ1^f̃ = f̃ on sampled data.
ReducedBundle reduced_bundle(const GluedBundle& g, const ComplementChoice& c = {});

} // namespace dglue

#endif
