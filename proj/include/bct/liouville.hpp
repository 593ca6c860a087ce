#pragma once

#include "bct/plane_fields.hpp"

namespace bct {

struct LiouvilleVerdict {
    bool liouville;        // min f0 > -2 over the grid
    double min_f0;
    Vec3 worst_point;
};

LiouvilleVerdict liouville_check(const BalancedPair& bp, const PairScalars& sc, const Grid3& grid,
                                 ExecPolicy policy = ExecPolicy::Parallel);

// Convenience for the Anosov-Liouville double condition: runs the criterion
// again with alpha_- negated (which flips X and f0).
struct AnosovLiouvilleVerdict {
    LiouvilleVerdict direct;
    LiouvilleVerdict negated;
    bool anosov_liouville() const { return direct.liouville && negated.liouville; }
};
AnosovLiouvilleVerdict anosov_liouville_check(const ContactPair& pair, const Grid3& grid,
                                              ExecPolicy policy = ExecPolicy::Parallel);

// Criterion for the rescaled representative (e^sigma a_-, e^sigma a_+):
// 2 X.sigma + f0 > -2 pointwise, sigma symbolic.
LiouvilleVerdict rescale_search(const BalancedPair& bp, const PairScalars& sc,
                                const ScalarField& sigma, const Grid3& grid,
                                ExecPolicy policy = ExecPolicy::Parallel);

struct SkeletonCertificate {
    std::size_t grid_index;
    bool bounded;        // |s| stays <= A over the horizon from (sigma(p), p)
    double max_abs_s;
    bool offsets_escape;  // (sigma(p) +- delta, p) both escape, opposite signs
    double track_error;   // sup |s(t) - sigma_u(phi_t p)| along the bounded leg
};

struct SkeletonGraph {
    Grid3 grid;
    std::vector<double> sigma;  // = sigma_u samples
    std::vector<SkeletonCertificate> certificates;
    double escape_bound;        // max over points of the per-point A
    std::size_t bounded_count() const;
    std::size_t escaping_offset_count() const;
    // largest transverse difference quotient of sigma between neighbor nodes
    double transverse_quotient_sup() const;
};

// Certifies skel = graph(sigma_u) through the reduced Liouville field
// Z~ = (sinh(2s) + g0/2) d_s + X.
SkeletonGraph skeleton(const BalancedPair& bp, const PairScalars& sc, const SigmaFields& sigma,
                       double delta, double horizon, const BoundedOdeConfig& cfg = {},
                       ExecPolicy policy = ExecPolicy::Parallel);

// Pointwise Reeb field of a contact form: i_R d a = 0, a(R) = 1. Throws
// SingularSystem where a ^ da vanishes.
Vec3 reeb_vector(const OneForm& alpha, const Vec3& p);
VectorField reeb_field(const OneForm& alpha);

struct ReebPointData {
    double alpha_s_R_plus;    // from the 3x3 linear solve
    double alpha_s_R_minus;
    double formula_R_plus;    // from the closed formulas
    double formula_R_minus;
    double positivity_identity;  // -X.ln cosh(su-ss) + ru - (cosh 2ss + f0/2)
};

struct ReebTransversalityReport {
    std::vector<ReebPointData> points;
    bool signs_ok;             // a_s(R'_+) < 0 < a_s(R'_-) everywhere
    double max_cross_validation;  // relative formula-vs-solve disagreement
    double max_identity_residual;
    double epsilon_bound;      // min over grid of cosh(2 ss) + f0/2
    double sup_x_sigma_gap;    // sup |X.(sigma - sigma_s)|
};

// sigma_choice is the smooth equivalence rescale; requires
// |X.(sigma - sigma_s)| < min(cosh(2 sigma_s) + f0/2) on the grid.
ReebTransversalityReport reeb_transversality(const BalancedPair& bp, const PairScalars& sc,
                                             const SigmaFields& sigma,
                                             const ScalarField& sigma_choice,
                                             ExecPolicy policy = ExecPolicy::Parallel);

struct SmoothedField {
    GridScalar samples;       // f~ on the grid
    double sup_deviation;     // |f - f~|
    double sup_x_deviation;   // |X.(f - f~)| estimated along flow segments
    Vec3 worst_point;
};

// Flow-aligned mollification: average along short flow segments, then a
// small transverse kernel. Throws BoundViolated when either epsilon bound
// fails a posteriori.
SmoothedField smooth_along_flow(const GridScalar& f, const VectorField& X, double eps,
                                double along_window = 0.2, int transverse_radius = 1,
                                ExecPolicy policy = ExecPolicy::Parallel);

struct FoliationSeed {
    Chart chart;
    OneForm alpha;  // integrable: alpha ^ d alpha ~ 0
    OneForm beta;
};

struct SeedCheck {
    double frobenius_sup;      // |alpha ^ d alpha|
    double min_pairing;        // min of <alpha, beta> coefficient
    double min_beta_dalpha;    // min of beta ^ d alpha coefficient
    bool accepted(double tol = 1e-9) const { return frobenius_sup < tol && min_pairing > 0; }
};

SeedCheck check_seed(const FoliationSeed& seed, const Grid3& grid,
                     ExecPolicy policy = ExecPolicy::Parallel);

struct SeedToPairResult {
    ContactPair pair;
    double epsilon;
    double min_f0;
    SeedCheck seed_check;
};

// Descending line search over eps_grid for the largest feasible epsilon:
// a_+- = eps beta +- alpha must be contact with the right signs and the
// balanced pair must satisfy min f0 > -2. Throws CheckFailure when no
// epsilon is feasible.
SeedToPairResult liouville_pair_from_foliation(const FoliationSeed& seed,
                                               const std::vector<double>& eps_grid,
                                               const Grid3& grid,
                                               ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace bct
