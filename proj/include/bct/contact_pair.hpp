#pragma once

#include <optional>
#include <vector>

#include "bct/fields.hpp"
#include "bct/flow.hpp"
#include "bct/grid.hpp"

namespace bct {

// A cooriented pair: alpha_plus positive contact, alpha_minus negative.
struct ContactPair {
    Chart chart;
    OneForm alpha_minus;
    OneForm alpha_plus;
};

// Representative with alpha_+ ^ d alpha_+ = - alpha_- ^ d alpha_- = dvol,
// X spanning the kernel intersection with i_X dvol = alpha_- ^ alpha_+.
struct BalancedPair {
    ContactPair pair;
    ThreeForm dvol;      // = alpha_+ ^ d alpha_+
    VectorField X;
    Expr rescale;        // conformal factor applied to the input alpha_-
};

struct PairScalars {
    ScalarField f0;       // d(alpha_- ^ alpha_+) / dvol
    ScalarField g0;       // <alpha_-, alpha_+> / dvol
    ScalarField g_minus;  // alpha_+ ^ d alpha_- / dvol
    ScalarField g_plus;   // alpha_- ^ d alpha_+ / dvol
};

struct ContactCheck {
    bool ok;
    double worst_margin_plus;   // min of alpha_+ ^ d alpha_+ coefficient
    double worst_margin_minus;  // max of alpha_- ^ d alpha_- coefficient
    Vec3 worst_point;
};

ContactCheck contact_check(const ContactPair& pair, const Grid3& grid,
                           ExecPolicy policy = ExecPolicy::Parallel);

// Throws NotContact when either sign condition fails on the grid.
BalancedPair balance(const ContactPair& pair, const Grid3& grid,
                     ExecPolicy policy = ExecPolicy::Parallel);

PairScalars pair_scalars(const BalancedPair& bp);

struct LieIdentityReport {
    double sup_minus;  // |L_X a_- - (g_- a_- + a_+)| over the grid
    double sup_plus;   // |L_X a_+ - (a_- - g_+ a_+)|
    Vec3 worst_point;
    bool pass;
};

LieIdentityReport check_lie_identities(const BalancedPair& bp, const PairScalars& sc,
                                       const Grid3& grid, double tol,
                                       ExecPolicy policy = ExecPolicy::Parallel);

enum class PairVerdict { Positive, Negative, Mixed };

struct DeltaDetection {
    std::size_t grid_index;
    Vec3 point;
    int sign;        // +1: alpha_+ ~ -u alpha_- (Delta_+), -1: Delta_-
    double u_plus;   // |alpha_+| / |alpha_-|
    double sine;     // proportionality defect
};

struct PositivityReport {
    std::vector<DeltaDetection> delta_plus;
    std::vector<DeltaDetection> delta_minus;
    PairVerdict verdict;
};

// Proportionality scan of the two covectors; works on the raw (possibly
// unbalanced) pair.
PositivityReport positivity_test(const ContactPair& pair, const Grid3& grid,
                                 double tol_angle = 1e-6,
                                 ExecPolicy policy = ExecPolicy::Parallel);

enum class SingularClass { Source, Sink, Saddle, QuadraticCandidate, Degenerate };

const char* to_string(SingularClass c);

struct SingularPoint {
    Vec3 location;
    Mat3 jacobian;          // dX
    SingularClass cls;
    double f0_value;
    double trace_residual;  // |tr dX - f0|
    int rank;               // numerical rank of dX
    double normal_det;      // det of the rank-2 normal restriction
    double tangency_angle;  // angle between ker dX and xi_+/- plane (rad)
    double speed;           // |X| after refinement
    int delta_sign;         // +1 / -1 / 0 (unresolved)
};

struct SingularSetOptions {
    double newton_tol = 1e-10;
    int newton_max_iter = 60;
    double seed_fraction = 1e-2;       // keep |X| minima below fraction*median
    double rank_threshold = 1e-7;      // relative to |dX|
    double quadratic_angle_tol = 1e-3;
    std::size_t max_points = 256;
    double dedup_radius = 1e-5;
};

struct SingularSetResult {
    std::vector<SingularPoint> points;
    int newton_divergences = 0;
    int seeds_tried = 0;
};

SingularSetResult singular_set(const BalancedPair& bp, const PairScalars& sc, const Grid3& grid,
                               const SingularSetOptions& opts = {},
                               ExecPolicy policy = ExecPolicy::Parallel);

enum class ConnectionType { A1, A2, A3, A4, Inadmissible };

const char* to_string(ConnectionType t);

struct ConnectionRecord {
    int from;  // index into the singular point list
    int to;
    Trajectory orbit;
    ConnectionType type;
};

struct ConnectionGraph {
    std::vector<ConnectionRecord> records;
    int undecided_orbits = 0;
    bool broken_triple_saddle = false;
    int skipped_degenerate = 0;
};

struct ConnectionOptions {
    double horizon = 50.0;
    double launch_offset = 1e-5;
    double capture_radius = 1e-4;
    double eigen_threshold = 1e-8;
};

ConnectionGraph connection_graph(const BalancedPair& bp, const std::vector<SingularPoint>& sing,
                                 const ConnectionOptions& opts = {});

// exp-determinant cross-check of f0 as the dvol-divergence of X:
// det d(phi_T) * D(phi_T(p))/D(p) vs exp of the f0 quadrature along the orbit.
double f0_divergence_residual(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                              double T = 0.1);

}  // namespace bct
