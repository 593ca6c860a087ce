#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bct/contact_pair.hpp"

namespace bct {

struct BoundedOdeConfig {
    double epsilon = 2.0;          // lower bound of d/dy sinh(2y) + ...
    double escape_margin = 0.5;    // escape declared at |y| > A + margin
    double tol = 1e-8;             // target accuracy of the bounded value
    double integrator_tol = 1e-10;
    double flow_tol = 1e-10;
    double c_headroom = 1.1;       // oscillation estimate safety factor
    double horizon_scale = 1.0;    // T = scale * ln((A+1)/tol) / epsilon
    int max_c_retries = 3;
    bool compute_residuals = true;
    double residual_step = 1e-2;
};

// Non-autonomous coefficient t -> g0(phi_t(p)) cached along one trajectory;
// past the cached horizon (Box exits, stagnation) the value freezes.
class CoefficientSampler {
  public:
    CoefficientSampler() = default;
    static CoefficientSampler constant(double g);
    static CoefficientSampler from_function(std::function<double(double)> g, double osc_bound);
    // backward=true samples along -X; negate flips the sign of g0 (the
    // sigma_s substitution X -> -X). `dg0` is the precomputed X.g0.
    static CoefficientSampler along_flow(const VectorField& X, const ScalarField& g0,
                                         const ScalarField& dg0, const Vec3& p, double horizon,
                                         bool backward, bool negate, double flow_tol);

    double operator()(double t) const;
    double at_zero() const { return g0_; }
    double oscillation() const { return osc_; }  // sup_t |g(t) - g(0)|
    bool frozen() const { return frozen_; }
    double freeze_time() const { return freeze_time_; }

  private:
    struct Knot {
        double t, g, dg;
    };
    std::vector<Knot> knots_;
    std::function<double(double)> fn_;
    double g0_ = 0.0;
    double osc_ = 0.0;
    bool frozen_ = false;
    double freeze_time_ = 0.0;
};

// F(y, t) = sinh(2y) + g(t)/2 with its escape-bound constants:
// (C1) holds with epsilon = 2, (C2) with C = sup|g(t) - g(0)|/2, and
// A = (1 + C + |F(0,0)|) / epsilon.
struct BoundedSolutionProblem {
    CoefficientSampler g;
    double epsilon = 2.0;
    double C = 0.0;
    double A = 0.0;

    static BoundedSolutionProblem build(CoefficientSampler sampler, const BoundedOdeConfig& cfg);
    void inflate_c(double factor);  // BracketFailure recovery

    double rhs(double y, double t) const { return std::sinh(2.0 * y) + 0.5 * g(t); }
};

enum class ShotKind { EscapePlus, EscapeMinus, Undecided };

struct ShotResult {
    ShotKind kind = ShotKind::Undecided;
    double escape_time = 0.0;                    // tau for escapes
    std::vector<std::pair<double, double>> path;  // (t, y) knots
    double y_at(double t) const;                  // linear interp on knots
};

ShotResult classify_shot(const BoundedSolutionProblem& prob, double y0, double horizon,
                         double integrator_tol);

struct BoundedValue {
    double y0 = 0.0;
    double width = 0.0;        // certified |y0 - truth| bound
    double horizon = 0.0;      // shot horizon T used
    int shots = 0;
    bool undecided_exit = false;  // bisection ended on an undecided shot
    ShotResult bounded_path;      // the best undecided shot (the solution)
};

// Escape-bound bisection on [-A, A]. Throws BracketFailure when the bracket
// endpoints do not escape with the expected signs.
BoundedValue bounded_initial_value(const BoundedSolutionProblem& prob, const BoundedOdeConfig& cfg);

struct SigmaFields {
    Grid3 grid;
    std::vector<double> sigma_u, sigma_s;
    std::vector<double> width_u, width_s;
    std::vector<double> residual_u, residual_s;  // NaN where not computed
    std::vector<char> frozen_u, frozen_s;        // coefficient froze (Box rule)
    std::vector<char> missing_u, missing_s;      // solver failed after retries

    double sup_abs_sigma_u() const;
    double sup_abs_sigma_s() const;
    double sup_residual() const;
};

// Bounded value per grid point: sigma_u along X, sigma_s along -X.
SigmaFields sigma_fields(const BalancedPair& bp, const PairScalars& sc, const Grid3& grid,
                         const BoundedOdeConfig& cfg = {},
                         ExecPolicy policy = ExecPolicy::Parallel);

// Shared per-pair state for the sigma solvers: the symbolic X.g0 is built
// once and reused by every per-point solve.
struct SigmaSolverContext {
    const BalancedPair& bp;
    const PairScalars& sc;
    ScalarField dg0;
    SigmaSolverContext(const BalancedPair& b, const PairScalars& s)
        : bp(b), sc(s), dg0(directional_derivative(b.X, s.g0)) {}
};

// One-point solves (used by residuals, frames at off-grid points, probes).
struct SigmaPointSolve {
    BoundedValue value;
    bool frozen = false;
};
SigmaPointSolve solve_sigma_point(const SigmaSolverContext& ctx, const Vec3& p, bool stable_side,
                                  const BoundedOdeConfig& cfg);
SigmaPointSolve solve_sigma_u(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                              const BoundedOdeConfig& cfg = {});
SigmaPointSolve solve_sigma_s(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                              const BoundedOdeConfig& cfg = {});

// |sigma_u(phi_s(p)) - y(s)| where y is the bounded solution from sigma_u(p).
double sigma_flow_equivariance_residual(const BalancedPair& bp, const PairScalars& sc,
                                        const Vec3& p, double s,
                                        const BoundedOdeConfig& cfg = {});

struct ContinuityProbeRow {
    double amplitude;
    double sup_deviation;
};

// Recomputes sigma_u for shrinking conformal-tilt perturbations
// alpha_+ -> alpha_+ + a * bump * alpha_-. The bump must be symbolic.
std::vector<ContinuityProbeRow> continuity_probe(const ContactPair& pair, const Grid3& grid,
                                                 const std::vector<double>& amplitudes,
                                                 const ScalarField& bump,
                                                 const std::vector<Vec3>& sample_points,
                                                 const BoundedOdeConfig& cfg = {});

}  // namespace bct
