#pragma once

#include <optional>

#include "bct/bounded_ode.hpp"

namespace bct {

struct MissingSigma : CheckFailure {
    using CheckFailure::CheckFailure;
};

struct FramePoint {
    Vec3 alpha_u;  // covector of e^{-sigma_u} a_- + e^{sigma_u} a_+
    Vec3 alpha_s;  // covector of e^{-sigma_s} a_- - e^{sigma_s} a_+
    double r_u;    // cosh(2 sigma_u) + f0/2
    double r_s;    // -cosh(2 sigma_s) + f0/2
    double sigma_u, sigma_s;
};

struct InvariantFrame {
    Grid3 grid;
    bool normalized = false;
    std::vector<FramePoint> at;
    SigmaFields sigma;
};

InvariantFrame assemble_frame(const BalancedPair& bp, const PairScalars& sc,
                              const SigmaFields& sigma, bool normalize,
                              ExecPolicy policy = ExecPolicy::Parallel);

// Frame covector data at an arbitrary point via fresh bounded solves.
FramePoint frame_at_point(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                          bool normalize, const BoundedOdeConfig& cfg = {});

struct FrameInvariantReport {
    double sup_construction_residual;  // stored vs recombined covectors
    double min_ru_minus_rs;            // must stay >= 2
    double sup_normalization_defect;   // |a_s ^ a_u - a_- ^ a_+| when normalized
    bool pass(double tol_rate = 1e-8, double tol_norm = 1e-8) const {
        return min_ru_minus_rs > 2.0 - tol_rate && sup_normalization_defect < tol_norm &&
               sup_construction_residual < 1e-10;
    }
};

FrameInvariantReport frame_invariants(const InvariantFrame& frame, const BalancedPair& bp,
                                      ExecPolicy policy = ExecPolicy::Parallel);

// sup over samples of the relative defect of (phi_dt)^* a_s = e^{int r_s} a_s.
double invariance_residual(const BalancedPair& bp, const PairScalars& sc,
                           const std::vector<Vec3>& samples, double dt,
                           const BoundedOdeConfig& cfg = {});

struct ConeVanishingReport {
    std::size_t cone_checked = 0;
    std::size_t cone_passed = 0;
    double worst_cone_margin = 0.0;      // min over checked of a_-(v)a_+(v) scaled
    double max_alpha_u_on_delta_plus = 0.0;
    double max_angle_eta_u_xi_plus = 0.0;  // on Delta_+ detections (rad)
    double max_alpha_s_on_delta_minus = 0.0;
    std::size_t skipped_near_delta = 0;
    bool cone_pass() const { return cone_checked > 0 && cone_passed == cone_checked; }
};

ConeVanishingReport cone_and_vanishing_checks(const InvariantFrame& frame, const BalancedPair& bp,
                                              const PositivityReport& delta,
                                              double near_delta_angle = 1e-6);

struct ConvergenceSeries {
    Vec3 sample;
    bool fixed_plane = false;  // sample sits on Delta
    std::vector<double> times;
    std::vector<double> theta_plus;   // signed line angle against eta_u
    std::vector<double> theta_minus;
    bool monotone_plus = false;   // |theta_+| strictly decreasing
    bool monotone_minus = false;
    double fitted_exponent_plus = 0.0;  // decay rate of tan(theta_+)
    bool order_ok = false;  // -pi < theta_- <= theta_+ < pi at all times
};

struct ConvergenceReport {
    std::vector<ConvergenceSeries> series;
};

ConvergenceReport plane_transport_convergence(const BalancedPair& bp, const PairScalars& sc,
                                              const std::vector<Vec3>& samples, double T_max,
                                              int steps = 40, const BoundedOdeConfig& cfg = {});

struct StrongUnstableResult {
    Vec3 base_point;
    double horizon;
    Vec3 direction;                    // unit vector in eta_u at the base point
    std::vector<double> convergence;   // angle between consecutive renormalized pushes
};

StrongUnstableResult strong_unstable_line(const BalancedPair& bp, const PairScalars& sc,
                                          const Vec3& p, double T, unsigned seed = 1,
                                          const BoundedOdeConfig& cfg = {});

struct HyperbolicIdentityReport {
    double residual_plus;   // +X.(su-ss) + ru - rs - (e^{2su}+e^{2ss})
    double residual_minus;  // -X.(su-ss) + ru - rs - (e^{-2su}+e^{-2ss})
    double residual_logcosh;  // X.ln cosh(su-ss) - (cosh 2su - cosh 2ss)
};

// X-derivatives estimated by flow finite differences of fresh solves.
HyperbolicIdentityReport hyperbolic_identities(const BalancedPair& bp, const PairScalars& sc,
                                               const Vec3& p, double h = 1e-3,
                                               const BoundedOdeConfig& cfg = {});

// sigma_s and accumulated int r_s along the forward orbit of p.
struct SigmaAlongOrbit {
    std::vector<double> times;
    std::vector<double> sigma_s;
    std::vector<double> int_r_s;
    Trajectory base;
};
SigmaAlongOrbit sigma_s_forward(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                                double t_max, const BoundedOdeConfig& cfg = {});

}  // namespace bct
