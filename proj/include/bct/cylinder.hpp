#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bct/errors.hpp"
#include "bct/expr.hpp"

namespace bct {

// Bounded continuous F(x, t), 1-periodic in t, driving x' = F(x, t) on the
// cylinder (the vector field F d_x + d_t).
struct CylinderField {
    std::function<double(double, double)> f;
    double sup_bound = 0.0;    // K >= sup |F|
    double lipschitz_x = 0.0;  // may be +inf for the non-Lipschitz cases

    double operator()(double x, double t) const { return f(x, t); }

    static CylinderField from_expr(const std::string& source, double sup_bound,
                                   double lipschitz_x);
};

struct ReturnMap {
    std::vector<double> x;
    std::vector<double> value;         // P(x_i): time-1 solution map
    std::vector<double> displacement;  // P(x_i) - x_i

    bool strictly_increasing() const;
};

ReturnMap return_map(const CylinderField& F, const std::vector<double>& x_grid,
                     double tol = 1e-10);

// Time-1 value of x' = F(x,t) + tilt from x0; the workhorse of everything
// below.
double advance_time_one(const CylinderField& F, double x0, double tilt, double tol,
                        std::vector<std::pair<double, double>>* knots = nullptr);

struct TangentLoop {
    double x0;                                    // root of the displacement
    std::vector<std::pair<double, double>> knots;  // (t, h(t))
    double residual;                               // |h(1) - h(0)|
};

std::vector<TangentLoop> closed_orbits(const CylinderField& F, double x_lo, double x_hi,
                                       int scan_points, double tol = 1e-10);

struct KneserInterval {
    double m_minus = 0.0;
    double m_plus = 0.0;
    double last_gap_minus = 0.0;  // movement between the final two tilts
    double last_gap_plus = 0.0;
};

// Encloses the time-1 reachable set from x0 by monotone tilted flows
// x' = F -+ 2^{-n}. Throws CheckFailure when the monotone sequences still
// move more than `tol` at n_max.
KneserInterval kneser_interval(const CylinderField& F, double x0, int n_max, double tol = 1e-3,
                               double ode_tol = 1e-10);

struct TransversalLoop {
    std::vector<std::pair<double, double>> knots;  // (t, h(t)), h(1) = h(0)
    double margin = 0.0;                            // min |h' - F(h, t)|
    int sign = 0;                                   // sign of h' - F
    bool constant = false;                          // h == const shortcut
};

struct TransversalOptions {
    int scan_points = 256;
    int verify_points = 2048;
    double ode_tol = 1e-10;
    double bump_width = 0.1;  // closing correction over t in [1-w, 1]
    int max_tilt_exponent = 40;
};

// Searches a constant-sign displacement band and builds a closed transversal;
// returns nullopt when no one-signed band exists in range. Throws
// CheckFailure when a band exists but the closing correction cannot keep the
// margin one-signed.
std::optional<TransversalLoop> closed_transversal(const CylinderField& F, double x_lo,
                                                  double x_hi,
                                                  const TransversalOptions& opts = {});

struct CircleFoliationResult {
    std::function<double(double, double)> F_tilde;  // equals F outside the band
    double c0_distance;        // measured sup |F~ - F|
    double sup_displacement;   // sup |P - id| on the band
    double identity_residual;  // max |P~(x) - x| over probe starts
};

// Straightens the solution curves of the band between two fixed points of P
// into circles: corrected curves u(x,t) - t*(P(x)-x) re-read as a field.
// Throws CheckFailure when the band endpoints are not fixed points.
CircleFoliationResult circle_foliation_approx(const CylinderField& F, double x_lo, double x_hi,
                                              int lattice = 512, int probes = 64,
                                              double fixed_point_tol = 1e-8,
                                              double ode_tol = 1e-10);

}  // namespace bct
