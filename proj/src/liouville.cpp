#include "bct/liouville.hpp"

#include <algorithm>
#include <cmath>

#include "bct/errors.hpp"
#include "bct/compiled.hpp"
#include "bct/rk45.hpp"

namespace bct {

LiouvilleVerdict liouville_check([[maybe_unused]] const BalancedPair& bp, const PairScalars& sc,
                                 const Grid3& grid, ExecPolicy policy) {
    std::vector<double> f0(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        const std::array<double, 3> q{p.x(), p.y(), p.z()};
        f0[i] = sc.f0.f.evaluate(q);
    });
    LiouvilleVerdict v{true, f0[0], grid.point(0)};
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (f0[i] < v.min_f0) {
            v.min_f0 = f0[i];
            v.worst_point = grid.point(i);
        }
    v.liouville = v.min_f0 > -2.0;
    return v;
}

AnosovLiouvilleVerdict anosov_liouville_check(const ContactPair& pair, const Grid3& grid,
                                              ExecPolicy policy) {
    AnosovLiouvilleVerdict out;
    {
        BalancedPair bp = balance(pair, grid, policy);
        PairScalars sc = pair_scalars(bp);
        out.direct = liouville_check(bp, sc, grid, policy);
    }
    ContactPair negated = pair;
    negated.alpha_minus = scale(-1.0, pair.alpha_minus);
    BalancedPair bp = balance(negated, grid, policy);
    PairScalars sc = pair_scalars(bp);
    out.negated = liouville_check(bp, sc, grid, policy);
    return out;
}

LiouvilleVerdict rescale_search(const BalancedPair& bp, const PairScalars& sc,
                                const ScalarField& sigma, const Grid3& grid, ExecPolicy policy) {
    const ScalarField xsigma = directional_derivative(bp.X, sigma);
    std::vector<double> val(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        const std::array<double, 3> q{p.x(), p.y(), p.z()};
        val[i] = 2.0 * xsigma.f.evaluate(q) + sc.f0.f.evaluate(q);
    });
    LiouvilleVerdict v{true, val[0], grid.point(0)};
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (val[i] < v.min_f0) {
            v.min_f0 = val[i];
            v.worst_point = grid.point(i);
        }
    v.liouville = v.min_f0 > -2.0;
    return v;
}

std::size_t SkeletonGraph::bounded_count() const {
    std::size_t n = 0;
    for (const auto& c : certificates) n += c.bounded ? 1 : 0;
    return n;
}

std::size_t SkeletonGraph::escaping_offset_count() const {
    std::size_t n = 0;
    for (const auto& c : certificates) n += c.offsets_escape ? 1 : 0;
    return n;
}

double SkeletonGraph::transverse_quotient_sup() const {
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (int axis = 0; axis < 3; ++axis) {
            const std::size_t j = grid.neighbor(i, axis, +1);
            if (j == i) continue;
            const double dq = std::abs(sigma[j] - sigma[i]) / grid.step()[axis];
            sup = std::max(sup, dq);
        }
    return sup;
}

namespace {

// Integrate the reduced Liouville field Z~ = (sinh(2s)+g0/2) d_s + X from
// (s0, p), reporting the max |s| and escape sign. The base point rides along
// as three state entries.
struct ZTildeRun {
    double max_abs_s = 0.0;
    int escape_sign = 0;   // 0: stayed within |s| <= bound
    double track_error = 0.0;
};

ZTildeRun run_ztilde(const BalancedPair& bp, const PairScalars& sc, const Vec3& p, double s0,
                     double horizon, double s_bound,
                     const std::function<double(double)>* track, double flow_tol,
                     const expr::Compiled* tape_in = nullptr) {
    using RK = Rk45<4>;
    const expr::Compiled local_tape =
        tape_in ? expr::Compiled()
                : expr::Compiled::build({bp.X.c[0], bp.X.c[1], bp.X.c[2], sc.g0.f});
    const expr::Compiled& tape = tape_in ? *tape_in : local_tape;
    // Box exits freeze the base point and its coefficient, matching the
    // bounded-ODE sampler's freeze rule.
    bool frozen = false;
    double g_frozen = 0.0;
    auto rhs = [&](double, const RK::State& y, RK::State& dy) {
        if (frozen) {
            dy[0] = dy[1] = dy[2] = 0.0;
            dy[3] = std::sinh(2.0 * y[3]) + 0.5 * g_frozen;
            return;
        }
        const std::array<double, 3> a{y[0], y[1], y[2]};
        double vals[4];
        tape.eval(a, vals);
        dy[0] = vals[0];
        dy[1] = vals[1];
        dy[2] = vals[2];
        dy[3] = std::sinh(2.0 * y[3]) + 0.5 * vals[3];
    };
    ZTildeRun out;
    RK::State y{p.x(), p.y(), p.z(), s0}, k1{}, y_new{}, k_last{};
    rhs(0, y, k1);
    double t = 0.0, h = 1e-2;
    const Chart& chart = bp.pair.chart;
    const int max_steps = 500000;
    for (int i = 0; i < max_steps && t < horizon; ++i) {
        out.max_abs_s = std::max(out.max_abs_s, std::abs(y[3]));
        if (track) out.track_error = std::max(out.track_error, std::abs(y[3] - (*track)(t)));
        if (y[3] > s_bound) {
            out.escape_sign = +1;
            return out;
        }
        if (y[3] < -s_bound) {
            out.escape_sign = -1;
            return out;
        }
        h = std::min(h, horizon - t);
        const double err = RK::step(rhs, t, y, h, k1, y_new, k_last, flow_tol, flow_tol);
        if (err > 1.0) {
            h = rk45_next_step(h, err);
            continue;
        }
        t += h;
        y = y_new;
        k1 = k_last;
        const WrapResult w = chart.wrap(Vec3(y[0], y[1], y[2]));
        if (w.wrapped) {
            y[0] = w.point[0];
            y[1] = w.point[1];
            y[2] = w.point[2];
            rhs(t, y, k1);
        }
        if (!frozen && chart.is_box() && !chart.contains(Vec3(y[0], y[1], y[2]))) {
            const Box& box = chart.box_data();
            std::array<double, 3> clamped;
            for (int k = 0; k < 3; ++k)
                clamped[k] = std::clamp(y[k], box.lo[k], box.hi[k]);
            double vals[4];
            tape.eval(clamped, vals);
            g_frozen = vals[3];
            for (int k = 0; k < 3; ++k) y[k] = clamped[k];
            frozen = true;
            rhs(t, y, k1);
        }
        h = rk45_next_step(h, err);
    }
    out.max_abs_s = std::max(out.max_abs_s, std::abs(y[3]));
    return out;
}

}  // namespace

SkeletonGraph skeleton(const BalancedPair& bp, const PairScalars& sc, const SigmaFields& sigma,
                       double delta, double horizon, const BoundedOdeConfig& cfg,
                       ExecPolicy policy) {
    SkeletonGraph graph;
    graph.grid = sigma.grid;
    graph.sigma = sigma.sigma_u;
    graph.certificates.resize(sigma.grid.size());
    std::vector<double> bounds(sigma.grid.size(), 0.0);
    const SigmaSolverContext sctx(bp, sc);
    const expr::Compiled ztape =
        expr::Compiled::build({bp.X.c[0], bp.X.c[1], bp.X.c[2], sc.g0.f});

    parallel_for(sigma.grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = sigma.grid.point(i);
        SkeletonCertificate cert;
        cert.grid_index = i;
        if (sigma.missing_u[i]) {
            cert.bounded = false;
            cert.offsets_escape = false;
            graph.certificates[i] = cert;
            return;
        }
        const double s0 = sigma.sigma_u[i];

        // per-point escape bound from the bounded-solution constants
        CoefficientSampler sampler = CoefficientSampler::along_flow(
            bp.X, sc.g0, sctx.dg0, p, horizon, false, false, cfg.flow_tol);
        BoundedSolutionProblem prob = BoundedSolutionProblem::build(std::move(sampler), cfg);
        const double A = prob.A;
        bounds[i] = A;

        // the graph trajectory should track sigma_u along the base flow
        SigmaPointSolve sol = solve_sigma_point(sctx, p, /*stable_side=*/false, cfg);
        std::function<double(double)> track = [path = sol.value.bounded_path](double t) {
            return path.y_at(t);
        };

        ZTildeRun graph_run =
            run_ztilde(bp, sc, p, s0, horizon, A, &track, cfg.integrator_tol, &ztape);
        cert.bounded = graph_run.escape_sign == 0 && graph_run.max_abs_s <= A;
        cert.max_abs_s = graph_run.max_abs_s;
        cert.track_error = graph_run.track_error;

        if (delta > 0) {
            ZTildeRun up = run_ztilde(bp, sc, p, s0 + delta, horizon, A + 0.5, nullptr,
                                      cfg.integrator_tol, &ztape);
            ZTildeRun down = run_ztilde(bp, sc, p, s0 - delta, horizon, A + 0.5, nullptr,
                                        cfg.integrator_tol, &ztape);
            cert.offsets_escape = up.escape_sign == +1 && down.escape_sign == -1;
        } else {
            cert.offsets_escape = cert.bounded;
        }
        graph.certificates[i] = cert;
    });
    graph.escape_bound = *std::max_element(bounds.begin(), bounds.end());
    return graph;
}

Vec3 reeb_vector(const OneForm& alpha, const Vec3& p) {
    const TwoForm da = exterior_derivative(alpha);
    const Vec3 curl = da.coefficients(p);  // i_v da = 0 iff v is parallel to this
    const Vec3 a = alpha.covector(p);
    const double vol = a.dot(curl);  // coefficient of alpha ^ d alpha
    const double scale = std::max(a.norm() * curl.norm(), 1e-300);
    if (std::abs(vol) < 1e-12 * scale)
        throw SingularSystem("alpha ^ d alpha vanishes: no Reeb vector at this point");
    return curl / vol;
}

VectorField reeb_field(const OneForm& alpha) {
    const TwoForm da = exterior_derivative(alpha);
    const Expr vol = wedge(alpha, da).c;
    return VectorField{alpha.chart, {da.c[0] / vol, da.c[1] / vol, da.c[2] / vol}};
}

ReebTransversalityReport reeb_transversality(const BalancedPair& bp, const PairScalars& sc,
                                             const SigmaFields& sigma,
                                             const ScalarField& sigma_choice,
                                             ExecPolicy policy) {
    const Grid3& grid = sigma.grid;
    const ScalarField xsig = directional_derivative(bp.X, sigma_choice);

    // rescaled forms e^{-sigma} a_-, e^{+sigma} a_+ stay symbolic
    const Expr em = expr::exp(expr::constant(0.0) - sigma_choice.f);
    const Expr ep = expr::exp(sigma_choice.f);
    const OneForm am_r = scale(em, bp.pair.alpha_minus);
    const OneForm ap_r = scale(ep, bp.pair.alpha_plus);
    const VectorField R_minus = reeb_field(am_r);
    const VectorField R_plus = reeb_field(ap_r);

    ReebTransversalityReport rep;
    rep.points.resize(grid.size());
    std::vector<double> eps_bound(grid.size()), xgap(grid.size());

    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        const std::array<double, 3> q{p.x(), p.y(), p.z()};
        const double su = sigma.sigma_u[i];
        const double ss = sigma.sigma_s[i];
        const double f0 = sc.f0.f.evaluate(q);
        const double g0 = sc.g0.f.evaluate(q);

        ReebPointData d;
        // linear-solve route
        const Vec3 am = bp.pair.alpha_minus.covector(p);
        const Vec3 ap = bp.pair.alpha_plus.covector(p);
        const Vec3 as = std::exp(-ss) * am - std::exp(ss) * ap;
        d.alpha_s_R_plus = as.dot(R_plus(p));
        d.alpha_s_R_minus = as.dot(R_minus(p));

        // closed-formula route; X-derivatives of sigma_u/s are exact from
        // their defining equations
        const double xsu = std::sinh(2 * su) + 0.5 * g0;
        const double xss = -std::sinh(2 * ss) + 0.5 * g0;
        const double x_diff = xsu - xss;
        const double ru = std::cosh(2 * su) + 0.5 * f0;
        const double rs = -std::cosh(2 * ss) + 0.5 * f0;
        const double xs = xsig.f.evaluate(q);
        const double x_logcosh = std::cosh(2 * su) - std::cosh(2 * ss);
        const double sig = sigma_choice.f.evaluate(q);
        const double pre_p = 2.0 * std::exp(su - sig) * std::cosh(su - ss) /
                             (x_diff + ru - rs);
        const double pre_m = 2.0 * std::exp(sig - su) * std::cosh(su - ss) /
                             (-x_diff + ru - rs);
        d.formula_R_plus = -pre_p * ((xs - xss) - x_logcosh + ru);
        d.formula_R_minus = -pre_m * ((xs - xss) + x_logcosh - ru);
        d.positivity_identity = (-x_logcosh + ru) - (std::cosh(2 * ss) + 0.5 * f0);

        eps_bound[i] = std::cosh(2 * ss) + 0.5 * f0;
        xgap[i] = std::abs(xs - xss);
        rep.points[i] = d;
    });

    rep.epsilon_bound = *std::min_element(eps_bound.begin(), eps_bound.end());
    rep.sup_x_sigma_gap = *std::max_element(xgap.begin(), xgap.end());
    if (rep.sup_x_sigma_gap >= rep.epsilon_bound)
        throw HypothesisViolated("|X.(sigma - sigma_s)| exceeds min(cosh(2 sigma_s) + f0/2)");

    rep.signs_ok = true;
    rep.max_cross_validation = 0.0;
    rep.max_identity_residual = 0.0;
    for (const auto& d : rep.points) {
        if (!(d.alpha_s_R_plus < 0 && d.alpha_s_R_minus > 0)) rep.signs_ok = false;
        rep.max_cross_validation = std::max(
            rep.max_cross_validation,
            std::max(std::abs(d.alpha_s_R_plus - d.formula_R_plus) /
                         std::max(1e-12, std::abs(d.formula_R_plus)),
                     std::abs(d.alpha_s_R_minus - d.formula_R_minus) /
                         std::max(1e-12, std::abs(d.formula_R_minus))));
        rep.max_identity_residual =
            std::max(rep.max_identity_residual, std::abs(d.positivity_identity));
    }
    return rep;
}

SmoothedField smooth_along_flow(const GridScalar& f, const VectorField& X, double eps,
                                double along_window, int transverse_radius, ExecPolicy policy) {
    const Grid3& grid = f.grid();

    // Step 1: average along short flow segments (Simpson weights).
    std::vector<double> along(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        FlowOptions fo;
        fo.tol = 1e-9;
        const Trajectory fwd = flow_trajectory(X, p, along_window, fo);
        const Trajectory bwd = flow_trajectory(X, p, -along_window, fo);
        const int m = 8;
        double acc = 0.0, wsum = 0.0;
        for (int k = -m; k <= m; ++k) {
            const double t = along_window * k / m;
            const double w = 1.0 + std::cos(M_PI * k / m);  // smooth taper
            const Vec3 q = t >= 0 ? fwd.at(t) : bwd.at(t);
            acc += w * f.interpolate(q);
            wsum += w;
        }
        along[i] = acc / wsum;
    });
    GridScalar stage1(grid, std::move(along));

    // Step 2: small transverse kernel on the grid.
    std::vector<double> out(grid.size());
    const int r = transverse_radius;
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        double acc = 0.0, wsum = 0.0;
        for (int dz = -r; dz <= r; ++dz)
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    std::size_t j = i;
                    j = stage1.grid().neighbor(j, 0, dx);
                    j = stage1.grid().neighbor(j, 1, dy);
                    j = stage1.grid().neighbor(j, 2, dz);
                    const double w = 1.0 / (1.0 + dx * dx + dy * dy + dz * dz);
                    acc += w * stage1.at(j);
                    wsum += w;
                }
        out[i] = acc / wsum;
    });
    GridScalar smoothed(grid, std::move(out));

    // a posteriori verification of both sup bounds
    SmoothedField result{smoothed, 0.0, 0.0, grid.point(0)};
    const double h = 1e-3;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec3 p = grid.point(i);
        const double dev = std::abs(f.at(i) - smoothed.at(i));
        FlowOptions fo;
        fo.tol = 1e-9;
        const Vec3 pf = flow_trajectory(X, p, +h, fo).end_point;
        const Vec3 pb = flow_trajectory(X, p, -h, fo).end_point;
        const double xf = (f.interpolate(pf) - f.interpolate(pb)) / (2 * h);
        const double xs = (smoothed.interpolate(pf) - smoothed.interpolate(pb)) / (2 * h);
        const double xdev = std::abs(xf - xs);
        if (dev > result.sup_deviation) {
            result.sup_deviation = dev;
            result.worst_point = p;
        }
        if (xdev > result.sup_x_deviation) {
            result.sup_x_deviation = xdev;
            result.worst_point = p;
        }
    }
    if (result.sup_deviation > eps || result.sup_x_deviation > eps)
        throw BoundViolated("smoothing bounds violated near (" +
                            std::to_string(result.worst_point.x()) + ", " +
                            std::to_string(result.worst_point.y()) + ", " +
                            std::to_string(result.worst_point.z()) + ")");
    return result;
}

SeedCheck check_seed(const FoliationSeed& seed, const Grid3& grid, ExecPolicy policy) {
    const ThreeForm frob = frobenius_residual(seed.alpha);
    const ThreeForm pairing = ThreeForm{
        seed.chart, wedge(seed.alpha, exterior_derivative(seed.beta)).c +
                        wedge(seed.beta, exterior_derivative(seed.alpha)).c};
    const ThreeForm bda = wedge(seed.beta, exterior_derivative(seed.alpha));

    std::vector<double> fr(grid.size()), pr(grid.size()), bd(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        fr[i] = std::abs(frob.coefficient(p));
        pr[i] = pairing.coefficient(p);
        bd[i] = bda.coefficient(p);
    });
    SeedCheck c{0.0, pr[0], bd[0]};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        c.frobenius_sup = std::max(c.frobenius_sup, fr[i]);
        c.min_pairing = std::min(c.min_pairing, pr[i]);
        c.min_beta_dalpha = std::min(c.min_beta_dalpha, bd[i]);
    }
    return c;
}

SeedToPairResult liouville_pair_from_foliation(const FoliationSeed& seed,
                                               const std::vector<double>& eps_grid,
                                               const Grid3& grid, ExecPolicy policy) {
    SeedCheck sec = check_seed(seed, grid, policy);
    if (!sec.accepted())
        throw CheckFailure("foliation seed rejected: alpha not integrable or <alpha,beta> <= 0");

    std::vector<double> sorted = eps_grid;
    std::sort(sorted.rbegin(), sorted.rend());
    for (double eps : sorted) {
        if (eps <= 0) continue;
        ContactPair candidate{seed.chart,
                              scale(eps, seed.beta) - seed.alpha,
                              scale(eps, seed.beta) + seed.alpha};
        if (!contact_check(candidate, grid, policy).ok) continue;
        BalancedPair bp = balance(candidate, grid, policy);
        PairScalars sc = pair_scalars(bp);
        LiouvilleVerdict v = liouville_check(bp, sc, grid, policy);
        if (v.liouville) return SeedToPairResult{candidate, eps, v.min_f0, sec};
    }
    throw CheckFailure("no feasible epsilon in the search grid");
}

}  // namespace bct
