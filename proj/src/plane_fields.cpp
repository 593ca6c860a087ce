#include "bct/plane_fields.hpp"

#include <cmath>
#include <random>

#include "bct/compiled.hpp"
#include "bct/rk45.hpp"

namespace bct {

namespace {

FramePoint frame_point_from(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                            double su, double ss, bool normalize) {
    FramePoint f;
    f.sigma_u = su;
    f.sigma_s = ss;
    const Vec3 am = bp.pair.alpha_minus.covector(p);
    const Vec3 ap = bp.pair.alpha_plus.covector(p);
    f.alpha_u = std::exp(-su) * am + std::exp(su) * ap;
    f.alpha_s = std::exp(-ss) * am - std::exp(ss) * ap;
    const std::array<double, 3> q{p.x(), p.y(), p.z()};
    const double f0 = sc.f0.f.evaluate(q);
    f.r_u = std::cosh(2.0 * su) + 0.5 * f0;
    f.r_s = -std::cosh(2.0 * ss) + 0.5 * f0;
    if (normalize) {
        const double k = 1.0 / std::sqrt(2.0 * std::cosh(su - ss));
        f.alpha_u *= k;
        f.alpha_s *= k;
    }
    return f;
}

}  // namespace

InvariantFrame assemble_frame(const BalancedPair& bp, const PairScalars& sc,
                              const SigmaFields& sigma, bool normalize, ExecPolicy policy) {
    for (std::size_t i = 0; i < sigma.grid.size(); ++i)
        if (sigma.missing_u[i] || sigma.missing_s[i])
            throw MissingSigma("sigma unsolved at grid index " + std::to_string(i));

    InvariantFrame frame;
    frame.grid = sigma.grid;
    frame.normalized = normalize;
    frame.sigma = sigma;
    frame.at.resize(sigma.grid.size());
    parallel_for(sigma.grid.size(), policy, [&](std::size_t i) {
        frame.at[i] = frame_point_from(bp, sc, sigma.grid.point(i), sigma.sigma_u[i],
                                       sigma.sigma_s[i], normalize);
    });
    return frame;
}

FramePoint frame_at_point(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                          bool normalize, const BoundedOdeConfig& cfg) {
    const double su = solve_sigma_u(bp, sc, p, cfg).value.y0;
    const double ss = solve_sigma_s(bp, sc, p, cfg).value.y0;
    return frame_point_from(bp, sc, p, su, ss, normalize);
}

FrameInvariantReport frame_invariants(const InvariantFrame& frame, const BalancedPair& bp,
                                      ExecPolicy policy) {
    const std::size_t n = frame.grid.size();
    std::vector<double> cons(n), rate(n), norm(n);
    parallel_for(n, policy, [&](std::size_t i) {
        const Vec3 p = frame.grid.point(i);
        const FramePoint& f = frame.at[i];
        const Vec3 am = bp.pair.alpha_minus.covector(p);
        const Vec3 ap = bp.pair.alpha_plus.covector(p);
        const double k =
            frame.normalized ? 1.0 / std::sqrt(2.0 * std::cosh(f.sigma_u - f.sigma_s)) : 1.0;
        const Vec3 au = k * (std::exp(-f.sigma_u) * am + std::exp(f.sigma_u) * ap);
        const Vec3 as = k * (std::exp(-f.sigma_s) * am - std::exp(f.sigma_s) * ap);
        cons[i] = std::max((au - f.alpha_u).norm(), (as - f.alpha_s).norm());
        rate[i] = f.r_u - f.r_s;
        norm[i] = frame.normalized
                      ? (f.alpha_s.cross(f.alpha_u) - am.cross(ap)).norm()
                      : 0.0;
    });
    FrameInvariantReport rep{0.0, rate.empty() ? 0.0 : rate[0], 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        rep.sup_construction_residual = std::max(rep.sup_construction_residual, cons[i]);
        rep.min_ru_minus_rs = std::min(rep.min_ru_minus_rs, rate[i]);
        rep.sup_normalization_defect = std::max(rep.sup_normalization_defect, norm[i]);
    }
    return rep;
}

SigmaAlongOrbit sigma_s_forward(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                                double t_max, const BoundedOdeConfig& cfg) {
    SigmaAlongOrbit out;
    FlowOptions fo;
    fo.tol = cfg.flow_tol;
    out.base = flow_trajectory(bp.X, p, t_max, fo);
    const double ss0 = solve_sigma_s(bp, sc, p, cfg).value.y0;

    // Forward evolution of sigma_s along the orbit is contracting, so plain
    // integration from the solved initial value stays accurate.
    const expr::Compiled tape = expr::Compiled::build({sc.g0.f, sc.f0.f});
    auto coeffs_at = [&](double t) {
        const Vec3 q = out.base.at(t);
        const std::array<double, 3> a{q.x(), q.y(), q.z()};
        std::array<double, 2> gv{};
        tape.eval(a, gv.data());
        return gv;
    };

    using RK = Rk45<2>;
    auto rhs = [&](double t, const RK::State& y, RK::State& dy) {
        const auto gv = coeffs_at(t);
        dy[0] = -std::sinh(2.0 * y[0]) + 0.5 * gv[0];
        dy[1] = -std::cosh(2.0 * y[0]) + 0.5 * gv[1];  // r_s along the orbit
    };
    RK::State y{ss0, 0.0}, k1{}, y_new{}, k_last{};
    rhs(0.0, y, k1);
    const double t_end = out.base.end_time;
    double t = 0.0, h = std::min(0.01, t_end > 0 ? t_end : 0.01);
    out.times.push_back(0.0);
    out.sigma_s.push_back(ss0);
    out.int_r_s.push_back(0.0);
    while (t < t_end) {
        h = std::min(h, t_end - t);
        const double err = RK::step(rhs, t, y, h, k1, y_new, k_last, cfg.integrator_tol,
                                    cfg.integrator_tol);
        if (err > 1.0) {
            h = rk45_next_step(h, err);
            continue;
        }
        t += h;
        y = y_new;
        k1 = k_last;
        out.times.push_back(t);
        out.sigma_s.push_back(y[0]);
        out.int_r_s.push_back(y[1]);
        h = rk45_next_step(h, err);
    }
    return out;
}

double invariance_residual(const BalancedPair& bp, const PairScalars& sc,
                           const std::vector<Vec3>& samples, double dt,
                           const BoundedOdeConfig& cfg) {
    if (dt == 0.0) return 0.0;
    double worst = 0.0;
    for (const Vec3& p : samples) {
        SigmaAlongOrbit orbit = sigma_s_forward(bp, sc, p, dt, cfg);
        if (orbit.base.end_time < dt * (1.0 - 1e-9)) continue;  // left the chart
        FlowOptions lfo;
        lfo.tol = cfg.flow_tol;
        LinearizedFlow lf = linearized_flow(bp.X, p, dt, lfo);
        const Vec3 q = lf.base.end_point;

        auto alpha_s_at = [&](const Vec3& pt, double ss) {
            return Vec3(std::exp(-ss) * bp.pair.alpha_minus.covector(pt) -
                        std::exp(ss) * bp.pair.alpha_plus.covector(pt));
        };
        const Vec3 as_start = alpha_s_at(p, orbit.sigma_s.front());
        const Vec3 as_end = alpha_s_at(q, orbit.sigma_s.back());

        // (phi_dt)^* a_s at p, against e^{int r_s} a_s(p)
        const Vec3 pulled = lf.matrix.transpose() * as_end;
        const Vec3 expected = std::exp(orbit.int_r_s.back()) * as_start;
        const double denom = std::max(1e-300, expected.norm());
        worst = std::max(worst, (pulled - expected).norm() / denom);
    }
    return worst;
}

ConeVanishingReport cone_and_vanishing_checks(const InvariantFrame& frame, const BalancedPair& bp,
                                              const PositivityReport& delta,
                                              double near_delta_angle) {
    ConeVanishingReport rep;
    const Grid3& grid = frame.grid;
    std::vector<char> on_delta(grid.size(), 0);
    for (const auto& d : delta.delta_plus) on_delta[d.grid_index] = 1;
    for (const auto& d : delta.delta_minus) on_delta[d.grid_index] = 2;

    rep.worst_cone_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec3 p = grid.point(i);
        const FramePoint& f = frame.at[i];
        const Vec3 am = bp.pair.alpha_minus.covector(p);
        const Vec3 ap = bp.pair.alpha_plus.covector(p);

        if (on_delta[i] == 1) {
            rep.max_alpha_u_on_delta_plus = std::max(rep.max_alpha_u_on_delta_plus,
                                                     f.alpha_u.norm());
            rep.max_angle_eta_u_xi_plus =
                std::max(rep.max_angle_eta_u_xi_plus, line_angle(f.alpha_s, ap));
            continue;
        }
        if (on_delta[i] == 2) {
            rep.max_alpha_s_on_delta_minus = std::max(rep.max_alpha_s_on_delta_minus,
                                                      f.alpha_s.norm());
            continue;
        }
        // near-proportional covectors have no transverse spanning direction
        const double sine = am.cross(ap).norm() / std::max(1e-300, am.norm() * ap.norm());
        if (sine < near_delta_angle) {
            rep.skipped_near_delta++;
            continue;
        }

        // spanning vector of eta_u transverse to X; a_s x X is in ker a_s,
        // orthogonal to X, and the cone margin is even in v
        const Vec3 xv = bp.X(p);
        Vec3 v;
        if (xv.norm() > 1e-12) {
            v = f.alpha_s.cross(xv.normalized());
        } else {
            int least = 0;
            for (int k = 1; k < 3; ++k)
                if (std::abs(f.alpha_s[k]) < std::abs(f.alpha_s[least])) least = k;
            const Vec3 e = Vec3::Unit(least);
            v = e - (f.alpha_s.dot(e) / f.alpha_s.squaredNorm()) * f.alpha_s;
        }

        const double margin = (am.dot(v) * ap.dot(v)) /
                              (am.norm() * ap.norm() * v.squaredNorm());
        rep.cone_checked++;
        if (margin > 0) rep.cone_passed++;
        rep.worst_cone_margin = std::min(rep.worst_cone_margin, margin);
    }
    if (rep.cone_checked == 0) rep.worst_cone_margin = 0.0;
    return rep;
}

namespace {

// Line of a plane (given by conormal) inside the plane orthogonal to X,
// with a coorientation-consistent representative.
Vec3 plane_trace_direction(const Vec3& conormal, const Vec3& x_hat) {
    return conormal.cross(x_hat);
}

double signed_line_angle_against(const Vec3& w_target, const Vec3& w_ref, const Vec3& axis) {
    return fold_line_angle(signed_angle(w_target, w_ref, axis));
}

}  // namespace

ConvergenceReport plane_transport_convergence(const BalancedPair& bp, const PairScalars& sc,
                                              const std::vector<Vec3>& samples, double T_max,
                                              int steps, const BoundedOdeConfig& cfg) {
    ConvergenceReport rep;
    for (const Vec3& x : samples) {
        ConvergenceSeries srs;
        srs.sample = x;
        if (bp.X(x).norm() < 1e-10) {
            // On Delta the transported planes never move.
            srs.fixed_plane = true;
            rep.series.push_back(std::move(srs));
            continue;
        }
        // xi^t at the sample itself: push the contact planes forward from
        // phi_{-t}(x) and measure inside the fixed plane orthogonal to X(x).
        std::vector<double> times(static_cast<std::size_t>(steps) + 1);
        for (int i = 0; i <= steps; ++i) times[i] = -T_max * i / steps;
        FlowOptions cfo;
        cfo.tol = cfg.flow_tol;
        const auto cps = linearized_checkpoints(bp.X, x, times, cfo);

        const Vec3 x_hat = bp.X(x).normalized();
        const double ss0 = solve_sigma_s(bp, sc, x, cfg).value.y0;
        const Vec3 as0 = std::exp(-ss0) * bp.pair.alpha_minus.covector(x) -
                         std::exp(ss0) * bp.pair.alpha_plus.covector(x);
        const Vec3 wu = plane_trace_direction(as0, x_hat);
        if (wu.norm() < 1e-14) {
            rep.series.push_back(std::move(srs));
            continue;
        }

        srs.order_ok = true;
        bool mono_p = true, mono_m = true;
        std::vector<double> fit_t, fit_log;
        for (const auto& cp : cps) {
            const Vec3 q = cp.p;  // phi_{-t}(x)
            // forward transport of the contact conormals at q back to x
            const Mat3 Mt = cp.M.transpose();
            const Vec3 np_t = Mt * bp.pair.alpha_plus.covector(q);
            const Vec3 nm_t = Mt * bp.pair.alpha_minus.covector(q);

            const Vec3 wp = plane_trace_direction(np_t, x_hat);
            const Vec3 wm = plane_trace_direction(nm_t, x_hat);
            if (wp.norm() < 1e-14 || wm.norm() < 1e-14) break;

            const double th_p = signed_line_angle_against(wp, wu, x_hat);
            const double th_m = signed_line_angle_against(wm, wu, x_hat);
            srs.times.push_back(-cp.t);
            srs.theta_plus.push_back(th_p);
            srs.theta_minus.push_back(th_m);
            if (!(th_m <= th_p + 1e-12) || th_p >= M_PI || th_m <= -M_PI) srs.order_ok = false;
            const std::size_t n = srs.times.size();
            if (n >= 2) {
                if (!(std::abs(srs.theta_plus[n - 1]) < std::abs(srs.theta_plus[n - 2])))
                    mono_p = false;
                if (!(std::abs(srs.theta_minus[n - 1]) < std::abs(srs.theta_minus[n - 2])))
                    mono_m = false;
            }
            const double tanp = std::abs(std::tan(th_p));
            if (tanp > 1e-14) {
                fit_t.push_back(-cp.t);
                fit_log.push_back(std::log(tanp));
            }
        }
        srs.monotone_plus = mono_p && srs.times.size() >= 2;
        srs.monotone_minus = mono_m && srs.times.size() >= 2;
        if (fit_t.size() >= 2) {
            double st = 0, sl = 0, stt = 0, stl = 0;
            for (std::size_t i = 0; i < fit_t.size(); ++i) {
                st += fit_t[i];
                sl += fit_log[i];
                stt += fit_t[i] * fit_t[i];
                stl += fit_t[i] * fit_log[i];
            }
            const double n = static_cast<double>(fit_t.size());
            const double slope = (n * stl - st * sl) / (n * stt - st * st);
            srs.fitted_exponent_plus = -slope;
        }
        rep.series.push_back(std::move(srs));
    }
    return rep;
}

StrongUnstableResult strong_unstable_line(const BalancedPair& bp, const PairScalars& sc,
                                          const Vec3& p, double T, unsigned seed,
                                          const BoundedOdeConfig& cfg) {
    StrongUnstableResult out;
    out.base_point = p;
    out.horizon = T;

    if (T == 0.0) {
        const FramePoint f = frame_at_point(bp, sc, p, false, cfg);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        const Vec3 r(unif(rng), unif(rng), unif(rng));
        out.direction = f.alpha_s.cross(r).normalized();
        return out;
    }

    FlowOptions fo;
    fo.tol = cfg.flow_tol;
    LinearizedFlow back = linearized_flow(bp.X, p, -T, fo);
    const Vec3 q = back.base.end_point;
    const FramePoint fq = frame_at_point(bp, sc, q, false, cfg);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vec3 r(unif(rng), unif(rng), unif(rng));
    Vec3 v = fq.alpha_s.cross(r);
    if (v.norm() < 1e-12) v = fq.alpha_s.cross(Vec3::Unit(0));
    v.normalize();

    // push forward in chunks, renormalizing; the history records how much
    // the direction still rotates
    const int chunks = std::max(1, static_cast<int>(std::ceil(T)));
    Vec3 cur = q;
    Vec3 prev_dir = v;
    for (int i = 0; i < chunks; ++i) {
        LinearizedFlow seg = linearized_flow(bp.X, cur, T / chunks, fo);
        v = (seg.matrix * v).normalized();
        cur = seg.base.end_point;
        out.convergence.push_back(line_angle(v, prev_dir));
        prev_dir = v;
    }
    out.direction = v;
    return out;
}

HyperbolicIdentityReport hyperbolic_identities(const BalancedPair& bp, const PairScalars& sc,
                                               const Vec3& p, double h,
                                               const BoundedOdeConfig& cfg) {
    FlowOptions fo;
    fo.tol = cfg.flow_tol;
    const Vec3 pf = flow_trajectory(bp.X, p, +h, fo).end_point;
    const Vec3 pb = flow_trajectory(bp.X, p, -h, fo).end_point;

    auto su_at = [&](const Vec3& q) { return solve_sigma_u(bp, sc, q, cfg).value.y0; };
    auto ss_at = [&](const Vec3& q) { return solve_sigma_s(bp, sc, q, cfg).value.y0; };

    const double su = su_at(p), ss = ss_at(p);
    const double su_f = su_at(pf), su_b = su_at(pb);
    const double ss_f = ss_at(pf), ss_b = ss_at(pb);

    const double x_su = (su_f - su_b) / (2 * h);
    const double x_ss = (ss_f - ss_b) / (2 * h);
    const double x_diff = x_su - x_ss;
    const std::array<double, 3> q{p.x(), p.y(), p.z()};
    const double f0 = sc.f0.f.evaluate(q);
    const double ru = std::cosh(2 * su) + 0.5 * f0;
    const double rs = -std::cosh(2 * ss) + 0.5 * f0;

    HyperbolicIdentityReport rep;
    rep.residual_plus =
        (+x_diff + ru - rs) - (std::exp(2 * su) + std::exp(2 * ss));
    rep.residual_minus =
        (-x_diff + ru - rs) - (std::exp(-2 * su) + std::exp(-2 * ss));
    const double x_logcosh =
        (std::log(std::cosh(su_f - ss_f)) - std::log(std::cosh(su_b - ss_b))) / (2 * h);
    rep.residual_logcosh = x_logcosh - (std::cosh(2 * su) - std::cosh(2 * ss));
    return rep;
}

}  // namespace bct
