#include "bct/bounded_ode.hpp"

#include <algorithm>
#include <cmath>

#include "bct/errors.hpp"
#include "bct/compiled.hpp"
#include "bct/rk45.hpp"

namespace bct {

CoefficientSampler CoefficientSampler::constant(double g) {
    CoefficientSampler s;
    s.fn_ = [g](double) { return g; };
    s.g0_ = g;
    s.osc_ = 0.0;
    return s;
}

CoefficientSampler CoefficientSampler::from_function(std::function<double(double)> g,
                                                     double osc_bound) {
    CoefficientSampler s;
    s.g0_ = g(0.0);
    s.fn_ = std::move(g);
    s.osc_ = osc_bound;
    return s;
}

CoefficientSampler CoefficientSampler::along_flow(const VectorField& X, const ScalarField& g0,
                                                  const ScalarField& dg0, const Vec3& p,
                                                  double horizon, bool backward, bool negate,
                                                  double flow_tol) {
    FlowOptions fo;
    fo.tol = flow_tol;
    const double T = backward ? -horizon : horizon;
    const Trajectory traj = flow_trajectory(X, p, T, fo);
    const double sgn_g = negate ? -1.0 : 1.0;
    // d/dt g(phi_{+-t}) = +-(X.g0); sampler time runs forward either way
    const double sgn_t = backward ? -1.0 : 1.0;

    const expr::Compiled tape = expr::Compiled::build({g0.f, dg0.f});
    auto knot_of = [&](const TrajectorySample& k, double t_sampler) {
        const std::array<double, 3> q{k.p.x(), k.p.y(), k.p.z()};
        double gv[2];
        tape.eval(q, gv);
        return Knot{t_sampler, sgn_g * gv[0], sgn_g * sgn_t * gv[1]};
    };
    CoefficientSampler s;
    s.knots_.reserve(traj.samples.size());
    // trajectory samples are time-ascending; sampler time is |t|
    if (backward) {
        for (auto it = traj.samples.rbegin(); it != traj.samples.rend(); ++it)
            s.knots_.push_back(knot_of(*it, -it->t));
    } else {
        for (const auto& k : traj.samples) s.knots_.push_back(knot_of(k, k.t));
    }
    s.g0_ = s.knots_.front().g;
    for (const auto& k : s.knots_) s.osc_ = std::max(s.osc_, std::abs(k.g - s.g0_));
    if (traj.reason != Termination::HorizonReached) {
        s.frozen_ = true;
        s.freeze_time_ = s.knots_.back().t;
    }
    return s;
}

double CoefficientSampler::operator()(double t) const {
    if (fn_) return fn_(t);
    if (knots_.empty()) return g0_;
    if (t <= knots_.front().t) return knots_.front().g;
    if (t >= knots_.back().t) return knots_.back().g;  // frozen tail
    auto it = std::lower_bound(knots_.begin(), knots_.end(), t,
                               [](const Knot& k, double tt) { return k.t < tt; });
    const Knot& k1 = *it;
    const Knot& k0 = *(it - 1);
    return hermite(k0.t, k0.g, k0.dg, k1.t, k1.g, k1.dg, t);
}

BoundedSolutionProblem BoundedSolutionProblem::build(CoefficientSampler sampler,
                                                     const BoundedOdeConfig& cfg) {
    BoundedSolutionProblem p;
    p.g = std::move(sampler);
    p.epsilon = cfg.epsilon;
    p.C = 0.5 * p.g.oscillation() * cfg.c_headroom;
    p.A = (1.0 + p.C + std::abs(0.5 * p.g.at_zero())) / p.epsilon;
    return p;
}

void BoundedSolutionProblem::inflate_c(double factor) {
    C *= factor;
    if (C == 0.0) C = 0.5;
    A = (1.0 + C + std::abs(0.5 * g.at_zero())) / epsilon;
}

double ShotResult::y_at(double t) const {
    if (path.empty()) return 0.0;
    auto it = std::lower_bound(path.begin(), path.end(), t,
                               [](const std::pair<double, double>& k, double tt) {
                                   return k.first < tt;
                               });
    if (it == path.begin()) return path.front().second;
    if (it == path.end()) return path.back().second;
    const auto& [t1, y1] = *it;
    const auto& [t0, y0] = *(it - 1);
    if (t1 == t0) return y0;
    return y0 + (y1 - y0) * (t - t0) / (t1 - t0);
}

ShotResult classify_shot(const BoundedSolutionProblem& prob, double y0, double horizon,
                         double integrator_tol) {
    using RK = Rk45<1>;
    const double cap = prob.A + 0.5;  // escape threshold incl. margin
    auto rhs = [&](double t, const RK::State& y, RK::State& dy) { dy[0] = prob.rhs(y[0], t); };

    ShotResult r;
    RK::State y{y0}, k1{}, y_new{}, k_last{};
    rhs(0.0, y, k1);
    double t = 0.0;
    double h = 1e-3;
    r.path.emplace_back(0.0, y0);

    const int max_steps = 200000;
    for (int i = 0; i < max_steps && t < horizon; ++i) {
        if (y[0] > cap) {
            r.kind = ShotKind::EscapePlus;
            r.escape_time = t;
            return r;
        }
        if (y[0] < -cap) {
            r.kind = ShotKind::EscapeMinus;
            r.escape_time = t;
            return r;
        }
        h = std::min(h, horizon - t);
        const double err = RK::step(rhs, t, y, h, k1, y_new, k_last, integrator_tol,
                                    integrator_tol);
        if (err > 1.0) {
            h = rk45_next_step(h, err);
            continue;
        }
        t += h;
        y = y_new;
        k1 = k_last;
        r.path.emplace_back(t, y[0]);
        h = rk45_next_step(h, err);
    }
    if (y[0] > cap) {
        r.kind = ShotKind::EscapePlus;
        r.escape_time = t;
    } else if (y[0] < -cap) {
        r.kind = ShotKind::EscapeMinus;
        r.escape_time = t;
    } else {
        r.kind = ShotKind::Undecided;
        r.escape_time = t;
    }
    return r;
}

BoundedValue bounded_initial_value(const BoundedSolutionProblem& prob,
                                   const BoundedOdeConfig& cfg) {
    BoundedValue out;
    const double A = prob.A;
    const double T =
        cfg.horizon_scale * std::log((A + 1.0) / std::min(cfg.tol, 0.1)) / prob.epsilon;
    out.horizon = T;
    // an undecided shot over horizon T pins y0 to this accuracy ((P1))
    const double undecided_width = (2.0 * A + cfg.escape_margin) * std::exp(-prob.epsilon * T);

    ShotResult lo_shot = classify_shot(prob, -A, T, cfg.integrator_tol);
    ShotResult hi_shot = classify_shot(prob, +A, T, cfg.integrator_tol);
    out.shots = 2;
    if (lo_shot.kind != ShotKind::EscapeMinus || hi_shot.kind != ShotKind::EscapePlus)
        throw BracketFailure("bracket endpoints +-A do not escape with the expected signs "
                             "(C underestimated?)");

    double lo = -A, hi = +A;
    while (hi - lo > cfg.tol) {
        const double mid = 0.5 * (lo + hi);
        ShotResult s = classify_shot(prob, mid, T, cfg.integrator_tol);
        out.shots++;
        if (s.kind == ShotKind::EscapePlus) {
            hi = mid;
        } else if (s.kind == ShotKind::EscapeMinus) {
            lo = mid;
        } else {
            out.y0 = mid;
            out.width = undecided_width;
            out.undecided_exit = true;
            out.bounded_path = std::move(s);
            return out;
        }
    }
    out.y0 = 0.5 * (lo + hi);
    out.width = 0.5 * (hi - lo) + undecided_width;
    out.bounded_path = classify_shot(prob, out.y0, T, cfg.integrator_tol);
    out.shots++;
    return out;
}

SigmaPointSolve solve_sigma_point(const SigmaSolverContext& ctx, const Vec3& p,
                                  bool stable_side, const BoundedOdeConfig& cfg) {
    // Horizon estimate chases its own tail through A; two passes settle it.
    double horizon_guess = cfg.horizon_scale * std::log(2.0 / std::min(cfg.tol, 0.1)) /
                           cfg.epsilon;
    SigmaPointSolve out;
    for (int pass = 0; pass < 2; ++pass) {
        CoefficientSampler sampler = CoefficientSampler::along_flow(
            ctx.bp.X, ctx.sc.g0, ctx.dg0, p, horizon_guess, /*backward=*/stable_side,
            /*negate=*/stable_side, cfg.flow_tol);
        out.frozen = sampler.frozen();
        BoundedSolutionProblem prob = BoundedSolutionProblem::build(std::move(sampler), cfg);
        const double T =
            cfg.horizon_scale * std::log((prob.A + 1.0) / std::min(cfg.tol, 0.1)) / prob.epsilon;
        if (T > horizon_guess * 1.01 && pass == 0) {
            horizon_guess = T;
            continue;
        }
        for (int attempt = 0;; ++attempt) {
            try {
                out.value = bounded_initial_value(prob, cfg);
                return out;
            } catch (const BracketFailure&) {
                if (attempt >= cfg.max_c_retries) throw;
                prob.inflate_c(2.0);
            }
        }
    }
    return out;  // unreachable
}

SigmaPointSolve solve_sigma_u(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                              const BoundedOdeConfig& cfg) {
    return solve_sigma_point(SigmaSolverContext(bp, sc), p, /*stable_side=*/false, cfg);
}

SigmaPointSolve solve_sigma_s(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                              const BoundedOdeConfig& cfg) {
    return solve_sigma_point(SigmaSolverContext(bp, sc), p, /*stable_side=*/true, cfg);
}

double SigmaFields::sup_abs_sigma_u() const {
    double m = 0;
    for (std::size_t i = 0; i < sigma_u.size(); ++i)
        if (!missing_u[i]) m = std::max(m, std::abs(sigma_u[i]));
    return m;
}

double SigmaFields::sup_abs_sigma_s() const {
    double m = 0;
    for (std::size_t i = 0; i < sigma_s.size(); ++i)
        if (!missing_s[i]) m = std::max(m, std::abs(sigma_s[i]));
    return m;
}

double SigmaFields::sup_residual() const {
    double m = 0;
    for (double r : residual_u)
        if (std::isfinite(r)) m = std::max(m, std::abs(r));
    for (double r : residual_s)
        if (std::isfinite(r)) m = std::max(m, std::abs(r));
    return m;
}

SigmaFields sigma_fields(const BalancedPair& bp, const PairScalars& sc, const Grid3& grid,
                         const BoundedOdeConfig& cfg, ExecPolicy policy) {
    SigmaFields f;
    f.grid = grid;
    const std::size_t n = grid.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    f.sigma_u.assign(n, nan);
    f.sigma_s.assign(n, nan);
    f.width_u.assign(n, nan);
    f.width_s.assign(n, nan);
    f.residual_u.assign(n, nan);
    f.residual_s.assign(n, nan);
    f.frozen_u.assign(n, 0);
    f.frozen_s.assign(n, 0);
    f.missing_u.assign(n, 0);
    f.missing_s.assign(n, 0);

    const SigmaSolverContext ctx(bp, sc);
    parallel_for(n, policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        for (int side = 0; side < 2; ++side) {
            const bool stable = side == 1;
            auto& sigma = stable ? f.sigma_s : f.sigma_u;
            auto& width = stable ? f.width_s : f.width_u;
            auto& residual = stable ? f.residual_s : f.residual_u;
            auto& frozen = stable ? f.frozen_s : f.frozen_u;
            auto& missing = stable ? f.missing_s : f.missing_u;
            try {
                SigmaPointSolve sol = solve_sigma_point(ctx, p, stable, cfg);
                sigma[i] = sol.value.y0;
                width[i] = sol.value.width;
                frozen[i] = sol.frozen ? 1 : 0;

                if (cfg.compute_residuals && grid.interior(i)) {
                    const double h = cfg.residual_step;
                    // One side of the X-difference comes free from the
                    // certified bounded path; the other is a fresh solve.
                    const double near_val = sol.value.bounded_path.y_at(h);
                    FlowOptions fo;
                    fo.tol = cfg.flow_tol;
                    const double dir = stable ? -h : +h;  // path runs along -X for sigma_s
                    Trajectory to_other = flow_trajectory(bp.X, p, -dir, fo);
                    if (to_other.reason == Termination::HorizonReached) {
                        SigmaPointSolve other =
                            solve_sigma_point(ctx, to_other.end_point, stable, cfg);
                        const std::array<double, 3> q{p.x(), p.y(), p.z()};
                        const double g0v = sc.g0.f.evaluate(q);
                        const double y = sol.value.y0;
                        // bounded path time h sits at phi_{+h} for sigma_u
                        // and phi_{-h} for sigma_s
                        const double fwd = stable ? other.value.y0 : near_val;
                        const double bwd = stable ? near_val : other.value.y0;
                        const double xdot = (fwd - bwd) / (2.0 * h);
                        const double rhs = stable ? (-std::sinh(2.0 * y) + 0.5 * g0v)
                                                  : (std::sinh(2.0 * y) + 0.5 * g0v);
                        residual[i] = xdot - rhs;
                    }
                }
            } catch (const BracketFailure&) {
                missing[i] = 1;
            }
        }
    });
    return f;
}

double sigma_flow_equivariance_residual(const BalancedPair& bp, const PairScalars& sc,
                                        const Vec3& p, double s, const BoundedOdeConfig& cfg) {
    SigmaPointSolve base = solve_sigma_u(bp, sc, p, cfg);
    // compare at the certified path knot nearest to s, keeping path
    // interpolation out of the comparison
    double t_knot = s, y_knot = base.value.bounded_path.y_at(s);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [t, y] : base.value.bounded_path.path) {
        if (std::abs(t - s) < best) {
            best = std::abs(t - s);
            t_knot = t;
            y_knot = y;
        }
    }
    FlowOptions fo;
    fo.tol = cfg.flow_tol;
    Trajectory traj = flow_trajectory(bp.X, p, t_knot, fo);
    SigmaPointSolve moved = solve_sigma_u(bp, sc, traj.end_point, cfg);
    return std::abs(moved.value.y0 - y_knot);
}

std::vector<ContinuityProbeRow> continuity_probe(const ContactPair& pair, const Grid3& grid,
                                                 const std::vector<double>& amplitudes,
                                                 const ScalarField& bump,
                                                 const std::vector<Vec3>& sample_points,
                                                 const BoundedOdeConfig& cfg) {
    if (!bump.f.valid())
        throw InvalidSpec("continuity probe requires a smooth (symbolic) bump field");

    auto sigma_on_samples = [&](const ContactPair& pr) {
        BalancedPair bp = balance(pr, grid);
        PairScalars sc = pair_scalars(bp);
        std::vector<double> vals(sample_points.size());
        parallel_for(sample_points.size(), [&](std::size_t i) {
            vals[i] = solve_sigma_u(bp, sc, sample_points[i], cfg).value.y0;
        });
        return vals;
    };

    const std::vector<double> base = sigma_on_samples(pair);
    std::vector<ContinuityProbeRow> rows;
    for (double a : amplitudes) {
        ContactPair p2 = pair;
        p2.alpha_plus =
            p2.alpha_plus + scale(expr::constant(a) * bump.f, pair.alpha_minus);
        const std::vector<double> vals = sigma_on_samples(p2);
        double dev = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i)
            dev = std::max(dev, std::abs(vals[i] - base[i]));
        rows.push_back({a, dev});
    }
    return rows;
}

}  // namespace bct
