#include "bct/flow.hpp"

#include <algorithm>
#include <cmath>

#include "bct/compiled.hpp"
#include "bct/rk45.hpp"

namespace bct {

const char* to_string(Termination t) {
    switch (t) {
        case Termination::HorizonReached: return "HorizonReached";
        case Termination::EscapedDomain: return "EscapedDomain";
        case Termination::BlowUp: return "BlowUp";
        case Termination::ConvergedToPoint: return "ConvergedToPoint";
    }
    return "?";
}

Vec3 Trajectory::at(double t) const {
    if (samples.empty()) return end_point;
    if (t <= samples.front().t) return samples.front().p;
    if (t >= samples.back().t) return samples.back().p;
    auto it = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const TrajectorySample& s, double tt) { return s.t < tt; });
    const auto& s1 = *it;
    const auto& s0 = *(it - 1);
    Vec3 r;
    for (int i = 0; i < 3; ++i)
        r[i] = hermite(s0.t, s0.p[i], s0.velocity[i], s1.t, s1.p[i], s1.velocity[i], t);
    return r;
}

namespace {

// Shared driver for the base flow and the variational flow. Integrates over
// s in [0, |T|] with the field sign folded in; reported times carry the sign.
// The matrix rides along as 9 extra state entries and picks up the gluing
// differential on every wrap.
template <typename OnKnot>
Termination integrate_flow(const VectorField& v, const Vec3& p0, double T,
                           const FlowOptions& opts, bool with_matrix, OnKnot&& on_knot,
                           Vec3* end_p, Mat3* end_M, double* end_t) {
    const double sign = (T < 0) ? -1.0 : 1.0;
    const double horizon = std::abs(T);
    const Chart& chart = v.chart;

    using RK = Rk45<12>;
    RK::State y{};
    auto pack = [&](const Vec3& p, const Mat3& M) {
        for (int i = 0; i < 3; ++i) y[i] = p[i];
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < 3; ++r) y[3 + 3 * c + r] = M(r, c);
    };
    auto unpack_p = [](const RK::State& s) { return Vec3(s[0], s[1], s[2]); };
    auto unpack_M = [](const RK::State& s) {
        Mat3 M;
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < 3; ++r) M(r, c) = s[3 + 3 * c + r];
        return M;
    };

    std::vector<Expr> program(v.c.begin(), v.c.end());
    if (with_matrix)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) program.push_back(v.c[i].differentiate(j));
    const expr::Compiled tape = expr::Compiled::build(program);

    auto rhs = [&](double, const RK::State& s, RK::State& ds) {
        const std::array<double, 3> q{s[0], s[1], s[2]};
        double vals[12];
        tape.eval(q, vals);
        ds[0] = sign * vals[0];
        ds[1] = sign * vals[1];
        ds[2] = sign * vals[2];
        if (with_matrix) {
            Mat3 J;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) J(i, j) = sign * vals[3 + 3 * i + j];
            const Mat3 dM = J * unpack_M(s);
            for (int c = 0; c < 3; ++c)
                for (int r = 0; r < 3; ++r) ds[3 + 3 * c + r] = dM(r, c);
        } else {
            for (int i = 3; i < 12; ++i) ds[i] = 0.0;
        }
    };

    Mat3 M = Mat3::Identity();
    Vec3 p = chart.wrap(p0).point;
    pack(p, M);
    double s = 0.0;
    double h = std::min(horizon > 0 ? 0.01 * horizon : 1e-3, 0.1);
    if (h <= 0) h = 1e-3;
    double stagnant_since = -1.0;
    Termination reason = Termination::HorizonReached;

    RK::State k1{};
    rhs(0.0, y, k1);
    on_knot(0.0, p, sign * v(p), 0.0, M);

    const int max_steps = 2000000;
    for (int step_count = 0; step_count < max_steps && s < horizon; ++step_count) {
        const double speed = v(p).norm();
        if (speed >= opts.blowup_speed) {
            reason = Termination::BlowUp;
            break;
        }
        if (opts.stop_predicate && opts.stop_predicate(sign * s, p)) {
            reason = Termination::ConvergedToPoint;
            break;
        }
        if (speed < opts.stagnation_speed) {
            if (stagnant_since < 0) stagnant_since = s;
            if (s - stagnant_since >= opts.stagnation_window) {
                reason = Termination::ConvergedToPoint;
                break;
            }
            // keep steps below the window so the check can fire
            h = std::min(h, 0.25 * opts.stagnation_window);
        } else {
            stagnant_since = -1.0;
        }

        h = std::min(h, horizon - s);
        RK::State y_new, k_last;
        const double err = RK::step(rhs, s, y, h, k1, y_new, k_last, opts.tol, opts.tol);
        if (err > 1.0) {
            h = rk45_next_step(h, err);
            continue;
        }

        if (chart.is_box() && !chart.contains(unpack_p(y_new))) {
            // shrink the accepted step until it lands on the boundary
            double lo = 0.0, hi = h;
            RK::State y_mid, k_mid;
            for (int it = 0; it < 48 && (hi - lo) > 1e-10 * h; ++it) {
                const double mid = 0.5 * (lo + hi);
                RK::step(rhs, s, y, mid, k1, y_mid, k_mid, opts.tol, opts.tol);
                if (chart.contains(unpack_p(y_mid))) lo = mid; else hi = mid;
            }
            if (lo > 0.0) {
                RK::step(rhs, s, y, lo, k1, y_mid, k_mid, opts.tol, opts.tol);
                s += lo;
                y = y_mid;
                p = unpack_p(y);
                if (with_matrix) M = unpack_M(y);
                on_knot(sign * s, p, sign * v(p), err, M);
            }
            reason = Termination::EscapedDomain;
            break;
        }

        const double h_used = h;
        s += h_used;
        y = y_new;
        k1 = k_last;
        p = unpack_p(y);
        if (with_matrix) M = unpack_M(y);
        on_knot(sign * s, p, sign * v(p), err, M);

        const WrapResult w = chart.wrap(p);
        if (w.wrapped) {
            p = w.point;
            if (with_matrix) M = w.differential * M;
            pack(p, M);
            rhs(s, y, k1);
        }

        h = rk45_next_step(h_used, err);
    }

    if (end_p) *end_p = p;
    if (end_M) *end_M = M;
    if (end_t) *end_t = sign * s;
    return reason;
}

}  // namespace

Trajectory flow_trajectory(const VectorField& v, const Vec3& p0, double T,
                           const FlowOptions& opts) {
    Trajectory tr;
    Vec3 pe;
    double te;
    tr.reason = integrate_flow(
        v, p0, T, opts, false,
        [&](double t, const Vec3& p, const Vec3& vel, double err, const Mat3&) {
            tr.samples.push_back({t, p, vel, err});
        },
        &pe, nullptr, &te);
    tr.end_point = pe;
    tr.end_time = te;
    if (T < 0) std::reverse(tr.samples.begin(), tr.samples.end());
    return tr;
}

LinearizedFlow linearized_flow(const VectorField& v, const Vec3& p0, double T,
                               const FlowOptions& opts) {
    LinearizedFlow lf;
    Vec3 pe;
    Mat3 Me;
    double te;
    lf.base.reason = integrate_flow(
        v, p0, T, opts, true,
        [&](double t, const Vec3& p, const Vec3& vel, double err, const Mat3&) {
            lf.base.samples.push_back({t, p, vel, err});
        },
        &pe, &Me, &te);
    lf.base.end_point = pe;
    lf.base.end_time = te;
    lf.matrix = Me;
    if (T < 0) std::reverse(lf.base.samples.begin(), lf.base.samples.end());
    return lf;
}

std::vector<FlowCheckpoint> linearized_checkpoints(const VectorField& v, const Vec3& p0,
                                                   const std::vector<double>& times,
                                                   const FlowOptions& opts) {
    std::vector<FlowCheckpoint> out;
    out.reserve(times.size());
    Vec3 p = v.chart.wrap(p0).point;
    Mat3 M = Mat3::Identity();
    double t_prev = 0.0;
    for (double t : times) {
        if (t == t_prev) {
            out.push_back({t, p, M});
            continue;
        }
        LinearizedFlow seg = linearized_flow(v, p, t - t_prev, opts);
        if (seg.base.reason != Termination::HorizonReached) break;
        p = seg.base.end_point;
        M = seg.matrix * M;
        t_prev = t;
        out.push_back({t, p, M});
    }
    return out;
}

}  // namespace bct
