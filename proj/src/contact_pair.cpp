#include "bct/contact_pair.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bct/errors.hpp"

namespace bct {

using expr::constant;

const char* to_string(SingularClass c) {
    switch (c) {
        case SingularClass::Source: return "Source";
        case SingularClass::Sink: return "Sink";
        case SingularClass::Saddle: return "Saddle";
        case SingularClass::QuadraticCandidate: return "QuadraticCandidate";
        case SingularClass::Degenerate: return "Degenerate";
    }
    return "?";
}

const char* to_string(ConnectionType t) {
    switch (t) {
        case ConnectionType::A1: return "A1";
        case ConnectionType::A2: return "A2";
        case ConnectionType::A3: return "A3";
        case ConnectionType::A4: return "A4";
        case ConnectionType::Inadmissible: return "Inadmissible";
    }
    return "?";
}

ContactCheck contact_check(const ContactPair& pair, const Grid3& grid, ExecPolicy policy) {
    const ThreeForm vol_p = frobenius_residual(pair.alpha_plus);
    const ThreeForm vol_m = frobenius_residual(pair.alpha_minus);
    std::vector<double> vp(grid.size()), vm(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        vp[i] = vol_p.coefficient(grid.point(i));
        vm[i] = vol_m.coefficient(grid.point(i));
    });
    ContactCheck r{true, vp[0], vm[0], grid.point(0)};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (vp[i] < r.worst_margin_plus) {
            r.worst_margin_plus = vp[i];
            if (vp[i] <= 0) r.worst_point = grid.point(i);
        }
        if (vm[i] > r.worst_margin_minus) {
            r.worst_margin_minus = vm[i];
            if (vm[i] >= 0) r.worst_point = grid.point(i);
        }
    }
    r.ok = r.worst_margin_plus > 0 && r.worst_margin_minus < 0;
    return r;
}

BalancedPair balance(const ContactPair& pair, const Grid3& grid, ExecPolicy policy) {
    const ContactCheck check = contact_check(pair, grid, policy);
    if (!check.ok)
        throw NotContact("contact sign condition fails near (" +
                         std::to_string(check.worst_point.x()) + ", " +
                         std::to_string(check.worst_point.y()) + ", " +
                         std::to_string(check.worst_point.z()) + ")");

    const Expr vplus = frobenius_residual(pair.alpha_plus).c;
    const Expr vminus = frobenius_residual(pair.alpha_minus).c;
    // conformal rescale of alpha_-: multiplies its contact volume by c^2
    const Expr c = expr::sqrt(vplus / (constant(0.0) - vminus));

    BalancedPair bp{pair, ThreeForm{}, VectorField{}, c};
    bp.pair.alpha_minus = scale(c, pair.alpha_minus);
    bp.dvol = frobenius_residual(pair.alpha_plus);

    // i_X dvol = alpha_- ^ alpha_+ in the chart basis reads X = W / D.
    const TwoForm W = wedge(bp.pair.alpha_minus, bp.pair.alpha_plus);
    bp.X = VectorField{pair.chart,
                       {W.c[0] / bp.dvol.c, W.c[1] / bp.dvol.c, W.c[2] / bp.dvol.c}};
    return bp;
}

PairScalars pair_scalars(const BalancedPair& bp) {
    const OneForm& am = bp.pair.alpha_minus;
    const OneForm& ap = bp.pair.alpha_plus;
    const Expr D = bp.dvol.c;
    const Expr gp = wedge(am, exterior_derivative(ap)).c / D;
    const Expr gm = wedge(ap, exterior_derivative(am)).c / D;
    const Expr f0 = exterior_derivative(wedge(am, ap)).c / D;
    const Expr g0 = (wedge(am, exterior_derivative(ap)).c +
                     wedge(ap, exterior_derivative(am)).c) /
                    D;
    const Chart& ch = bp.pair.chart;
    return PairScalars{ScalarField{ch, f0}, ScalarField{ch, g0}, ScalarField{ch, gm},
                       ScalarField{ch, gp}};
}

LieIdentityReport check_lie_identities(const BalancedPair& bp, const PairScalars& sc,
                                       const Grid3& grid, double tol, ExecPolicy policy) {
    const OneForm& am = bp.pair.alpha_minus;
    const OneForm& ap = bp.pair.alpha_plus;
    const OneForm lm = lie_derivative(bp.X, am);
    const OneForm lp = lie_derivative(bp.X, ap);

    // L_X a_- = g_- a_- + a_+ and L_X a_+ = a_- - g_+ a_+
    const OneForm rm = lm - (scale(sc.g_minus.f, am) + ap);
    const OneForm rp = lp - (am - scale(sc.g_plus.f, ap));

    std::vector<double> res(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        res[i] = std::max(rm.covector(p).norm(), rp.covector(p).norm());
    });
    LieIdentityReport rep{0.0, 0.0, grid.point(0), false};
    double worst = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec3 p = grid.point(i);
        rep.sup_minus = std::max(rep.sup_minus, rm.covector(p).norm());
        rep.sup_plus = std::max(rep.sup_plus, rp.covector(p).norm());
        if (res[i] > worst) {
            worst = res[i];
            rep.worst_point = p;
        }
    }
    rep.pass = std::max(rep.sup_minus, rep.sup_plus) < tol;
    return rep;
}

PositivityReport positivity_test(const ContactPair& pair, const Grid3& grid, double tol_angle,
                                 ExecPolicy policy) {
    std::vector<int> sign(grid.size(), 0);
    std::vector<double> uval(grid.size()), sine(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        const Vec3 am = pair.alpha_minus.covector(p);
        const Vec3 ap = pair.alpha_plus.covector(p);
        const double denom = am.norm() * ap.norm();
        if (denom == 0.0) {
            sign[i] = 0;
            sine[i] = 0.0;
            uval[i] = 0.0;
            return;
        }
        const double s = am.cross(ap).norm() / denom;
        sine[i] = s;
        uval[i] = ap.norm() / am.norm();
        if (s < tol_angle) sign[i] = am.dot(ap) < 0 ? +1 : -1;
    });
    PositivityReport rep;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (sign[i] == +1) rep.delta_plus.push_back({i, grid.point(i), +1, uval[i], sine[i]});
        if (sign[i] == -1) rep.delta_minus.push_back({i, grid.point(i), -1, uval[i], sine[i]});
    }
    rep.verdict = rep.delta_minus.empty()
                      ? PairVerdict::Positive
                      : (rep.delta_plus.empty() ? PairVerdict::Negative : PairVerdict::Mixed);
    return rep;
}

namespace {

SingularPoint classify_point(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                             const SingularSetOptions& opts) {
    SingularPoint s;
    s.location = p;
    s.jacobian = bp.X.jacobian(p);
    s.speed = bp.X(p).norm();
    const std::array<double, 3> q{p.x(), p.y(), p.z()};
    s.f0_value = sc.f0.f.evaluate(q);
    s.trace_residual = std::abs(s.jacobian.trace() - s.f0_value);

    const Vec3 am = bp.pair.alpha_minus.covector(p);
    const Vec3 ap = bp.pair.alpha_plus.covector(p);
    s.delta_sign = am.dot(ap) < 0 ? +1 : -1;

    Eigen::JacobiSVD<Mat3> svd(s.jacobian, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    const double scale = sv(0);
    s.rank = 0;
    for (int i = 0; i < 3; ++i)
        if (sv(i) > opts.rank_threshold * scale) s.rank++;

    s.tangency_angle = std::numeric_limits<double>::quiet_NaN();
    s.normal_det = 0.0;

    if (scale == 0.0 || s.rank < 2) {
        s.cls = SingularClass::Degenerate;
        return s;
    }
    if (s.rank == 3) {
        const Eigen::Vector3cd ev = s.jacobian.eigenvalues();
        int pos = 0, neg = 0;
        for (int i = 0; i < 3; ++i) {
            if (ev(i).real() > 0) pos++;
            if (ev(i).real() < 0) neg++;
        }
        s.cls = (pos == 3) ? SingularClass::Source
                           : (neg == 3 ? SingularClass::Sink : SingularClass::Saddle);
        return s;
    }

    // rank 2: kernel direction approximates the tangent of Delta
    const Vec3 k = svd.matrixV().col(2);
    const Vec3 n = (s.delta_sign > 0 ? ap : am).normalized();
    s.tangency_angle = std::asin(std::min(1.0, std::abs(k.normalized().dot(n))));

    // induced map on the normal plane to ker dX
    Eigen::Matrix<double, 3, 2> P;
    P.col(0) = svd.matrixV().col(0);
    P.col(1) = svd.matrixV().col(1);
    const Mat2 N = P.transpose() * s.jacobian * P;
    s.normal_det = N.determinant();

    if (s.tangency_angle < opts.quadratic_angle_tol) {
        s.cls = SingularClass::QuadraticCandidate;
    } else if (s.normal_det > 0) {
        s.cls = s.delta_sign > 0 ? SingularClass::Source : SingularClass::Sink;
    } else if (s.normal_det < 0) {
        s.cls = SingularClass::Saddle;
    } else {
        s.cls = SingularClass::Degenerate;
    }
    return s;
}

}  // namespace

SingularSetResult singular_set(const BalancedPair& bp, const PairScalars& sc, const Grid3& grid,
                               const SingularSetOptions& opts, ExecPolicy policy) {
    // seed selection: |X| local minima well below the grid median
    std::vector<double> speed(grid.size());
    parallel_for(grid.size(), policy,
                 [&](std::size_t i) { speed[i] = bp.X(grid.point(i)).norm(); });
    std::vector<double> sorted = speed;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double cutoff = opts.seed_fraction * median;

    std::vector<std::size_t> seeds;
    std::vector<std::pair<double, std::size_t>> minima;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        bool is_min = true;
        for (int axis = 0; axis < 3 && is_min; ++axis)
            for (int off = -1; off <= 1 && is_min; off += 2) {
                const std::size_t j = grid.neighbor(i, axis, off);
                if (j != i && speed[j] < speed[i]) is_min = false;
            }
        if (!is_min) continue;
        minima.emplace_back(speed[i], i);
        if (speed[i] <= cutoff) seeds.push_back(i);
        if (seeds.size() >= 4 * opts.max_points) break;
    }
    if (seeds.empty() && !minima.empty()) {
        // Coarse grids can keep |X| above the fraction cutoff even next to a
        // zero; fall back to the deepest minima and let Newton reject the
        // impostors.
        std::sort(minima.begin(), minima.end());
        for (std::size_t k = 0; k < minima.size() && k < 32; ++k)
            seeds.push_back(minima[k].second);
        std::sort(seeds.begin(), seeds.end());
    }

    SingularSetResult result;
    result.seeds_tried = static_cast<int>(seeds.size());
    const double extent = grid.chart().extent().maxCoeff();

    std::vector<std::optional<Vec3>> refined(seeds.size());
    std::vector<char> diverged(seeds.size(), 0);
    parallel_for(seeds.size(), policy, [&](std::size_t si) {
        Vec3 p = grid.point(seeds[si]);
        bool ok = false;
        for (int it = 0; it < opts.newton_max_iter; ++it) {
            const Vec3 Xp = bp.X(p);
            if (Xp.norm() < opts.newton_tol) {
                ok = true;
                break;
            }
            const Mat3 J = bp.X.jacobian(p);
            Eigen::JacobiSVD<Mat3> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
            svd.setThreshold(1e-10);
            Vec3 step = svd.solve(Xp);
            const double cap = 0.25 * extent;
            if (step.norm() > cap) step *= cap / step.norm();
            p = grid.chart().wrap(p - step).point;
            if (!grid.chart().contains(p)) break;
        }
        if (ok && bp.X(p).norm() < opts.newton_tol)
            refined[si] = p;
        else
            diverged[si] = 1;
    });

    for (std::size_t si = 0; si < seeds.size(); ++si) {
        if (diverged[si]) {
            result.newton_divergences++;
            continue;
        }
        if (!refined[si]) continue;
        const Vec3 p = *refined[si];
        bool duplicate = false;
        for (const auto& s : result.points)
            if ((s.location - p).norm() < opts.dedup_radius * extent) {
                duplicate = true;
                break;
            }
        if (duplicate) continue;
        result.points.push_back(classify_point(bp, sc, p, opts));
        if (result.points.size() >= opts.max_points) break;
    }
    return result;
}

ConnectionGraph connection_graph(const BalancedPair& bp, const std::vector<SingularPoint>& sing,
                                 const ConnectionOptions& opts) {
    ConnectionGraph graph;

    auto capture_index = [&](const Vec3& p, int exclude) -> int {
        for (std::size_t i = 0; i < sing.size(); ++i) {
            if (static_cast<int>(i) == exclude) continue;
            if ((sing[i].location - p).norm() < opts.capture_radius) return static_cast<int>(i);
        }
        return -1;
    };

    auto classify = [&](int from, int to, const Vec3& leave_direction) -> ConnectionType {
        const SingularClass cf = sing[from].cls;
        const SingularClass ct = sing[to].cls;
        if (cf == SingularClass::Source && ct == SingularClass::Saddle) return ConnectionType::A1;
        if (cf == SingularClass::Source && ct == SingularClass::QuadraticCandidate)
            return ConnectionType::A2;
        if (cf == SingularClass::QuadraticCandidate && ct == SingularClass::Saddle) {
            // (A3) excludes the unstable branches of the quadratic endpoint
            const Mat3& J = sing[from].jacobian;
            Eigen::EigenSolver<Mat3> es(J);
            for (int i = 0; i < 3; ++i) {
                if (es.eigenvalues()(i).imag() != 0.0) continue;
                if (es.eigenvalues()(i).real() <= opts.eigen_threshold) continue;
                const Vec3 e = es.eigenvectors().col(i).real().normalized();
                if (line_angle(e, leave_direction) < 1e-2) return ConnectionType::Inadmissible;
            }
            return ConnectionType::A3;
        }
        if (cf == SingularClass::Saddle && ct == SingularClass::Saddle && from != to)
            return ConnectionType::A4;  // may be demoted by the graph pass below
        return ConnectionType::Inadmissible;
    };

    for (std::size_t i = 0; i < sing.size(); ++i) {
        const SingularPoint& s = sing[i];
        if (s.cls == SingularClass::Degenerate) {
            graph.skipped_degenerate++;
            continue;
        }
        if (s.cls != SingularClass::Saddle && s.cls != SingularClass::QuadraticCandidate)
            continue;

        Eigen::EigenSolver<Mat3> es(s.jacobian);
        for (int k = 0; k < 3; ++k) {
            if (es.eigenvalues()(k).imag() != 0.0) continue;
            const double lambda = es.eigenvalues()(k).real();
            if (std::abs(lambda) <= opts.eigen_threshold) continue;
            const Vec3 e = es.eigenvectors().col(k).real().normalized();

            for (int dir = -1; dir <= 1; dir += 2) {
                const Vec3 start = s.location + dir * opts.launch_offset * e;
                FlowOptions fo;
                fo.tol = 1e-10;
                const int self = static_cast<int>(i);
                fo.stop_predicate = [&, self](double, const Vec3& p) {
                    return capture_index(p, self) >= 0;
                };
                // unstable directions run forward, stable directions backward
                const double T = lambda > 0 ? opts.horizon : -opts.horizon;
                Trajectory orbit = flow_trajectory(bp.X, start, T, fo);
                if (orbit.reason != Termination::ConvergedToPoint) {
                    if (orbit.reason == Termination::HorizonReached) graph.undecided_orbits++;
                    continue;
                }
                const int other = capture_index(orbit.end_point, self);
                if (other < 0) continue;  // stagnated elsewhere
                int from, to;
                Vec3 leave_dir;
                if (lambda > 0) {
                    from = self;
                    to = other;
                    leave_dir = dir * e;
                } else {
                    from = other;
                    to = self;
                    // approach direction into `from` along the reversed orbit
                    leave_dir = (orbit.end_point - sing[from].location).normalized();
                }
                graph.records.push_back(
                    {from, to, std::move(orbit), classify(from, to, leave_dir)});
            }
        }
    }

    // (A4) requires its saddles to touch no other saddle connection
    std::vector<int> saddle_saddle;
    for (std::size_t r = 0; r < graph.records.size(); ++r) {
        const auto& rec = graph.records[r];
        if (sing[rec.from].cls == SingularClass::Saddle &&
            sing[rec.to].cls == SingularClass::Saddle)
            saddle_saddle.push_back(static_cast<int>(r));
    }
    for (int r : saddle_saddle) {
        auto& rec = graph.records[r];
        for (int r2 : saddle_saddle) {
            if (r2 == r) continue;
            const auto& o = graph.records[r2];
            if (o.from == rec.from || o.from == rec.to || o.to == rec.from || o.to == rec.to)
                rec.type = ConnectionType::Inadmissible;
        }
    }

    // broken triple saddle chains: two distinct saddle-saddle connections
    // linked through endpoints, possibly via unstable manifolds of
    // source/quadratic points
    if (saddle_saddle.size() >= 2) {
        auto endpoints_linked = [&](const ConnectionRecord& a, const ConnectionRecord& b) {
            std::set<int> ea{a.from, a.to}, eb{b.from, b.to};
            for (int x : ea)
                if (eb.count(x)) return true;
            // one intermediate connection emanating from a source/quadratic
            for (const auto& mid : graph.records) {
                const SingularClass cf = sing[mid.from].cls;
                if (cf != SingularClass::Source && cf != SingularClass::QuadraticCandidate)
                    continue;
                const bool touches_a = ea.count(mid.from) || ea.count(mid.to);
                const bool touches_b = eb.count(mid.from) || eb.count(mid.to);
                if (touches_a && touches_b) return true;
            }
            return false;
        };
        for (std::size_t a = 0; a < saddle_saddle.size() && !graph.broken_triple_saddle; ++a)
            for (std::size_t b = a + 1; b < saddle_saddle.size(); ++b)
                if (endpoints_linked(graph.records[saddle_saddle[a]],
                                     graph.records[saddle_saddle[b]])) {
                    graph.broken_triple_saddle = true;
                    break;
                }
    }
    return graph;
}

double f0_divergence_residual(const BalancedPair& bp, const PairScalars& sc, const Vec3& p,
                              double T) {
    LinearizedFlow lf = linearized_flow(bp.X, p, T);
    if (lf.base.reason != Termination::HorizonReached &&
        lf.base.reason != Termination::ConvergedToPoint)
        return std::numeric_limits<double>::quiet_NaN();
    const double t_end = lf.base.end_time;
    if (t_end == 0.0) return 0.0;

    // Simpson quadrature of f0 along the orbit
    const int n = 64;
    double acc = 0.0;
    const double h = t_end / n;
    auto f0_at = [&](double t) {
        const Vec3 q = lf.base.at(t);
        const std::array<double, 3> a{q.x(), q.y(), q.z()};
        return sc.f0.f.evaluate(a);
    };
    for (int i = 0; i < n; i += 2)
        acc += h / 3.0 * (f0_at(i * h) + 4.0 * f0_at((i + 1) * h) + f0_at((i + 2) * h));

    const std::array<double, 3> q0{p.x(), p.y(), p.z()};
    const Vec3 pe = lf.base.end_point;
    const std::array<double, 3> q1{pe.x(), pe.y(), pe.z()};
    const double D0 = bp.dvol.c.evaluate(q0);
    const double D1 = bp.dvol.c.evaluate(q1);
    const double lhs = std::log(lf.matrix.determinant() * D1 / D0);
    return std::abs(lhs - acc) / std::max(1.0, std::abs(acc));
}

}  // namespace bct
