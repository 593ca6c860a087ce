#include "bct/cylinder.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "bct/rk45.hpp"

namespace bct {

CylinderField CylinderField::from_expr(const std::string& source, double sup, double lip) {
    expr::Expr e = expr::parse(source, {"x", "t"});
    CylinderField f;
    f.f = [e](double x, double t) {
        const std::array<double, 2> q{x, t};
        return e.evaluate(q);
    };
    f.sup_bound = sup;
    f.lipschitz_x = lip;
    return f;
}

double advance_time_one(const CylinderField& F, double x0, double tilt, double tol,
                        std::vector<std::pair<double, double>>* knots) {
    using RK = Rk45<1>;
    auto rhs = [&](double t, const RK::State& y, RK::State& dy) { dy[0] = F(y[0], t) + tilt; };
    RK::State y{x0}, k1{}, y_new{}, k_last{};
    rhs(0.0, y, k1);
    double t = 0.0, h = 1e-2;
    const double h_min = 1e-7;  // non-Lipschitz fields stall the controller
    if (knots) knots->emplace_back(0.0, x0);
    while (t < 1.0) {
        h = std::min(h, 1.0 - t);
        const double err = RK::step(rhs, t, y, h, k1, y_new, k_last, tol, tol);
        if (err > 1.0 && h > h_min) {
            h = rk45_next_step(h, err);
            continue;
        }
        t += h;
        y = y_new;
        k1 = k_last;
        if (knots) knots->emplace_back(t, y[0]);
        h = std::max(rk45_next_step(h, err), h_min);
    }
    return y[0];
}

ReturnMap return_map(const CylinderField& F, const std::vector<double>& x_grid, double tol) {
    ReturnMap rm;
    rm.x = x_grid;
    rm.value.resize(x_grid.size());
    rm.displacement.resize(x_grid.size());
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        rm.value[i] = advance_time_one(F, x_grid[i], 0.0, tol);
        rm.displacement[i] = rm.value[i] - x_grid[i];
    }
    return rm;
}

bool ReturnMap::strictly_increasing() const {
    for (std::size_t i = 1; i < value.size(); ++i)
        if (!(value[i] > value[i - 1])) return false;
    return true;
}

std::vector<TangentLoop> closed_orbits(const CylinderField& F, double x_lo, double x_hi,
                                       int scan_points, double tol) {
    std::vector<double> xs(scan_points);
    for (int i = 0; i < scan_points; ++i)
        xs[i] = x_lo + (x_hi - x_lo) * i / (scan_points - 1);
    const ReturnMap rm = return_map(F, xs, tol * 1e-2);

    auto make_loop = [&](double root) {
        TangentLoop loop;
        loop.x0 = root;
        const double back = advance_time_one(F, root, 0.0, tol * 1e-2, &loop.knots);
        loop.residual = std::abs(back - root);
        return loop;
    };

    std::vector<TangentLoop> loops;
    bool all_roots = true;
    for (double d : rm.displacement)
        if (std::abs(d) > tol) all_roots = false;
    if (all_roots) {
        // the whole scan is (numerically) a band of closed orbits
        for (double x : xs) loops.push_back(make_loop(x));
        return loops;
    }

    for (int i = 0; i + 1 < scan_points; ++i) {
        const double d0 = rm.displacement[i], d1 = rm.displacement[i + 1];
        if (std::abs(d0) <= tol) {
            if (loops.empty() || std::abs(loops.back().x0 - xs[i]) > tol) {
                loops.push_back(make_loop(xs[i]));
            }
            continue;
        }
        if (d0 * d1 < 0) {
            double lo = xs[i], hi = xs[i + 1];
            double dlo = d0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double dm = advance_time_one(F, mid, 0.0, tol * 1e-2) - mid;
                if (std::abs(dm) <= tol * 0.5 || hi - lo < tol * 1e-3) {
                    lo = hi = mid;
                    break;
                }
                if (dlo * dm < 0) {
                    hi = mid;
                } else {
                    lo = mid;
                    dlo = dm;
                }
            }
            loops.push_back(make_loop(0.5 * (lo + hi)));
        }
    }
    if (scan_points > 0 && std::abs(rm.displacement.back()) <= tol) {
        if (loops.empty() || std::abs(loops.back().x0 - xs.back()) > tol)
            loops.push_back(make_loop(xs.back()));
    }
    return loops;
}

KneserInterval kneser_interval(const CylinderField& F, double x0, int n_max, double tol,
                               double ode_tol) {
    KneserInterval k;
    double prev_minus = 0.0, prev_plus = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        const double tilt = std::pow(2.0, -n);
        const double lo = advance_time_one(F, x0, -tilt, ode_tol);
        const double hi = advance_time_one(F, x0, +tilt, ode_tol);
        if (n > 1) {
            k.last_gap_minus = std::abs(lo - prev_minus);
            k.last_gap_plus = std::abs(hi - prev_plus);
        }
        prev_minus = lo;
        prev_plus = hi;
    }
    k.m_minus = prev_minus;
    k.m_plus = prev_plus;
    if (std::max(k.last_gap_minus, k.last_gap_plus) > tol)
        throw CheckFailure("kneser interval endpoints still moving at n_max");
    return k;
}

namespace {

double quintic_smoothstep(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double quintic_smoothstep_deriv(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return 30.0 * s * s * (1.0 - s) * (1.0 - s);
}

}  // namespace

std::optional<TransversalLoop> closed_transversal(const CylinderField& F, double x_lo,
                                                  double x_hi, const TransversalOptions& opts) {
    std::vector<double> xs(opts.scan_points);
    for (int i = 0; i < opts.scan_points; ++i)
        xs[i] = x_lo + (x_hi - x_lo) * i / (opts.scan_points - 1);
    const ReturnMap rm = return_map(F, xs, opts.ode_tol);

    // widest band of one-signed displacement
    int best_begin = -1, best_len = 0;
    int cur_begin = -1;
    int cur_sign = 0;
    const double dead = 1e-12;
    for (int i = 0; i <= opts.scan_points; ++i) {
        const int s = (i < opts.scan_points)
                          ? (rm.displacement[i] > dead ? +1
                                                       : (rm.displacement[i] < -dead ? -1 : 0))
                          : 0;
        if (s != 0 && s == cur_sign) continue;
        if (cur_sign != 0 && i - cur_begin > best_len) {
            best_begin = cur_begin;
            best_len = i - cur_begin;
        }
        cur_begin = i;
        cur_sign = s;
    }
    if (best_begin < 0 || best_len < 2) return std::nullopt;
    const double band_lo = xs[best_begin];
    const double band_hi = xs[best_begin + best_len - 1];
    const int sign_d = rm.displacement[best_begin] > 0 ? +1 : -1;

    auto verify = [&](const TransversalLoop& candidate,
                      const std::function<double(double)>& h,
                      const std::function<double(double)>& hprime) {
        TransversalLoop out = candidate;
        double min_plus = std::numeric_limits<double>::infinity();
        double max_minus = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= opts.verify_points; ++i) {
            const double t = static_cast<double>(i) / opts.verify_points;
            const double m = hprime(t) - F(h(t), t);
            min_plus = std::min(min_plus, m);
            max_minus = std::max(max_minus, m);
        }
        if (min_plus > 0) {
            out.sign = +1;
            out.margin = min_plus;
        } else if (max_minus < 0) {
            out.sign = -1;
            out.margin = -max_minus;
        } else {
            out.margin = 0.0;
            out.sign = 0;
        }
        return out;
    };

    // Constant-height loops cover every field whose time slices keep a sign
    // somewhere in the band (all autonomous fields in particular).
    {
        TransversalLoop best;
        best.margin = 0.0;
        for (int i = best_begin; i < best_begin + best_len; ++i) {
            const double xc = xs[i];
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (int j = 0; j <= opts.verify_points; ++j) {
                const double t = static_cast<double>(j) / opts.verify_points;
                const double v = F(xc, t);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            double margin = 0.0;
            if (lo > 0) margin = lo;
            if (hi < 0) margin = -hi;
            if (margin > best.margin) {
                best.margin = margin;
                best.knots = {{0.0, xc}, {1.0, xc}};
                best.sign = lo > 0 ? -1 : +1;  // sign of h' - F = -F
                best.constant = true;
            }
        }
        if (best.margin > 0) return best;
    }

    // X_n tilt: follow the tilted flow and close up with a monotone bump.
    const double xc = 0.5 * (band_lo + band_hi);
    const double tilt_sign = -sign_d;
    int exponent = -1;
    double gap = 0.0;
    for (int n = 0; n <= opts.max_tilt_exponent; ++n) {
        const double tilt = tilt_sign * std::pow(2.0, -n);
        const double d_tilt = advance_time_one(F, xc, tilt, opts.ode_tol) - xc;
        if ((d_tilt > 0 ? +1 : -1) == sign_d && std::abs(d_tilt) > dead) {
            exponent = n;
            gap = d_tilt;
            break;
        }
    }
    if (exponent < 0)
        throw CheckFailure("closed transversal: no tilt keeps the displacement one-signed");

    const double tilt = tilt_sign * std::pow(2.0, -exponent);
    std::vector<std::pair<double, double>> knots;
    advance_time_one(F, xc, tilt, opts.ode_tol, &knots);

    auto u_of = [knots](double t) {
        auto it = std::lower_bound(
            knots.begin(), knots.end(), t,
            [](const std::pair<double, double>& k, double tt) { return k.first < tt; });
        if (it == knots.begin()) return knots.front().second;
        if (it == knots.end()) return knots.back().second;
        const auto& [t1, y1] = *it;
        const auto& [t0, y0] = *(it - 1);
        return t1 == t0 ? y0 : y0 + (y1 - y0) * (t - t0) / (t1 - t0);
    };
    const double w = opts.bump_width;
    auto h_of = [&](double t) {
        return u_of(t) - gap * quintic_smoothstep((t - (1.0 - w)) / w);
    };
    auto hprime_of = [&](double t) {
        return F(u_of(t), t) + tilt -
               (gap / w) * quintic_smoothstep_deriv((t - (1.0 - w)) / w);
    };

    TransversalLoop loop;
    loop.constant = false;
    for (int i = 0; i <= opts.verify_points; ++i) {
        const double t = static_cast<double>(i) / opts.verify_points;
        loop.knots.emplace_back(t, h_of(t));
    }
    TransversalLoop verified = verify(loop, h_of, hprime_of);
    if (verified.sign == 0)
        throw CheckFailure("closed transversal: closing bump broke the one-signed margin on "
                           "band [" + std::to_string(band_lo) + ", " + std::to_string(band_hi) +
                           "]");
    return verified;
}

CircleFoliationResult circle_foliation_approx(const CylinderField& F, double x_lo, double x_hi,
                                              int lattice, int probes, double fixed_point_tol,
                                              double ode_tol) {
    const double d_lo = advance_time_one(F, x_lo, 0.0, ode_tol) - x_lo;
    const double d_hi = advance_time_one(F, x_hi, 0.0, ode_tol) - x_hi;
    if (std::abs(d_lo) > fixed_point_tol || std::abs(d_hi) > fixed_point_tol)
        throw CheckFailure("circle foliation band endpoints are not fixed points of the return "
                           "map");

    // Sample the solution map u(x_i, t_j) on a lattice, Hermite in t.
    const int nt = 128;
    struct Column {
        double x;
        double d;                      // P(x) - x
        std::vector<double> u, udot;   // values and F(u, t_j)
    };
    std::vector<Column> cols(lattice + 1);
    for (int i = 0; i <= lattice; ++i) {
        Column& c = cols[i];
        c.x = x_lo + (x_hi - x_lo) * i / lattice;
        c.u.resize(nt + 1);
        c.udot.resize(nt + 1);
        c.u[0] = c.x;
        c.udot[0] = F(c.x, 0.0);
        // integrate the column segment by segment so the lattice values are
        // solver-accurate, not interpolated
        using RK = Rk45<1>;
        auto rhs = [&](double t, const RK::State& y, RK::State& dy) { dy[0] = F(y[0], t); };
        RK::State y{c.x}, k1{}, y_new{}, k_last{};
        rhs(0.0, y, k1);
        double t = 0.0, h = 1.0 / nt;
        for (int j = 1; j <= nt; ++j) {
            const double t_target = static_cast<double>(j) / nt;
            while (t < t_target) {
                h = std::min(h, t_target - t);
                const double err = RK::step(rhs, t, y, h, k1, y_new, k_last, ode_tol, ode_tol);
                if (err > 1.0 && h > 1e-9) {
                    h = rk45_next_step(h, err);
                    continue;
                }
                t += h;
                y = y_new;
                k1 = k_last;
                h = std::max(rk45_next_step(h, err), 1e-9);
            }
            c.u[j] = y[0];
            c.udot[j] = F(y[0], t_target);
        }
        c.d = c.u[nt] - c.x;
    }

    // The closure owns the lattice so it stays valid after return.
    auto shared_cols = std::make_shared<const std::vector<Column>>(std::move(cols));
    const CylinderField F_copy = F;
    const int nt_c = nt, lattice_c = lattice;

    auto f_tilde = [shared_cols, F_copy, nt_c, lattice_c](double xq, double t) -> double {
        const auto& cl = *shared_cols;
        t = t - std::floor(t);
        auto u_at = [&](const Column& c, double tt) {
            tt = std::clamp(tt, 0.0, 1.0);
            const double s = tt * nt_c;
            const int j = std::min(static_cast<int>(s), nt_c - 1);
            const double t0 = static_cast<double>(j) / nt_c;
            const double t1 = static_cast<double>(j + 1) / nt_c;
            return hermite(t0, c.u[j], c.udot[j], t1, c.u[j + 1], c.udot[j + 1], tt);
        };
        // corrected curve through column i: position u(x_i,t) - t d(x_i),
        // slope F(u,t) - d(x_i)
        auto pos_at = [&](int i, double tt) { return u_at(cl[i], tt) - tt * cl[i].d; };
        auto val_at = [&](int i, double tt) { return F_copy(u_at(cl[i], tt), tt) - cl[i].d; };

        if (xq <= pos_at(0, t) || xq >= pos_at(lattice_c, t)) return F_copy(xq, t);
        int lo = 0, hi = lattice_c;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            if (pos_at(mid, t) <= xq) lo = mid; else hi = mid;
        }
        // 4-point Lagrange interpolation in the position variable
        const int i0 = std::clamp(lo - 1, 0, lattice_c - 3);
        double px[4], pv[4];
        for (int k = 0; k < 4; ++k) {
            px[k] = pos_at(i0 + k, t);
            pv[k] = val_at(i0 + k, t);
        }
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
            double w = pv[k];
            for (int m = 0; m < 4; ++m)
                if (m != k) w *= (xq - px[m]) / (px[k] - px[m]);
            acc += w;
        }
        return acc;
    };

    CircleFoliationResult out;
    out.F_tilde = f_tilde;
    out.sup_displacement = 0.0;
    for (const auto& c : *shared_cols)
        out.sup_displacement = std::max(out.sup_displacement, std::abs(c.d));

    out.c0_distance = 0.0;
    for (int i = 0; i <= 200; ++i)
        for (int j = 0; j <= 40; ++j) {
            const double x = x_lo + (x_hi - x_lo) * i / 200.0;
            const double t = j / 40.0;
            out.c0_distance = std::max(out.c0_distance, std::abs(f_tilde(x, t) - F(x, t)));
        }

    CylinderField tilde{f_tilde, F.sup_bound + out.sup_displacement, 0.0};
    out.identity_residual = 0.0;
    for (int i = 1; i < probes; ++i) {
        const double x = x_lo + (x_hi - x_lo) * i / probes;
        const double back = advance_time_one(tilde, x, 0.0, ode_tol);
        out.identity_residual = std::max(out.identity_residual, std::abs(back - x));
    }
    return out;
}

}  // namespace bct
