// Acceptance suite: exact golden values on the analytically solvable
// fixtures plus the randomized property sweep. One verdict line per
// criterion; exit code 0 only if all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "bct/certificates.hpp"
#include "bct/cylinder.hpp"
#include "bct/liouville.hpp"
#include "bct/pairspec.hpp"
#include "bct/plane_fields.hpp"

using namespace bct;

namespace {

double wall() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int failures = 0;

void verdict(int id, const std::string& label, bool pass, const std::string& detail,
             double seconds) {
    std::printf("[%s] criterion %d: %-34s %s  (%.1fs)\n", pass ? "PASS" : "FAIL", id,
                label.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) failures++;
}

struct Fixture {
    PairSpec spec;
    Grid3 grid;
    BalancedPair bp;
    PairScalars sc;
    SigmaFields sigma;
};

Fixture load_fixture(const std::string& path, int grid_n) {
    PairSpec spec = load_pair_spec(path);
    spec.grid = grid_n;
    Grid3 grid = spec.make_grid();
    BalancedPair bp = balance(*spec.pair, grid);
    PairScalars sc = pair_scalars(bp);
    BoundedOdeConfig cfg;
    cfg.compute_residuals = false;
    SigmaFields sigma = sigma_fields(bp, sc, grid, cfg);
    return Fixture{std::move(spec), std::move(grid), std::move(bp), std::move(sc),
                   std::move(sigma)};
}

double sup_scalar_error(const ScalarField& f, const Grid3& grid, double target) {
    double sup = 0;
    for (const Vec3& p : grid.points()) {
        const std::array<double, 3> q{p.x(), p.y(), p.z()};
        sup = std::max(sup, std::abs(f.f.evaluate(q) - target));
    }
    return sup;
}

char buf[512];

void criterion_1(const Fixture& fx) {
    const double t0 = wall();
    bool ok = true;

    double x_err = 0;
    for (const Vec3& p : fx.grid.points())
        x_err = std::max(x_err, (fx.bp.X(p) - Vec3(0, 2 * p.y(), 0)).norm());
    ok = ok && x_err < 1e-10;

    const double f0e = sup_scalar_error(fx.sc.f0, fx.grid, 2.0);
    const double g0e = sup_scalar_error(fx.sc.g0, fx.grid, 0.0);
    const double gme = sup_scalar_error(fx.sc.g_minus, fx.grid, 1.0);
    const double gpe = sup_scalar_error(fx.sc.g_plus, fx.grid, -1.0);
    ok = ok && f0e < 1e-9 && g0e < 1e-9 && gme < 1e-9 && gpe < 1e-9;

    const LieIdentityReport lie = check_lie_identities(fx.bp, fx.sc, fx.grid, 1e-9);
    ok = ok && lie.pass;

    const double su = fx.sigma.sup_abs_sigma_u();
    const double ss = fx.sigma.sup_abs_sigma_s();
    ok = ok && su < 1e-7 && ss < 1e-7;

    const InvariantFrame frame = assemble_frame(fx.bp, fx.sc, fx.sigma, false);
    double angle = 0, ru_err = 0, rs_err = 0;
    for (const auto& f : frame.at) {
        angle = std::max(angle, line_angle(f.alpha_s, Vec3(0, 0, 1)));
        ru_err = std::max(ru_err, std::abs(f.r_u - 2.0));
        rs_err = std::max(rs_err, std::abs(f.r_s));
    }
    ok = ok && angle < 1e-6 && ru_err < 1e-6 && rs_err < 1e-6;

    std::snprintf(buf, sizeof buf,
                  "|X|err %.1e scalars %.1e lie %.1e sigma %.1e angle %.1e rates %.1e", x_err,
                  std::max({f0e, g0e, gme, gpe}), std::max(lie.sup_minus, lie.sup_plus),
                  std::max(su, ss), angle, std::max(ru_err, rs_err));
    verdict(1, "saddle-slab golden values", ok, buf, wall() - t0);
}

void criterion_2(const Fixture& fx) {
    const double t0 = wall();
    bool ok = true;

    const double f0e = sup_scalar_error(fx.sc.f0, fx.grid, 0.0);
    const double g0e = sup_scalar_error(fx.sc.g0, fx.grid, 0.0);
    ok = ok && f0e < 1e-9 && g0e < 1e-9;

    const LiouvilleVerdict lv = liouville_check(fx.bp, fx.sc, fx.grid);
    ok = ok && lv.liouville && std::abs(lv.min_f0) < 1e-9;

    const double su = fx.sigma.sup_abs_sigma_u();
    const double ss = fx.sigma.sup_abs_sigma_s();
    ok = ok && su < 1e-7 && ss < 1e-7;

    const InvariantFrame frame = assemble_frame(fx.bp, fx.sc, fx.sigma, false);
    double gap_err = 0;
    for (const auto& f : frame.at) gap_err = std::max(gap_err, std::abs(f.r_u - f.r_s - 2.0));
    ok = ok && gap_err < 1e-7;

    std::vector<Vec3> samples;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 8; ++i) samples.emplace_back(u(rng), u(rng), u(rng));
    const ConvergenceReport conv = plane_transport_convergence(fx.bp, fx.sc, samples, 5.0, 40);
    bool mono = !conv.series.empty();
    double exp_lo = 1e300, exp_hi = -1e300;
    for (const auto& s : conv.series) {
        mono = mono && s.monotone_plus && s.order_ok;
        exp_lo = std::min(exp_lo, s.fitted_exponent_plus);
        exp_hi = std::max(exp_hi, s.fitted_exponent_plus);
    }
    ok = ok && mono && exp_lo >= 1.95 && exp_hi <= 2.05;

    std::snprintf(
        buf, sizeof buf,
        "scalars %.1e min_f0 %.1e sigma %.1e gap %.1e theta_mono %s exponent [%.3f, %.3f]",
        std::max(f0e, g0e), std::abs(lv.min_f0), std::max(su, ss), gap_err, mono ? "yes" : "NO",
        exp_lo, exp_hi);
    verdict(2, "anosov suspension + plane decay", ok, buf, wall() - t0);
}

void criterion_3() {
    const double t0 = wall();
    bool ok = true;
    BoundedOdeConfig cfg;

    double value_err = 0;
    for (double g : {-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0}) {
        const auto prob = BoundedSolutionProblem::build(CoefficientSampler::constant(g), cfg);
        const BoundedValue v = bounded_initial_value(prob, cfg);
        value_err = std::max(value_err, std::abs(v.y0 + 0.5 * std::asinh(0.5 * g)));
    }
    ok = ok && value_err < 1e-6;

    // dichotomy and the (P1) separation rate with epsilon = 2
    const auto prob = BoundedSolutionProblem::build(CoefficientSampler::constant(1.0), cfg);
    const BoundedValue v = bounded_initial_value(prob, cfg);
    const double delta = 1e-3;
    const ShotResult up = classify_shot(prob, v.y0 + delta, 2 * v.horizon, cfg.integrator_tol);
    const ShotResult down = classify_shot(prob, v.y0 - delta, 2 * v.horizon, cfg.integrator_tol);
    ok = ok && up.kind == ShotKind::EscapePlus && down.kind == ShotKind::EscapeMinus;
    double rate_margin = 1e300;
    const double t_common = std::min(up.escape_time, down.escape_time);
    for (int i = 0; i <= 24; ++i) {
        const double t = t_common * i / 24;
        const double gap = up.y_at(t) - down.y_at(t);
        rate_margin = std::min(rate_margin, gap * 1.05 - 2 * delta * std::exp(2 * t));
    }
    ok = ok && rate_margin >= 0.0;

    std::snprintf(buf, sizeof buf, "closed-form err %.1e dichotomy %s%s rate margin %.1e",
                  value_err, up.kind == ShotKind::EscapePlus ? "+" : "?",
                  down.kind == ShotKind::EscapeMinus ? "-" : "?", rate_margin);
    verdict(3, "bounded-ODE solver vs closed form", ok, buf, wall() - t0);
}

void criterion_4(const Fixture& slab, const Fixture& anosov) {
    const double t0 = wall();
    BoundedOdeConfig cfg;
    cfg.compute_residuals = false;
    bool ok = true;
    std::string detail;
    for (const Fixture* fx : {&slab, &anosov}) {
        const SkeletonGraph g = skeleton(fx->bp, fx->sc, fx->sigma, 1e-2, 10.0, cfg);
        const bool bounded = g.bounded_count() == fx->grid.size();
        const bool escape = g.escaping_offset_count() == fx->grid.size();
        ok = ok && bounded && escape;
        std::snprintf(buf, sizeof buf, "%s %zu/%zu bounded %zu/%zu escaping  ",
                      fx->spec.name.c_str(), g.bounded_count(), fx->grid.size(),
                      g.escaping_offset_count(), fx->grid.size());
        detail += buf;
    }
    verdict(4, "skeleton certificates", ok, detail, wall() - t0);
}

void criterion_5(const Fixture& fx) {
    const double t0 = wall();
    const ReebTransversalityReport rep = reeb_transversality(
        fx.bp, fx.sc, fx.sigma, ScalarField{fx.spec.chart, expr::constant(0.0)});
    const bool ok = rep.signs_ok && rep.max_cross_validation < 1e-4 &&
                    rep.max_identity_residual < 1e-5;
    std::snprintf(buf, sizeof buf, "signs %s cross %.1e identity %.1e",
                  rep.signs_ok ? "ok" : "BAD", rep.max_cross_validation,
                  rep.max_identity_residual);
    verdict(5, "Reeb transversality (anosov)", ok, buf, wall() - t0);
}

void criterion_6(const std::string& specs_dir, int grid_n) {
    const double t0 = wall();
    bool ok = true;
    std::string detail;

    {
        PairSpec spec = load_pair_spec(specs_dir + "/anosov_mapping_torus.json");
        spec.grid = grid_n;
        const Grid3 grid = spec.make_grid();
        const SeedToPairResult res =
            liouville_pair_from_foliation(*spec.seed, spec.eps_grid, grid);
        ok = ok && res.min_f0 > -2.0 + 1e-6;
        std::snprintf(buf, sizeof buf, "mt seed eps %.3g min_f0 %.2e  ", res.epsilon,
                      res.min_f0);
        detail += buf;
    }
    {
        PairSpec spec = load_pair_spec(specs_dir + "/reeb_component.json");
        const Grid3 grid = spec.make_grid();
        const SeedToPairResult res = liouville_pair_from_foliation(*spec.seed, {0.1}, grid);
        const ThreeForm vol_p = frobenius_residual(res.pair.alpha_plus);
        const ThreeForm vol_m = frobenius_residual(res.pair.alpha_minus);
        double ratio_err = 0;
        for (const Vec3& p : grid.points()) {
            ratio_err = std::max(ratio_err, std::abs(vol_p.coefficient(p) / 0.1 - 1.0));
            ratio_err = std::max(ratio_err, std::abs(vol_m.coefficient(p) / -0.1 - 1.0));
        }
        ok = ok && ratio_err < 1e-8;
        std::snprintf(buf, sizeof buf, "reeb seed tau 0.1 ratio err %.1e", ratio_err);
        detail += buf;
    }
    verdict(6, "Liouville pairs from foliations", ok, detail, wall() - t0);
}

void criterion_7(const std::string& specs_dir) {
    const double t0 = wall();
    bool ok = true;
    std::string detail;

    {
        PairSpec spec = load_pair_spec(specs_dir + "/cylinder_constant.json");
        const auto t = closed_transversal(spec.cylinder->field, spec.cylinder->x_lo,
                                          spec.cylinder->x_hi);
        const bool pass = t && std::abs(t->margin - 0.3) < 1e-9;
        ok = ok && pass;
        std::snprintf(buf, sizeof buf, "const margin %.12f  ", t ? t->margin : -1.0);
        detail += buf;
    }
    {
        PairSpec spec = load_pair_spec(specs_dir + "/cylinder_sine.json");
        const auto loops = closed_orbits(spec.cylinder->field, -0.75, 0.75, 769, 1e-10);
        bool roots_ok = loops.size() == 3;
        double root_err = 0;
        for (const auto& l : loops) {
            const double nearest = std::round(l.x0 * 2.0) / 2.0;
            root_err = std::max(root_err, std::abs(l.x0 - nearest));
        }
        roots_ok = roots_ok && root_err < 1e-8;
        const auto t = closed_transversal(spec.cylinder->field, 0.0, 0.5);
        const bool trans_ok = t && t->margin > 0.0;
        ok = ok && roots_ok && trans_ok;
        std::snprintf(buf, sizeof buf, "sine roots %zu err %.1e margin %.2f  ", loops.size(),
                      root_err, t ? t->margin : -1.0);
        detail += buf;
    }
    {
        PairSpec spec = load_pair_spec(specs_dir + "/cylinder_sine_small.json");
        const CircleFoliationResult r = circle_foliation_approx(
            spec.cylinder->field, spec.cylinder->band->first, spec.cylinder->band->second);
        const bool pass = r.identity_residual < 1e-6 && r.c0_distance <= 0.06;
        ok = ok && pass;
        std::snprintf(buf, sizeof buf, "foliation residual %.1e dist %.3f", r.identity_residual,
                      r.c0_distance);
        detail += buf;
    }
    verdict(7, "cylinder constructions", ok, detail, wall() - t0);
}

void criterion_8() {
    const double t0 = wall();
    int violations = 0;
    std::mt19937_64 point_rng(909);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    BoundedOdeConfig cfg;
    cfg.compute_residuals = false;

    for (unsigned seed = 1; seed <= 50; ++seed) {
        // base tight pair on T^3 with a random trigonometric perturbation
        const Chart chart = Chart::torus3({1, 1, 1});
        const Expr tau = expr::constant(2.0 * M_PI);
        const Expr xv = expr::variable(0, "x"), yv = expr::variable(1, "y"),
                   zv = expr::variable(2, "z");
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        std::uniform_int_distribution<int> pick(0, 2);
        auto bump = [&]() {
            const Expr coords[3] = {xv, yv, zv};
            Expr acc = expr::constant(0.02 * unif(rng));
            for (int k = 0; k < 2; ++k)
                acc = acc + expr::constant(0.02 * unif(rng)) *
                                expr::sin(tau * coords[pick(rng)] +
                                          expr::constant(unif(rng) * M_PI));
            return acc;
        };
        const Expr cz = expr::cos(tau * zv), sz = expr::sin(tau * zv);
        ContactPair pair{chart, one_form(chart, cz + bump(), sz + bump(), bump()),
                         one_form(chart, cz + bump(), expr::constant(0.0) - sz + bump(), bump())};

        const Grid3 grid(chart, 6);
        const BalancedPair bp = balance(pair, grid);
        const PairScalars sc = pair_scalars(bp);
        const ThreeForm ddm = exterior_derivative(exterior_derivative(bp.pair.alpha_minus));
        const Expr defect = frobenius_residual(bp.pair.alpha_plus).c +
                            frobenius_residual(bp.pair.alpha_minus).c;

        for (int k = 0; k < 8; ++k) {
            const Vec3 p(u(point_rng), u(point_rng), u(point_rng));
            const std::array<double, 3> q{p.x(), p.y(), p.z()};
            if (std::abs(ddm.coefficient(p)) >= 1e-11) violations++;
            const Vec3 w_ab = wedge(bp.pair.alpha_minus, bp.pair.alpha_plus).coefficients(p);
            const Vec3 w_ba = wedge(bp.pair.alpha_plus, bp.pair.alpha_minus).coefficients(p);
            if (w_ab != (-w_ba).eval()) violations++;
            if (std::abs(defect.evaluate(q)) >= 1e-9 * std::abs(bp.dvol.c.evaluate(q)))
                violations++;
            if (std::abs(sc.f0.f.evaluate(q) -
                         (sc.g_minus.f.evaluate(q) - sc.g_plus.f.evaluate(q))) >= 1e-10)
                violations++;
        }
        for (int k = 0; k < 2; ++k) {
            const Vec3 p(u(point_rng), u(point_rng), u(point_rng));
            const FramePoint f = frame_at_point(bp, sc, p, true, cfg);
            if (!(f.r_u - f.r_s >= 2.0 - 1e-8)) violations++;
            const Vec3 am = bp.pair.alpha_minus.covector(p);
            const Vec3 ap = bp.pair.alpha_plus.covector(p);
            if ((f.alpha_s.cross(f.alpha_u) - am.cross(ap)).norm() >=
                1e-8 * std::max(1.0, am.cross(ap).norm()))
                violations++;
        }
        const Vec3 p(u(point_rng), u(point_rng), u(point_rng));
        if (sigma_flow_equivariance_residual(bp, sc, p, 0.4, cfg) >= 1e-5) violations++;
    }
    std::snprintf(buf, sizeof buf, "50 seeds, %d violation(s)", violations);
    verdict(8, "randomized pair property sweep", violations == 0, buf, wall() - t0);
}

}  // namespace

int main(int argc, char** argv) {
    std::string specs_dir = "specs";
    int grid_n = 32;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::strcmp(argv[i], "--specs") == 0) specs_dir = argv[i + 1];
        if (std::strcmp(argv[i], "--grid") == 0) grid_n = std::atoi(argv[i + 1]);
    }

    const double t0 = wall();
    std::printf("acceptance suite, grid %d, specs at %s\n", grid_n, specs_dir.c_str());
    try {
        const Fixture slab = load_fixture(specs_dir + "/saddle_slab.json", grid_n);
        const Fixture anosov = load_fixture(specs_dir + "/anosov_mapping_torus.json", grid_n);

        criterion_1(slab);
        criterion_2(anosov);
        criterion_3();
        criterion_4(slab, anosov);
        criterion_5(anosov);
        criterion_6(specs_dir, grid_n);
        criterion_7(specs_dir);
        criterion_8();
    } catch (const std::exception& e) {
        std::printf("[FAIL] acceptance aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%d criterion failure(s), total %.1fs\n", failures, wall() - t0);
    return failures == 0 ? 0 : 1;
}
