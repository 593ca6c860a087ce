#include "bct/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "bct/errors.hpp"
#include "bct/version.hpp"

namespace bct {

using nlohmann::ordered_json;

namespace {

namespace fs = std::filesystem;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

struct Ctx {
    const PairSpec& spec;
    const RunConfig& cfg;
    Grid3 grid;
    bool pass = true;
    ordered_json timing = ordered_json::object();

    void check(bool ok) { pass = pass && ok; }
};

struct StageTimer {
    Ctx& ctx;
    std::string name;
    double start;
    StageTimer(Ctx& c, std::string n) : ctx(c), name(std::move(n)), start(now_seconds()) {}
    ~StageTimer() { ctx.timing[name] = now_seconds() - start; }
};

void write_csv(const Ctx& ctx, const std::string& stem,
               const std::vector<std::string>& value_names,
               const std::vector<const std::vector<double>*>& columns) {
    if (!ctx.cfg.emit_csv) return;
    fs::create_directories(ctx.cfg.out_dir);
    const fs::path path = fs::path(ctx.cfg.out_dir) / (ctx.spec.name + "_" + stem + ".csv");
    std::ofstream out(path);
    const auto vars = ctx.grid.chart().variable_names();
    out << vars[0] << "," << vars[1] << "," << vars[2];
    for (const auto& n : value_names) out << "," << n;
    out << "\n";
    char buf[96];
    for (std::size_t i = 0; i < ctx.grid.size(); ++i) {
        const Vec3 p = ctx.grid.point(i);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", p.x(), p.y(), p.z());
        out << buf;
        for (const auto* col : columns) {
            std::snprintf(buf, sizeof buf, ",%.17g", (*col)[i]);
            out << buf;
        }
        out << "\n";
    }
}

std::vector<Vec3> interior_samples(const Grid3& grid, const VectorField& X, std::size_t count,
                                   double min_speed, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    std::vector<Vec3> out;
    for (int tries = 0; tries < 20000 && out.size() < count; ++tries) {
        const std::size_t i = pick(rng);
        if (!grid.interior(i)) continue;
        const Vec3 p = grid.point(i);
        if (X(p).norm() < min_speed) continue;
        out.push_back(p);
    }
    return out;
}

ordered_json scalar_stats(const ScalarField& f, const Grid3& grid, ExecPolicy policy) {
    std::vector<double> v(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        const std::array<double, 3> q{p.x(), p.y(), p.z()};
        v[i] = f.f.evaluate(q);
    });
    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return ordered_json{{"min", lo}, {"max", hi}};
}

BoundedOdeConfig sigma_config(const Ctx& ctx) {
    BoundedOdeConfig cfg;
    cfg.tol = ctx.cfg.tol_override.value_or(ctx.spec.tol.sigma);
    return cfg;
}

ordered_json run_analyze(Ctx& ctx) {
    StageTimer timer(ctx, "analyze");
    ordered_json out;
    const ContactPair& pair = *ctx.spec.pair;

    const ContactCheck cc = contact_check(pair, ctx.grid, ctx.cfg.policy);
    out["contact"] = {{"ok", cc.ok},
                      {"min_plus_volume", cc.worst_margin_plus},
                      {"max_minus_volume", cc.worst_margin_minus}};
    if (!cc.ok) {
        out["contact"]["worst_point"] = vec_json(cc.worst_point);
        out["error"] = "NotContact";
        ctx.check(false);
        return out;
    }

    BalancedPair bp = balance(pair, ctx.grid, ctx.cfg.policy);
    PairScalars sc = pair_scalars(bp);

    // balanced-volume identity
    const Expr defect = frobenius_residual(bp.pair.alpha_plus).c +
                        frobenius_residual(bp.pair.alpha_minus).c;
    std::vector<double> bal(ctx.grid.size()), f0v(ctx.grid.size()), g0v(ctx.grid.size()),
        gmv(ctx.grid.size()), gpv(ctx.grid.size()), speed(ctx.grid.size());
    parallel_for(ctx.grid.size(), ctx.cfg.policy, [&](std::size_t i) {
        const Vec3 p = ctx.grid.point(i);
        const std::array<double, 3> q{p.x(), p.y(), p.z()};
        bal[i] = std::abs(defect.evaluate(q)) / std::abs(bp.dvol.c.evaluate(q));
        f0v[i] = sc.f0.f.evaluate(q);
        g0v[i] = sc.g0.f.evaluate(q);
        gmv[i] = sc.g_minus.f.evaluate(q);
        gpv[i] = sc.g_plus.f.evaluate(q);
        speed[i] = bp.X(p).norm();
    });
    double bal_sup = 0, scal_defect = 0;
    for (std::size_t i = 0; i < ctx.grid.size(); ++i) {
        bal_sup = std::max(bal_sup, bal[i]);
        scal_defect = std::max(scal_defect, std::abs(f0v[i] - (gmv[i] - gpv[i])));
        scal_defect = std::max(scal_defect, std::abs(g0v[i] - (gmv[i] + gpv[i])));
    }
    out["balance"] = {{"sup_volume_defect", bal_sup},
                      {"pass", bal_sup < ctx.spec.tol.balance}};
    ctx.check(bal_sup < ctx.spec.tol.balance);
    out["scalars"] = {{"f0", scalar_stats(sc.f0, ctx.grid, ctx.cfg.policy)},
                      {"g0", scalar_stats(sc.g0, ctx.grid, ctx.cfg.policy)},
                      {"g_minus", scalar_stats(sc.g_minus, ctx.grid, ctx.cfg.policy)},
                      {"g_plus", scalar_stats(sc.g_plus, ctx.grid, ctx.cfg.policy)},
                      {"linear_identity_defect", scal_defect}};
    ctx.check(scal_defect < 1e-10);

    if (ctx.spec.chart.is_mapping_torus()) {
        const double ga = std::max(gluing_residual(bp.pair.alpha_minus),
                                   gluing_residual(bp.pair.alpha_plus));
        const double gx = gluing_residual(bp.X);
        out["gluing"] = {{"forms", ga}, {"field", gx}, {"pass", ga < 1e-10 && gx < 1e-9}};
        ctx.check(ga < 1e-10 && gx < 1e-9);
    }

    const LieIdentityReport lie = check_lie_identities(bp, sc, ctx.grid,
                                                       ctx.spec.tol.lie, ctx.cfg.policy);
    out["lie_identities"] = {{"sup_minus", lie.sup_minus},
                             {"sup_plus", lie.sup_plus},
                             {"worst_point", vec_json(lie.worst_point)},
                             {"pass", lie.pass}};
    ctx.check(lie.pass);

    const PositivityReport pos =
        positivity_test(pair, ctx.grid, ctx.spec.tol.proportionality, ctx.cfg.policy);
    const char* verdict = pos.verdict == PairVerdict::Positive
                              ? "Positive"
                              : (pos.verdict == PairVerdict::Negative ? "Negative" : "Mixed");
    double delta_f0_defect = 0.0, witness_defect = 0.0;
    for (const auto& d : pos.delta_plus) {
        const std::array<double, 3> q{d.point.x(), d.point.y(), d.point.z()};
        const double f0 = sc.f0.f.evaluate(q);
        delta_f0_defect = std::max(delta_f0_defect, std::max(0.0, 2.0 - f0));
        witness_defect = std::max(witness_defect,
                                  std::abs(f0 - (d.u_plus + 1.0 / d.u_plus)));
    }
    for (const auto& d : pos.delta_minus) {
        const std::array<double, 3> q{d.point.x(), d.point.y(), d.point.z()};
        const double f0 = sc.f0.f.evaluate(q);
        delta_f0_defect = std::max(delta_f0_defect, std::max(0.0, f0 - (-2.0)));
        witness_defect = std::max(witness_defect,
                                  std::abs(f0 + (d.u_plus + 1.0 / d.u_plus)));
    }
    out["positivity"] = {{"verdict", verdict},
                         {"delta_plus_count", pos.delta_plus.size()},
                         {"delta_minus_count", pos.delta_minus.size()},
                         {"f0_bound_defect", delta_f0_defect},
                         {"u_witness_defect", witness_defect}};
    ctx.check(delta_f0_defect < 1e-4 && witness_defect < 1e-4);

    const SingularSetResult sing = singular_set(bp, sc, ctx.grid, {}, ctx.cfg.policy);
    ordered_json spts = ordered_json::array();
    double trace_defect = 0.0;
    for (const auto& s : sing.points) {
        trace_defect = std::max(trace_defect, s.trace_residual);
        spts.push_back({{"location", vec_json(s.location)},
                        {"class", to_string(s.cls)},
                        {"rank", s.rank},
                        {"f0", s.f0_value},
                        {"normal_det", s.normal_det},
                        {"tangency_angle", s.tangency_angle},
                        {"speed", s.speed}});
    }
    out["singular_set"] = {{"count", sing.points.size()},
                           {"newton_divergences", sing.newton_divergences},
                           {"trace_identity_defect", trace_defect},
                           {"points", spts}};
    ctx.check(trace_defect < 1e-6);

    bool nondegenerate = !sing.points.empty();
    for (const auto& s : sing.points)
        if (s.cls == SingularClass::Degenerate) nondegenerate = false;
    if (nondegenerate) {
        const ConnectionGraph graph = connection_graph(bp, sing.points);
        ordered_json recs = ordered_json::array();
        for (const auto& r : graph.records)
            recs.push_back({{"from", r.from}, {"to", r.to}, {"type", to_string(r.type)}});
        out["connections"] = {{"records", recs},
                              {"undecided", graph.undecided_orbits},
                              {"broken_triple_saddle", graph.broken_triple_saddle}};
    }

    // f0 as the dvol-divergence of X, against the variational determinant
    const auto samples = interior_samples(ctx.grid, bp.X, 5, 1e-6, 17);
    double div_res = 0.0;
    for (const Vec3& p : samples) {
        const double r = f0_divergence_residual(bp, sc, p);
        if (std::isfinite(r)) div_res = std::max(div_res, r);
    }
    out["f0_divergence_residual"] = div_res;
    ctx.check(div_res < 1e-4);

    write_csv(ctx, "scalars", {"f0", "g0", "g_minus", "g_plus", "speed"},
              {&f0v, &g0v, &gmv, &gpv, &speed});
    return out;
}

ordered_json sigma_block(const SigmaFields& sf) {
    std::size_t missing = 0, frozen = 0;
    for (std::size_t i = 0; i < sf.grid.size(); ++i) {
        missing += sf.missing_u[i] + sf.missing_s[i];
        frozen += sf.frozen_u[i] + sf.frozen_s[i];
    }
    double wmax = 0;
    for (std::size_t i = 0; i < sf.grid.size(); ++i) {
        if (!sf.missing_u[i]) wmax = std::max(wmax, sf.width_u[i]);
        if (!sf.missing_s[i]) wmax = std::max(wmax, sf.width_s[i]);
    }
    return ordered_json{{"sup_sigma_u", sf.sup_abs_sigma_u()},
                        {"sup_sigma_s", sf.sup_abs_sigma_s()},
                        {"max_width", wmax},
                        {"sup_residual", sf.sup_residual()},
                        {"missing", missing},
                        {"frozen", frozen}};
}

ordered_json run_sigma(Ctx& ctx, SigmaFields* keep = nullptr) {
    StageTimer timer(ctx, "sigma");
    BalancedPair bp = balance(*ctx.spec.pair, ctx.grid, ctx.cfg.policy);
    PairScalars sc = pair_scalars(bp);
    const BoundedOdeConfig cfg = sigma_config(ctx);
    SigmaFields sf = sigma_fields(bp, sc, ctx.grid, cfg, ctx.cfg.policy);

    ordered_json out = sigma_block(sf);
    std::size_t missing = out["missing"].get<std::size_t>();
    ctx.check(missing == 0);
    ctx.check(out["sup_residual"].get<double>() < 1e-3);

    // flow-translation equivariance spot checks
    const auto samples = interior_samples(ctx.grid, bp.X, 4, 1e-6, 23);
    double equi = 0.0;
    for (const Vec3& p : samples)
        equi = std::max(equi, sigma_flow_equivariance_residual(bp, sc, p, 0.5, cfg));
    out["flow_equivariance_residual"] = equi;
    ctx.check(equi < 1e-5);

    // on the coincidence locus sigma_u has the closed form -asinh(g0/2)/2
    const PositivityReport pos =
        positivity_test(bp.pair, ctx.grid, ctx.spec.tol.proportionality, ctx.cfg.policy);
    double delta_defect = 0.0;
    for (const auto& d : pos.delta_plus) {
        if (sf.missing_u[d.grid_index]) continue;
        const std::array<double, 3> q{d.point.x(), d.point.y(), d.point.z()};
        const double expect = -0.5 * std::asinh(0.5 * sc.g0.f.evaluate(q));
        delta_defect = std::max(delta_defect,
                                std::abs(sf.sigma_u[d.grid_index] - expect));
    }
    out["sigma_on_delta_defect"] = delta_defect;
    ctx.check(delta_defect < 1e-6);

    write_csv(ctx, "sigma",
              {"sigma_u", "sigma_s", "width_u", "width_s", "residual_u", "residual_s"},
              {&sf.sigma_u, &sf.sigma_s, &sf.width_u, &sf.width_s, &sf.residual_u,
               &sf.residual_s});
    if (keep) *keep = std::move(sf);
    return out;
}

ordered_json run_frame(Ctx& ctx) {
    StageTimer timer(ctx, "frame");
    BalancedPair bp = balance(*ctx.spec.pair, ctx.grid, ctx.cfg.policy);
    PairScalars sc = pair_scalars(bp);
    const BoundedOdeConfig cfg = sigma_config(ctx);
    SigmaFields sf = sigma_fields(bp, sc, ctx.grid, cfg, ctx.cfg.policy);
    InvariantFrame frame = assemble_frame(bp, sc, sf, /*normalize=*/true, ctx.cfg.policy);

    ordered_json out;
    out["sigma"] = sigma_block(sf);
    const FrameInvariantReport inv = frame_invariants(frame, bp, ctx.cfg.policy);
    out["invariants"] = {{"construction_residual", inv.sup_construction_residual},
                         {"min_ru_minus_rs", inv.min_ru_minus_rs},
                         {"normalization_defect", inv.sup_normalization_defect},
                         {"pass", inv.pass(ctx.spec.tol.frame_rate)}};
    ctx.check(inv.pass(ctx.spec.tol.frame_rate));

    const PositivityReport pos =
        positivity_test(bp.pair, ctx.grid, ctx.spec.tol.proportionality, ctx.cfg.policy);
    const ConeVanishingReport cone = cone_and_vanishing_checks(frame, bp, pos);
    out["cone_and_vanishing"] = {{"checked", cone.cone_checked},
                                 {"passed", cone.cone_passed},
                                 {"worst_margin", cone.worst_cone_margin},
                                 {"max_alpha_u_on_delta_plus", cone.max_alpha_u_on_delta_plus},
                                 {"max_angle_eta_u_xi_plus", cone.max_angle_eta_u_xi_plus},
                                 {"skipped_near_delta", cone.skipped_near_delta},
                                 {"pass", cone.cone_pass()}};
    ctx.check(cone.cone_pass());

    const auto samples = interior_samples(ctx.grid, bp.X, 4, 1e-4, 29);
    const double inv_res = invariance_residual(bp, sc, samples, 0.1, cfg);
    out["lie_invariance_residual"] = inv_res;
    ctx.check(inv_res < 1e-4);

    double hyp = 0.0;
    for (const Vec3& p : samples) {
        const HyperbolicIdentityReport h = hyperbolic_identities(bp, sc, p, 1e-3, cfg);
        hyp = std::max({hyp, std::abs(h.residual_plus), std::abs(h.residual_minus),
                        std::abs(h.residual_logcosh)});
    }
    out["hyperbolic_identity_residual"] = hyp;
    ctx.check(hyp < 1e-5);

    std::vector<double> ru(ctx.grid.size()), rs(ctx.grid.size()), nau(ctx.grid.size()),
        nas(ctx.grid.size());
    for (std::size_t i = 0; i < ctx.grid.size(); ++i) {
        ru[i] = frame.at[i].r_u;
        rs[i] = frame.at[i].r_s;
        nau[i] = frame.at[i].alpha_u.norm();
        nas[i] = frame.at[i].alpha_s.norm();
    }
    write_csv(ctx, "frame", {"r_u", "r_s", "norm_alpha_u", "norm_alpha_s"},
              {&ru, &rs, &nau, &nas});
    return out;
}

ordered_json run_converge(Ctx& ctx) {
    StageTimer timer(ctx, "converge");
    BalancedPair bp = balance(*ctx.spec.pair, ctx.grid, ctx.cfg.policy);
    PairScalars sc = pair_scalars(bp);
    const BoundedOdeConfig cfg = sigma_config(ctx);
    const double T = ctx.cfg.horizon_override.value_or(5.0);
    const auto samples = interior_samples(ctx.grid, bp.X, 6, 1e-4, 31);
    const ConvergenceReport rep = plane_transport_convergence(bp, sc, samples, T, 40, cfg);

    ordered_json rows = ordered_json::array();
    bool all_ok = !rep.series.empty();
    for (const auto& s : rep.series) {
        if (s.fixed_plane) {
            rows.push_back({{"sample", vec_json(s.sample)}, {"fixed_plane", true}});
            continue;
        }
        rows.push_back({{"sample", vec_json(s.sample)},
                        {"monotone_plus", s.monotone_plus},
                        {"monotone_minus", s.monotone_minus},
                        {"order_ok", s.order_ok},
                        {"fitted_exponent_plus", s.fitted_exponent_plus},
                        {"theta_plus_start", s.theta_plus.empty() ? 0.0 : s.theta_plus.front()},
                        {"theta_plus_end", s.theta_plus.empty() ? 0.0 : s.theta_plus.back()}});
        all_ok = all_ok && s.monotone_plus && s.monotone_minus && s.order_ok;
    }
    ctx.check(all_ok);
    return ordered_json{{"horizon", T}, {"samples", rows}, {"pass", all_ok}};
}

ordered_json run_liouville(Ctx& ctx) {
    StageTimer timer(ctx, "liouville");
    BalancedPair bp = balance(*ctx.spec.pair, ctx.grid, ctx.cfg.policy);
    PairScalars sc = pair_scalars(bp);
    const LiouvilleVerdict v = liouville_check(bp, sc, ctx.grid, ctx.cfg.policy);
    const LiouvilleVerdict r = rescale_search(
        bp, sc, ScalarField{ctx.spec.chart, ctx.spec.sigma_choice}, ctx.grid, ctx.cfg.policy);
    const AnosovLiouvilleVerdict al =
        anosov_liouville_check(*ctx.spec.pair, ctx.grid, ctx.cfg.policy);
    ctx.check(v.liouville);
    return ordered_json{
        {"liouville", v.liouville},
        {"min_f0", v.min_f0},
        {"worst_point", vec_json(v.worst_point)},
        {"rescaled", {{"liouville", r.liouville}, {"min_value", r.min_f0}}},
        {"anosov_liouville",
         {{"verdict", al.anosov_liouville()}, {"negated_min", al.negated.min_f0}}}};
}

ordered_json run_skeleton(Ctx& ctx) {
    StageTimer timer(ctx, "skeleton");
    BalancedPair bp = balance(*ctx.spec.pair, ctx.grid, ctx.cfg.policy);
    PairScalars sc = pair_scalars(bp);
    const LiouvilleVerdict v = liouville_check(bp, sc, ctx.grid, ctx.cfg.policy);
    if (!v.liouville) {
        ctx.check(false);
        return ordered_json{{"error", "pair is not Liouville; skeleton undefined"},
                            {"min_f0", v.min_f0}};
    }
    BoundedOdeConfig cfg = sigma_config(ctx);
    cfg.compute_residuals = false;
    SigmaFields sf = sigma_fields(bp, sc, ctx.grid, cfg, ctx.cfg.policy);
    const double horizon = ctx.cfg.horizon_override.value_or(ctx.spec.horizon);
    const SkeletonGraph graph =
        skeleton(bp, sc, sf, ctx.spec.skeleton_delta, horizon, cfg, ctx.cfg.policy);

    double track = 0.0;
    for (const auto& c : graph.certificates) track = std::max(track, c.track_error);
    const bool all_bounded = graph.bounded_count() == graph.grid.size();
    const bool all_escape = graph.escaping_offset_count() == graph.grid.size();
    ctx.check(all_bounded && all_escape);
    write_csv(ctx, "skeleton_sigma", {"sigma"}, {&graph.sigma});
    return ordered_json{{"points", graph.grid.size()},
                        {"bounded", graph.bounded_count()},
                        {"offsets_escaping", graph.escaping_offset_count()},
                        {"escape_bound", graph.escape_bound},
                        {"max_track_error", track},
                        {"transverse_quotient_sup", graph.transverse_quotient_sup()},
                        {"delta", ctx.spec.skeleton_delta},
                        {"horizon", horizon},
                        {"pass", all_bounded && all_escape}};
}

ordered_json run_reeb(Ctx& ctx) {
    StageTimer timer(ctx, "reeb");
    BalancedPair bp = balance(*ctx.spec.pair, ctx.grid, ctx.cfg.policy);
    PairScalars sc = pair_scalars(bp);
    BoundedOdeConfig cfg = sigma_config(ctx);
    cfg.compute_residuals = false;
    SigmaFields sf = sigma_fields(bp, sc, ctx.grid, cfg, ctx.cfg.policy);
    const ReebTransversalityReport rep = reeb_transversality(
        bp, sc, sf, ScalarField{ctx.spec.chart, ctx.spec.sigma_choice}, ctx.cfg.policy);
    const bool ok = rep.signs_ok && rep.max_cross_validation < ctx.spec.tol.reeb_cross &&
                    rep.max_identity_residual < 1e-5;
    ctx.check(ok);
    return ordered_json{{"signs_ok", rep.signs_ok},
                        {"max_cross_validation", rep.max_cross_validation},
                        {"max_identity_residual", rep.max_identity_residual},
                        {"epsilon_bound", rep.epsilon_bound},
                        {"sup_x_sigma_gap", rep.sup_x_sigma_gap},
                        {"pass", ok}};
}

ordered_json run_certify(Ctx& ctx) {
    StageTimer timer(ctx, "certify");
    ordered_json rows = ordered_json::array();
    bool all_ok = true;
    for (const auto& cs : ctx.spec.certificates) {
        Certificate cert;
        if (cs.kind == "taut") {
            if (!cs.omega || !cs.eta) throw InvalidSpec("taut certificate needs omega and eta");
            cert = taut_certificate(*cs.omega, covector_of(*cs.eta), ctx.grid, 1e-9,
                                    ctx.cfg.policy);
        } else if (cs.kind == "strong_tight") {
            if (!ctx.spec.pair || !cs.omega)
                throw InvalidSpec("strong_tight certificate needs the pair and omega");
            cert = strong_tightness_certificate(*ctx.spec.pair, *cs.omega, ctx.grid, 1e-9,
                                                ctx.cfg.policy);
        } else if (cs.kind == "hypertaut") {
            if (!cs.beta || !cs.eta) throw InvalidSpec("hypertaut certificate needs beta and eta");
            cert = hypertaut_certificate(*cs.beta, covector_of(*cs.eta), ctx.grid,
                                         ctx.cfg.policy);
        } else if (cs.kind == "volume_preserving") {
            if (!cs.upsilon) throw InvalidSpec("volume_preserving certificate needs upsilon");
            std::vector<CovectorField> defining;
            if (cs.eta) {
                defining.push_back(covector_of(*cs.eta));
            } else if (ctx.spec.pair) {
                defining.push_back(covector_of(ctx.spec.pair->alpha_minus));
                defining.push_back(covector_of(ctx.spec.pair->alpha_plus));
            } else {
                throw InvalidSpec("volume_preserving certificate needs eta or a pair");
            }
            cert = volume_preserving_transversal(*cs.upsilon, defining, ctx.grid, 1e-9,
                                                 ctx.cfg.policy);
        } else {
            throw InvalidSpec("unknown certificate kind '" + cs.kind + "'");
        }
        rows.push_back({{"label", cs.label},
                        {"kind", to_string(cert.kind)},
                        {"verdict", cert.verdict},
                        {"failure", to_string(cert.failure)},
                        {"worst_margin", cert.worst_margin},
                        {"detail", cert.detail}});
        all_ok = all_ok && cert.verdict;
    }
    ctx.check(all_ok);
    return ordered_json{{"certificates", rows}, {"pass", all_ok}};
}

ordered_json run_cylinder(Ctx& ctx) {
    StageTimer timer(ctx, "cylinder");
    const CylinderSpec& cs = *ctx.spec.cylinder;
    ordered_json out;
    out["F"] = cs.source;

    std::vector<double> xs(cs.scan_points);
    for (int i = 0; i < cs.scan_points; ++i)
        xs[i] = cs.x_lo + (cs.x_hi - cs.x_lo) * i / (cs.scan_points - 1);
    const ReturnMap rm = return_map(cs.field, xs);
    double dmax = 0;
    for (double d : rm.displacement) dmax = std::max(dmax, std::abs(d));
    out["return_map"] = {{"points", xs.size()},
                         {"max_displacement", dmax},
                         {"strictly_increasing", rm.strictly_increasing()}};
    bool ok = true;
    if (cs.field.lipschitz_x >= 0 && std::isfinite(cs.field.lipschitz_x))
        ok = ok && rm.strictly_increasing();

    const auto orbits = closed_orbits(cs.field, cs.x_lo, cs.x_hi, cs.scan_points, 1e-9);
    ordered_json oj = ordered_json::array();
    double worst_res = 0;
    for (const auto& o : orbits) {
        worst_res = std::max(worst_res, o.residual);
        if (oj.size() < 64) oj.push_back({{"x0", o.x0}, {"residual", o.residual}});
    }
    out["closed_orbits"] = {{"count", orbits.size()},
                            {"worst_residual", worst_res},
                            {"roots", oj}};
    ok = ok && (orbits.empty() || worst_res < 1e-8);

    const auto transversal = closed_transversal(cs.field, cs.x_lo, cs.x_hi);
    if (transversal) {
        out["closed_transversal"] = {{"found", true},
                                     {"margin", transversal->margin},
                                     {"sign", transversal->sign},
                                     {"constant", transversal->constant}};
        ok = ok && transversal->margin > 0;
    } else {
        out["closed_transversal"] = {{"found", false}};
    }

    const double x_mid = 0.5 * (cs.x_lo + cs.x_hi);
    try {
        const KneserInterval k = kneser_interval(cs.field, x_mid, 14, ctx.spec.tol.kneser);
        out["kneser"] = {{"x0", x_mid},
                         {"m_minus", k.m_minus},
                         {"m_plus", k.m_plus},
                         {"last_gap", std::max(k.last_gap_minus, k.last_gap_plus)}};
    } catch (const CheckFailure& e) {
        out["kneser"] = {{"x0", x_mid}, {"error", e.what()}};
    }

    if (cs.band) {
        try {
            const CircleFoliationResult fol =
                circle_foliation_approx(cs.field, cs.band->first, cs.band->second);
            out["circle_foliation"] = {{"band", {cs.band->first, cs.band->second}},
                                       {"c0_distance", fol.c0_distance},
                                       {"sup_displacement", fol.sup_displacement},
                                       {"identity_residual", fol.identity_residual}};
            ok = ok && fol.identity_residual < 1e-6;
        } catch (const CheckFailure& e) {
            out["circle_foliation"] = {{"error", e.what()}};
            ok = false;
        }
    }
    ctx.check(ok);
    out["pass"] = ok;
    return out;
}

ordered_json run_seed_to_pair(Ctx& ctx) {
    StageTimer timer(ctx, "seed_to_pair");
    const SeedToPairResult res =
        liouville_pair_from_foliation(*ctx.spec.seed, ctx.spec.eps_grid, ctx.grid,
                                      ctx.cfg.policy);
    ordered_json out;
    out["epsilon"] = res.epsilon;
    out["min_f0"] = res.min_f0;
    out["seed_check"] = {{"frobenius_sup", res.seed_check.frobenius_sup},
                         {"min_pairing", res.seed_check.min_pairing},
                         {"min_beta_dalpha", res.seed_check.min_beta_dalpha}};
    const auto keys = ctx.spec.chart.is_mapping_torus()
                          ? std::array<const char*, 3>{"da", "db", "dt"}
                          : std::array<const char*, 3>{"dx", "dy", "dz"};
    ordered_json am, ap;
    for (int i = 0; i < 3; ++i) {
        am[keys[i]] = res.pair.alpha_minus.c[i].print();
        ap[keys[i]] = res.pair.alpha_plus.c[i].print();
    }
    out["alpha_minus"] = am;
    out["alpha_plus"] = ap;
    out["pass"] = true;
    return out;
}

}  // namespace

RunResult run_command(const PairSpec& spec_in, const RunConfig& cfg) {
    PairSpec spec = spec_in;
    if (cfg.grid_override) spec.grid = *cfg.grid_override;
    if (cfg.horizon_override) spec.horizon = *cfg.horizon_override;

    Ctx ctx{spec, cfg, spec.make_grid()};
    RunResult result;
    ordered_json& rep = result.report;
    rep["tool"] = std::string(kToolName) + " " + kToolVersion;
    rep["name"] = spec.name;
    rep["command"] = cfg.command;
    rep["config"] = {{"grid", spec.grid},
                     {"horizon", spec.horizon},
                     {"tolerances",
                      {{"balance", spec.tol.balance},
                       {"lie", spec.tol.lie},
                       {"proportionality", spec.tol.proportionality},
                       {"sigma", spec.tol.sigma},
                       {"reeb_cross", spec.tol.reeb_cross},
                       {"kneser", spec.tol.kneser}}}};

    try {
        const std::string& cmd = cfg.command;
        const bool needs_pair = cmd == "analyze" || cmd == "sigma" || cmd == "frame" ||
                                cmd == "converge" || cmd == "liouville" || cmd == "skeleton" ||
                                cmd == "reeb";
        if (needs_pair && !spec.pair)
            throw InvalidSpec("command '" + cmd + "' needs alpha_minus/alpha_plus in the spec");
        if (cmd == "analyze") {
            rep["results"] = run_analyze(ctx);
        } else if (cmd == "sigma") {
            rep["results"] = run_sigma(ctx);
        } else if (cmd == "frame") {
            rep["results"] = run_frame(ctx);
        } else if (cmd == "converge") {
            rep["results"] = run_converge(ctx);
        } else if (cmd == "liouville") {
            rep["results"] = run_liouville(ctx);
        } else if (cmd == "skeleton") {
            rep["results"] = run_skeleton(ctx);
        } else if (cmd == "reeb") {
            rep["results"] = run_reeb(ctx);
        } else if (cmd == "certify") {
            rep["results"] = run_certify(ctx);
        } else if (cmd == "cylinder") {
            if (!spec.cylinder) throw InvalidSpec("spec has no cylinder block");
            rep["results"] = run_cylinder(ctx);
        } else if (cmd == "seed-to-pair") {
            if (!spec.seed) throw InvalidSpec("spec has no seed block");
            rep["results"] = run_seed_to_pair(ctx);
        } else {
            throw InvalidSpec("unknown command '" + cmd + "'");
        }
        rep["pass"] = ctx.pass;
        result.exit_code = ctx.pass ? 0 : 1;
    } catch (const InvalidSpec& e) {
        rep["error"] = e.what();
        result.exit_code = 2;
    } catch (const CheckFailure& e) {
        rep["error"] = e.what();
        rep["pass"] = false;
        result.exit_code = 1;
    } catch (const DomainError& e) {
        rep["error"] = std::string("evaluation domain error: ") + e.what();
        rep["pass"] = false;
        result.exit_code = 1;
    }

    if (cfg.with_timing) rep["timing"] = ctx.timing;

    fs::create_directories(cfg.out_dir);
    const fs::path path = fs::path(cfg.out_dir) / (spec.name + "_" + cfg.command + ".json");
    std::ofstream out(path);
    out << rep.dump(2) << "\n";
    if (cfg.print_json) std::cout << rep.dump(2) << std::endl;
    return result;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"numerical laboratory for contact pairs on 3-manifold charts"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

    std::string command, spec_path, out_dir = ".";
    int grid = 0;
    double tol = 0.0, horizon = 0.0;
    bool emit_csv = false, print_json = false;

    app.add_option("command", command,
                   "analyze | sigma | frame | converge | liouville | skeleton | reeb | "
                   "certify | cylinder | seed-to-pair")
        ->required();
    app.add_option("spec", spec_path, "pair-spec JSON file")->required();
    app.add_option("--grid", grid, "sample cells per axis (overrides the spec)");
    app.add_option("--tol", tol, "bounded-value tolerance override");
    app.add_option("--horizon", horizon, "trajectory horizon override");
    app.add_option("--out", out_dir, "output directory for reports and CSV dumps");
    app.add_flag("--json", print_json, "print the JSON report to stdout");
    app.add_flag("--csv", emit_csv, "write CSV grid dumps next to the report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    RunConfig cfg;
    cfg.command = command;
    if (grid > 0) cfg.grid_override = grid;
    if (tol > 0) cfg.tol_override = tol;
    if (horizon > 0) cfg.horizon_override = horizon;
    cfg.out_dir = out_dir;
    cfg.emit_csv = emit_csv;
    cfg.print_json = print_json;
    if (std::getenv("BCT_SERIAL")) cfg.policy = ExecPolicy::Serial;

    try {
        const PairSpec spec = load_pair_spec(spec_path);
        const RunResult res = run_command(spec, cfg);
        if (res.exit_code == 0) {
            std::cout << spec.name << " " << command << ": PASS" << std::endl;
        } else {
            std::cout << spec.name << " " << command << ": FAIL (see report)" << std::endl;
        }
        return res.exit_code;
    } catch (const InvalidSpec& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const SyntaxError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const UnknownIdentifier& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}

}  // namespace bct
