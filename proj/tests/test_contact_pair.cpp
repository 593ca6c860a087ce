#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace bct;
using expr::Expr;

namespace {
Expr C(double v) { return expr::constant(v); }
}

TEST_CASE("balance recovers the canonical field of the slab pair") {
    const ContactPair pair = fixtures::saddle_slab();
    const Grid3 grid(pair.chart, 8);
    const BalancedPair bp = balance(pair, grid);

    double worst = 0.0;
    for (const Vec3& p : grid.points()) {
        worst = std::max(worst, (bp.X(p) - Vec3(0, 2 * p.y(), 0)).norm());
        CHECK(bp.dvol.coefficient(p) == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("balance is conformally invariant") {
    const ContactPair pair = fixtures::saddle_slab();
    const Grid3 grid(pair.chart, 6);
    const BalancedPair base = balance(pair, grid);

    ContactPair scaled = pair;
    scaled.alpha_minus = scale(4.0, pair.alpha_minus);
    const BalancedPair bp = balance(scaled, grid);
    for (const Vec3& p : grid.points()) {
        CHECK((bp.pair.alpha_minus.covector(p) - base.pair.alpha_minus.covector(p)).norm() <
              1e-12);
        CHECK((bp.X(p) - base.X(p)).norm() < 1e-12);
    }
}

TEST_CASE("balance rejects non-contact input") {
    const Chart ch = Chart::box({-1, -1, -1}, {1, 1, 1});
    ContactPair bad{ch, one_form_parse(ch, "-y", "0", "-1"), one_form_parse(ch, "0", "0", "1")};
    const Grid3 grid(ch, 4);
    CHECK_THROWS_AS(balance(bad, grid), NotContact);
}

TEST_CASE("pair scalars on the worked fixtures") {
    SUBCASE("saddle slab") {
        const ContactPair pair = fixtures::saddle_slab();
        const Grid3 grid(pair.chart, 8);
        const BalancedPair bp = balance(pair, grid);
        const PairScalars sc = pair_scalars(bp);
        for (const Vec3& p : grid.points()) {
            const std::array<double, 3> q{p.x(), p.y(), p.z()};
            CHECK(std::abs(sc.f0.f.evaluate(q) - 2.0) < 1e-12);
            CHECK(std::abs(sc.g0.f.evaluate(q)) < 1e-12);
            CHECK(std::abs(sc.g_minus.f.evaluate(q) - 1.0) < 1e-12);
            CHECK(std::abs(sc.g_plus.f.evaluate(q) + 1.0) < 1e-12);
        }
    }
    SUBCASE("anosov mapping torus") {
        const ContactPair pair = fixtures::anosov_pair();
        const Grid3 grid(pair.chart, 6);
        const BalancedPair bp = balance(pair, grid);
        const PairScalars sc = pair_scalars(bp);
        const auto& mt = pair.chart.mapping_torus_data();
        for (const Vec3& p : grid.points()) {
            const std::array<double, 3> q{p.x(), p.y(), p.z()};
            CHECK(std::abs(sc.f0.f.evaluate(q)) < 1e-12);
            CHECK(std::abs(sc.g0.f.evaluate(q)) < 1e-12);
            CHECK((bp.X(p) - Vec3(0, 0, 1.0 / mt.rate)).norm() < 1e-12);
        }
    }
}

TEST_CASE("Lie identities hold exactly and degrade linearly off balance") {
    const ContactPair pair = fixtures::anosov_pair();
    const Grid3 grid(pair.chart, 5);
    const BalancedPair bp = balance(pair, grid);
    const PairScalars sc = pair_scalars(bp);
    const LieIdentityReport rep = check_lie_identities(bp, sc, grid, 1e-9);
    CHECK(rep.pass);
    CHECK(rep.sup_minus < 1e-11);
    CHECK(rep.sup_plus < 1e-11);

    // stale scalars against a perturbed form: residual scales like the bump
    auto stale_residual = [&](double delta) {
        const Expr bump = expr::constant(delta) *
                          expr::cos(expr::constant(2 * M_PI) * expr::variable(2, "t"));
        const OneForm ap2 = bp.pair.alpha_plus + scale(bump, bp.pair.alpha_minus);
        const OneForm lp = lie_derivative(bp.X, ap2);
        const OneForm resid = lp - (bp.pair.alpha_minus - scale(sc.g_plus.f, ap2));
        double sup = 0;
        for (const Vec3& p : grid.points()) sup = std::max(sup, resid.covector(p).norm());
        return sup;
    };
    const double r1 = stale_residual(1e-2), r2 = stale_residual(5e-3);
    CHECK(r1 > 1e-4);
    CHECK(r1 / r2 == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("positivity scan classifies the coincidence locus") {
    SUBCASE("slab has a Delta_plus wall") {
        const ContactPair pair = fixtures::saddle_slab();
        const Grid3 grid(pair.chart, 8);  // 9 nodes per axis, includes y = 0
        const PositivityReport rep = positivity_test(pair, grid);
        CHECK(rep.verdict == PairVerdict::Positive);
        CHECK(rep.delta_minus.empty());
        CHECK(rep.delta_plus.size() == 81);
        for (const auto& d : rep.delta_plus) {
            CHECK(d.point.y() == 0.0);
            CHECK(d.u_plus == doctest::Approx(1.0));  // f0 = u + 1/u = 2
        }
    }
    SUBCASE("bicontact pair has empty Delta") {
        const ContactPair pair = fixtures::anosov_pair();
        const Grid3 grid(pair.chart, 6);
        const PositivityReport rep = positivity_test(pair, grid);
        CHECK(rep.verdict == PairVerdict::Positive);
        CHECK(rep.delta_plus.empty());
        CHECK(rep.delta_minus.empty());
    }
    SUBCASE("proportional twins flag the whole grid") {
        const Chart ch = Chart::box({-1, -1, -1}, {1, 1, 1});
        const OneForm ap = one_form_parse(ch, "-y", "0", "1");
        const Grid3 grid(ch, 4);
        // anti-parallel covectors are the Delta_plus pattern (the slab wall
        // at y = 0 looks exactly like this)
        ContactPair anti{ch, scale(-1.0, ap), ap};
        const PositivityReport rep_anti = positivity_test(anti, grid);
        CHECK(rep_anti.verdict == PairVerdict::Positive);
        CHECK(rep_anti.delta_plus.size() == grid.size());
        CHECK(rep_anti.delta_minus.empty());
        // parallel covectors flag Delta_minus and a Negative verdict
        ContactPair par{ch, ap, ap};
        const PositivityReport rep_par = positivity_test(par, grid);
        CHECK(rep_par.verdict == PairVerdict::Negative);
        CHECK(rep_par.delta_minus.size() == grid.size());
        CHECK(rep_par.delta_plus.empty());
    }
}

TEST_CASE("singular set of the slab is the degenerate wall") {
    const ContactPair pair = fixtures::saddle_slab();
    const Grid3 grid(pair.chart, 8);
    const BalancedPair bp = balance(pair, grid);
    const PairScalars sc = pair_scalars(bp);
    const SingularSetResult res = singular_set(bp, sc, grid);
    CHECK(!res.points.empty());
    for (const auto& s : res.points) {
        CHECK(std::abs(s.location.y()) < 1e-10);
        CHECK(s.rank == 1);
        CHECK(s.cls == SingularClass::Degenerate);
        CHECK(s.trace_residual < 1e-9);  // tr dX = f0 = 2
        CHECK(s.f0_value == doctest::Approx(2.0));
    }
}

TEST_CASE("singular set of the bicontact pair is empty") {
    const ContactPair pair = fixtures::anosov_pair();
    const Grid3 grid(pair.chart, 6);
    const BalancedPair bp = balance(pair, grid);
    const PairScalars sc = pair_scalars(bp);
    CHECK(singular_set(bp, sc, grid).points.empty());
}

namespace {

// Synthetic balanced-pair shell around a hand-made field: only X, the
// covector orientations, and f0 = tr dX enter the classifier.
BalancedPair synthetic_bp(const Chart& ch, VectorField X) {
    ContactPair pair{ch, one_form_parse(ch, "0", "0", "-1"), one_form_parse(ch, "0", "0", "1")};
    return BalancedPair{pair, three_form(ch, expr::constant(1.0)), std::move(X),
                        expr::constant(1.0)};
}

PairScalars synthetic_scalars(const Chart& ch, const VectorField& X) {
    return PairScalars{ScalarField{ch, X.divergence_expr()}, ScalarField{ch, expr::constant(0)},
                       ScalarField{ch, expr::constant(0)}, ScalarField{ch, expr::constant(0)}};
}

}  // namespace

TEST_CASE("isolated source block classifies as Source") {
    const Chart ch = Chart::box({-1, -1, -1}, {1, 1, 1});
    const auto vars = ch.variable_names();
    // zeros along the z-axis, expanding block diag(1, 2) in the normal plane
    VectorField X = vector_field(ch, expr::parse("x", vars), expr::parse("2*y", vars), C(0));
    const BalancedPair bp = synthetic_bp(ch, X);
    const PairScalars sc = synthetic_scalars(ch, bp.X);
    const Grid3 grid(ch, 8);
    const SingularSetResult res = singular_set(bp, sc, grid);
    CHECK(!res.points.empty());
    for (const auto& s : res.points) {
        CHECK(s.rank == 2);
        CHECK(s.normal_det == doctest::Approx(2.0));
        CHECK(s.cls == SingularClass::Source);  // delta_sign = +1 from the covectors
    }
}

TEST_CASE("connection graph finds a source-saddle heteroclinic (A1)") {
    const Chart ch = Chart::box({-0.5, -0.5, -0.5}, {1.5, 0.5, 0.5});
    const auto vars = ch.variable_names();
    VectorField X = vector_field(ch, expr::parse("x*(1-x)", vars), expr::parse("y", vars),
                                 expr::parse("z*(1-2*x)", vars));
    const BalancedPair bp = synthetic_bp(ch, X);
    const PairScalars sc = synthetic_scalars(ch, bp.X);
    const Grid3 grid(ch, 10);
    const SingularSetResult sing = singular_set(bp, sc, grid);
    REQUIRE(sing.points.size() == 2);

    const ConnectionGraph graph = connection_graph(bp, sing.points);
    REQUIRE(!graph.records.empty());
    bool found_a1 = false;
    for (const auto& r : graph.records) {
        if (r.type == ConnectionType::A1) {
            found_a1 = true;
            CHECK(sing.points[r.from].cls == SingularClass::Source);
            CHECK(sing.points[r.to].cls == SingularClass::Saddle);
        }
    }
    CHECK(found_a1);
    CHECK(!graph.broken_triple_saddle);
}

TEST_CASE("saddle chains raise the broken-triple flag") {
    const Chart ch = Chart::box({-0.5, -0.5, -0.5}, {2.5, 0.5, 0.5});
    const auto vars = ch.variable_names();
    // saddles at x = 0, 1, 2 with connections 1 -> 0 and 1 -> 2
    VectorField X = vector_field(ch, expr::parse("-x*(x-1)*(x-2)", vars),
                                 expr::parse("y", vars), expr::parse("-z", vars));
    const BalancedPair bp = synthetic_bp(ch, X);
    const PairScalars sc = synthetic_scalars(ch, bp.X);
    const Grid3 grid(ch, 12);
    const SingularSetResult sing = singular_set(bp, sc, grid);
    REQUIRE(sing.points.size() == 3);
    for (const auto& s : sing.points) CHECK(s.cls == SingularClass::Saddle);

    const ConnectionGraph graph = connection_graph(bp, sing.points);
    CHECK(graph.broken_triple_saddle);
    // the shared-endpoint connections are not admissible as (A4)
    for (const auto& r : graph.records)
        if (sing.points[r.from].cls == SingularClass::Saddle &&
            sing.points[r.to].cls == SingularClass::Saddle)
            CHECK(r.type == ConnectionType::Inadmissible);
}

TEST_CASE("f0 is the dvol-divergence of X") {
    const ContactPair pair = fixtures::saddle_slab();
    const Grid3 grid(pair.chart, 6);
    const BalancedPair bp = balance(pair, grid);
    const PairScalars sc = pair_scalars(bp);
    for (const Vec3& p : {Vec3(0.2, 0.3, 0.1), Vec3(-0.4, 0.2, 0.5), Vec3(0.1, -0.5, -0.3)})
        CHECK(f0_divergence_residual(bp, sc, p) < 1e-4);
}
