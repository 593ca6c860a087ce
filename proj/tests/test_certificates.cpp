#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "bct/certificates.hpp"

using namespace bct;

namespace {
expr::Expr C(double v) { return expr::constant(v); }

// The invariant strong-tightness witness of the suspension pair:
// omega = 2r e^{rt} dt ^ du (closed, gluing-compatible).
TwoForm anosov_witness(const Chart& ch) {
    const auto& mt = ch.mapping_torus_data();
    const expr::Expr w = C(2 * mt.rate) * expr::exp(C(mt.rate) * expr::variable(2, "t"));
    return TwoForm{ch, {C(0) - C(mt.du.y()) * w, C(mt.du.x()) * w, C(0)}};
}

OneForm anosov_eta_u(const Chart& ch) {
    const auto& mt = ch.mapping_torus_data();
    const expr::Expr e = expr::exp(C(-mt.rate) * expr::variable(2, "t"));
    return one_form(ch, C(mt.ds.x()) * e, C(mt.ds.y()) * e, C(0));
}

}  // namespace

TEST_CASE("taut certificates") {
    const Chart ch = Chart::box({-1, -1, -1}, {1, 1, 1});
    const Grid3 grid(ch, 5);
    SUBCASE("horizontal planes are dominated by dx^dy") {
        const TwoForm omega{ch, {C(0), C(0), C(1)}};
        const OneForm eta = one_form_parse(ch, "0", "0", "1");
        const Certificate c = taut_certificate(omega, covector_of(eta), grid);
        CHECK(c.verdict);
        CHECK(c.worst_margin == doctest::Approx(1.0));
    }
    SUBCASE("non-closed witnesses are rejected") {
        const TwoForm omega{ch, {expr::parse("x", ch.variable_names()), C(0), C(0)}};
        const OneForm eta = one_form_parse(ch, "0", "0", "1");
        const Certificate c = taut_certificate(omega, covector_of(eta), grid);
        CHECK(!c.verdict);
        CHECK(c.failure == CertificateFailure::NotClosed);
    }
    SUBCASE("du^ds annihilates eta_u; the dt^du witness dominates it") {
        const ContactPair pair = fixtures::anosov_pair();
        const Grid3 g(pair.chart, 5);
        const OneForm eta = anosov_eta_u(pair.chart);
        const TwoForm duds{pair.chart, {C(0), C(0), C(1)}};  // du ^ ds = da ^ db
        const Certificate bad = taut_certificate(duds, covector_of(eta), g);
        CHECK(!bad.verdict);
        CHECK(bad.failure == CertificateFailure::NotDominating);
        const Certificate good = taut_certificate(anosov_witness(pair.chart), covector_of(eta), g);
        CHECK(good.verdict);
        CHECK(good.worst_margin > 0.0);
    }
}

TEST_CASE("strong tightness certificates") {
    SUBCASE("anosov pair") {
        const ContactPair pair = fixtures::anosov_pair();
        const Grid3 grid(pair.chart, 5);
        // alpha_- ^ alpha_+ is closed here but kills X, so it cannot dominate
        const TwoForm duds{pair.chart, {C(0), C(0), C(2)}};
        const Certificate bad = strong_tightness_certificate(pair, duds, grid);
        CHECK(!bad.verdict);
        CHECK(bad.failure == CertificateFailure::NotDominating);

        const Certificate good =
            strong_tightness_certificate(pair, anosov_witness(pair.chart), grid);
        CHECK(good.verdict);
        CHECK(good.worst_margin > 0.0);
    }
    SUBCASE("saddle slab with dx^dy passes the grid oracle") {
        const ContactPair pair = fixtures::saddle_slab();
        const Grid3 grid(pair.chart, 6);
        const TwoForm omega{pair.chart, {C(0), C(0), C(1)}};
        const Certificate c = strong_tightness_certificate(pair, omega, grid);
        CHECK(c.verdict);
        // margin floors at 1/sqrt(2) when |y| = 1
        CHECK(c.worst_margin > 0.5);
    }
    SUBCASE("a vanishing witness fails") {
        const ContactPair pair = fixtures::saddle_slab();
        const Grid3 grid(pair.chart, 4);
        const TwoForm zero{pair.chart, {C(0), C(0), C(0)}};
        const Certificate c = strong_tightness_certificate(pair, zero, grid);
        CHECK(!c.verdict);
        CHECK(c.failure == CertificateFailure::NotDominating);
    }
}

TEST_CASE("hypertaut certificates") {
    const ContactPair pair = fixtures::anosov_pair();
    const Grid3 grid(pair.chart, 5);
    const auto& mt = pair.chart.mapping_torus_data();
    const OneForm eta = anosov_eta_u(pair.chart);

    // beta = e^{rt} du has d beta = r e^{rt} dt ^ du, positive on eta_u
    const expr::Expr ert = expr::exp(C(mt.rate) * expr::variable(2, "t"));
    const OneForm beta = one_form(pair.chart, C(mt.du.x()) * ert, C(mt.du.y()) * ert, C(0));
    const Certificate good = hypertaut_certificate(beta, covector_of(eta), grid);
    CHECK(good.verdict);
    CHECK(good.worst_margin > 0.0);

    // closed beta cannot dominate anything
    const OneForm closed = one_form(pair.chart, C(mt.du.x()), C(mt.du.y()), C(0));
    const Certificate bad = hypertaut_certificate(closed, covector_of(eta), grid);
    CHECK(!bad.verdict);
    CHECK(bad.failure == CertificateFailure::NotDominating);

    // Reeb-component foliation: the verdict is whatever the grid says
    const FoliationSeed seed = fixtures::reeb_seed();
    const Grid3 g2(seed.chart, 6);
    const Certificate rc = hypertaut_certificate(seed.beta, covector_of(seed.alpha), g2);
    CHECK(rc.kind == CertificateKind::Hypertaut);  // recorded, no claim
}

TEST_CASE("volume preserving transversals") {
    const ContactPair pair = fixtures::anosov_pair();
    const Grid3 grid(pair.chart, 5);
    const auto& mt = pair.chart.mapping_torus_data();
    const auto defining = std::vector<CovectorField>{covector_of(pair.alpha_minus),
                                                     covector_of(pair.alpha_plus)};

    SUBCASE("the flow direction is tangent, not transverse") {
        const VectorField dt = vector_field(pair.chart, C(0), C(0), C(1));
        const Certificate c = volume_preserving_transversal(dt, defining, grid);
        CHECK(!c.verdict);
        CHECK(c.failure == CertificateFailure::NotTransverse);
    }
    SUBCASE("the unstable dual direction passes") {
        const expr::Expr e = expr::exp(C(-mt.rate) * expr::variable(2, "t"));
        const VectorField ups =
            vector_field(pair.chart, C(mt.eu.x()) * e, C(mt.eu.y()) * e, C(0));
        const Certificate c = volume_preserving_transversal(ups, defining, grid);
        CHECK(c.verdict);
        CHECK(c.worst_margin == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("compressible fields are rejected") {
        const Chart ch = Chart::box({-1, -1, -1}, {1, 1, 1});
        const Grid3 g(ch, 4);
        const VectorField v =
            vector_field(ch, C(0), expr::parse("y", ch.variable_names()), C(0));
        const Certificate c = volume_preserving_transversal(
            v, {covector_of(one_form_parse(ch, "0", "0", "1"))}, g);
        CHECK(!c.verdict);
        CHECK(c.failure == CertificateFailure::NotDivergenceFree);
    }
}

TEST_CASE("verdicts are monotone under positive scaling of the witness") {
    const ContactPair pair = fixtures::anosov_pair();
    const Grid3 grid(pair.chart, 4);
    const TwoForm omega = anosov_witness(pair.chart);
    for (double c : {0.5, 3.0}) {
        TwoForm scaled{pair.chart,
                       {C(c) * omega.c[0], C(c) * omega.c[1], C(c) * omega.c[2]}};
        const Certificate cert = strong_tightness_certificate(pair, scaled, grid);
        CHECK(cert.verdict);
    }
}

TEST_CASE("the strong-tight witness also certifies eta_u taut") {
    const ContactPair pair = fixtures::anosov_pair();
    const Grid3 grid(pair.chart, 5);
    const TwoForm omega = anosov_witness(pair.chart);
    const Certificate strong = strong_tightness_certificate(pair, omega, grid);
    const Certificate taut = taut_certificate(omega, covector_of(anosov_eta_u(pair.chart)), grid);
    CHECK(strong.verdict);
    CHECK(taut.verdict);
}
