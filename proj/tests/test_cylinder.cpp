#include <doctest.h>

#include <cmath>

#include "bct/cylinder.hpp"

using namespace bct;

namespace {

CylinderField constant_field(double c) {
    return CylinderField{[c](double, double) { return c; }, std::abs(c), 0.0};
}

CylinderField sine_field(double amp = 1.0) {
    return CylinderField{[amp](double x, double) { return -amp * std::sin(2 * M_PI * x); }, amp,
                         amp * 2 * M_PI};
}

// classical fixed-step RK4, the step-halving oracle
double rk4_reference(const CylinderField& F, double x0, double h) {
    double y = x0, t = 0;
    const int n = static_cast<int>(std::round(1.0 / h));
    for (int i = 0; i < n; ++i) {
        const double k1 = F(y, t);
        const double k2 = F(y + h / 2 * k1, t + h / 2);
        const double k3 = F(y + h / 2 * k2, t + h / 2);
        const double k4 = F(y + h * k3, t + h);
        y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        t += h;
    }
    return y;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

}  // namespace

TEST_CASE("return maps") {
    SUBCASE("zero field is the identity") {
        const ReturnMap rm = return_map(constant_field(0.0), linspace(-1, 1, 11));
        for (std::size_t i = 0; i < rm.x.size(); ++i) CHECK(std::abs(rm.displacement[i]) < 1e-12);
    }
    SUBCASE("constant field is a translation") {
        const ReturnMap rm = return_map(constant_field(0.4), linspace(-1, 1, 11));
        for (std::size_t i = 0; i < rm.x.size(); ++i)
            CHECK(rm.value[i] == doctest::Approx(rm.x[i] + 0.4).epsilon(1e-12));
    }
    SUBCASE("sine field matches the step-halving oracle") {
        const CylinderField F = sine_field();
        for (double x0 : {-0.7, -0.2, 0.13, 0.48}) {
            const double fine = rk4_reference(F, x0, 5e-4);
            const double finer = rk4_reference(F, x0, 2.5e-4);
            CHECK(std::abs(fine - finer) < 1e-10);  // oracle is converged
            CHECK(std::abs(advance_time_one(F, x0, 0.0, 1e-10) - fine) < 1e-8);
        }
    }
    SUBCASE("Lipschitz fields preserve order") {
        const ReturnMap rm = return_map(sine_field(), linspace(-1, 1, 101));
        CHECK(rm.strictly_increasing());
    }
}

TEST_CASE("closed orbits") {
    SUBCASE("sine roots sit at the half-integers") {
        const auto loops = closed_orbits(sine_field(), -1.0, 1.0, 257, 1e-10);
        REQUIRE(loops.size() == 5);
        const double expect[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
        for (int i = 0; i < 5; ++i) {
            CHECK(std::abs(loops[i].x0 - expect[i]) < 1e-8);
            CHECK(loops[i].residual < 1e-8);
        }
    }
    SUBCASE("a drifting field has none") {
        CHECK(closed_orbits(constant_field(0.2), -1.0, 1.0, 65).empty());
    }
    SUBCASE("the zero field returns the whole scan") {
        const auto loops = closed_orbits(constant_field(0.0), -1.0, 1.0, 33);
        CHECK(loops.size() == 33);
        for (const auto& l : loops) CHECK(l.residual < 1e-12);
    }
}

TEST_CASE("kneser intervals") {
    SUBCASE("Lipschitz fields collapse to the return value") {
        const CylinderField F = sine_field();
        const KneserInterval k = kneser_interval(F, 0.23, 14);
        const double p = advance_time_one(F, 0.23, 0.0, 1e-10);
        CHECK(k.m_minus <= p + 1e-12);
        CHECK(k.m_plus >= p - 1e-12);
        CHECK(k.m_plus - k.m_minus < 2e-3);
    }
    SUBCASE("Euler polygons stay inside the enclosure") {
        const CylinderField F = sine_field();
        const KneserInterval k = kneser_interval(F, 0.23, 14);
        for (double h : {1e-2, 1e-3, 1e-4}) {
            double y = 0.23;
            for (double t = 0; t < 1.0 - h / 2; t += h) y += h * F(y, t);
            CHECK(y >= k.m_minus - 5e-3);
            CHECK(y <= k.m_plus + 5e-3);
        }
    }
    SUBCASE("the non-Lipschitz classic has a genuine interval") {
        // x' = 3 |x|^{2/3} from 0: minimal solution 0, maximal t^3; the
        // tilted endpoints converge like sqrt(tilt), so the ladder runs deep
        CylinderField F{[](double x, double) {
                            return 3.0 * std::pow(std::min(std::abs(x), 1.0), 2.0 / 3.0);
                        },
                        3.0, -1.0};
        // n = 23 is the deepest ladder whose minus side still resolves the
        // attracting equilibrium (delta/3)^{3/2} above the integrator noise
        const KneserInterval k = kneser_interval(F, 0.0, 23, 1e-3, 1e-12);
        // dense-shooting oracle: the lift-off branch from +eta, eta -> 0
        const double oracle_max = advance_time_one(F, 1e-12, 0.0, 1e-12);
        CHECK(std::abs(k.m_plus - oracle_max) < 1e-3);
        CHECK(std::abs(k.m_minus) < 1e-3);  // minimal solution stays at 0
        CHECK(k.m_plus - k.m_minus > 0.9);
    }
}

TEST_CASE("closed transversals") {
    SUBCASE("constant drift: a constant loop with the full margin") {
        const auto t = closed_transversal(constant_field(0.3), -1.0, 1.0);
        REQUIRE(t.has_value());
        CHECK(t->constant);
        CHECK(std::abs(t->margin - 0.3) < 1e-9);
    }
    SUBCASE("sine band (0, 1/2)") {
        const auto t = closed_transversal(sine_field(), 0.0, 0.5);
        REQUIRE(t.has_value());
        CHECK(t->margin > 0.0);
        // verify independently on the returned knots
        const CylinderField F = sine_field();
        double worst = 1e300;
        for (std::size_t i = 1; i < t->knots.size(); ++i) {
            const auto& [t0, h0] = t->knots[i - 1];
            const auto& [t1, h1] = t->knots[i];
            if (t1 == t0) continue;
            const double slope = (h1 - h0) / (t1 - t0);
            const double mid_t = 0.5 * (t0 + t1), mid_h = 0.5 * (h0 + h1);
            worst = std::min(worst, t->sign * (slope - F(mid_h, mid_t)));
        }
        CHECK(worst > -1e-6);
    }
    SUBCASE("no transversal without drift") {
        CHECK(!closed_transversal(constant_field(0.0), -1.0, 1.0).has_value());
    }
    SUBCASE("time-dependent drift uses the tilted-curve construction") {
        // F changes sign in t for every x, so no constant loop exists
        CylinderField F{[](double, double t) { return 0.3 - 0.5 * std::sin(2 * M_PI * t); },
                        0.8, 0.0};
        const auto t = closed_transversal(F, -1.0, 1.0);
        REQUIRE(t.has_value());
        CHECK(!t->constant);
        CHECK(t->margin == doctest::Approx(0.25).epsilon(1e-6));
        CHECK(t->sign == -1);
        CHECK(std::abs(t->knots.front().second - t->knots.back().second) < 1e-9);
    }
}

TEST_CASE("circle foliation approximation") {
    SUBCASE("a band of closed orbits is already foliated") {
        const CircleFoliationResult r =
            circle_foliation_approx(constant_field(0.0), -0.5, 0.5, 64, 16);
        CHECK(r.sup_displacement < 1e-12);
        CHECK(r.c0_distance < 1e-9);
        CHECK(r.identity_residual < 1e-9);
    }
    SUBCASE("small sine band straightens to circles") {
        const CircleFoliationResult r =
            circle_foliation_approx(sine_field(0.05), -0.5, 0.5);
        CHECK(r.identity_residual < 1e-6);
        CHECK(r.c0_distance <= 0.06);
        CHECK(r.sup_displacement <= 0.05);
    }
    SUBCASE("bands must end on fixed points") {
        CHECK_THROWS_AS(circle_foliation_approx(sine_field(0.05), -0.3, 0.2), CheckFailure);
    }
}
