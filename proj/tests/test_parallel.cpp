#include <doctest.h>

#include "fixtures.hpp"

using namespace bct;

TEST_CASE("parallel kernels reproduce the serial reference bitwise") {
    const ContactPair pair = fixtures::saddle_slab();
    const Grid3 grid(pair.chart, 6);
    const BalancedPair bp = balance(pair, grid, ExecPolicy::Serial);
    const PairScalars sc = pair_scalars(bp);

    SUBCASE("grid sampling") {
        auto f = [&](const Vec3& p) { return bp.X(p).norm(); };
        const GridScalar serial = GridScalar::sample(grid, f, ExecPolicy::Serial);
        const GridScalar parallel = GridScalar::sample(grid, f, ExecPolicy::Parallel);
        CHECK(serial.values() == parallel.values());
    }
    SUBCASE("lie identity residuals") {
        const LieIdentityReport a = check_lie_identities(bp, sc, grid, 1e-9, ExecPolicy::Serial);
        const LieIdentityReport b = check_lie_identities(bp, sc, grid, 1e-9, ExecPolicy::Parallel);
        CHECK(a.sup_minus == b.sup_minus);
        CHECK(a.sup_plus == b.sup_plus);
    }
    SUBCASE("sigma bounded solves") {
        BoundedOdeConfig cfg;
        cfg.compute_residuals = false;
        const SigmaFields a = sigma_fields(bp, sc, grid, cfg, ExecPolicy::Serial);
        const SigmaFields b = sigma_fields(bp, sc, grid, cfg, ExecPolicy::Parallel);
        CHECK(a.sigma_u == b.sigma_u);
        CHECK(a.sigma_s == b.sigma_s);
        CHECK(a.width_u == b.width_u);
        CHECK(a.frozen_u == b.frozen_u);
    }
    SUBCASE("positivity scan") {
        const PositivityReport a = positivity_test(pair, grid, 1e-6, ExecPolicy::Serial);
        const PositivityReport b = positivity_test(pair, grid, 1e-6, ExecPolicy::Parallel);
        CHECK(a.delta_plus.size() == b.delta_plus.size());
        for (std::size_t i = 0; i < a.delta_plus.size(); ++i) {
            CHECK(a.delta_plus[i].grid_index == b.delta_plus[i].grid_index);
            CHECK(a.delta_plus[i].u_plus == b.delta_plus[i].u_plus);
        }
    }
}

TEST_CASE("thread count is positive") { CHECK(max_threads() >= 1); }
