// Times the data-parallel kernels against their serial reference runs and
// checks that both produce identical output.
#include <chrono>
#include <cstdio>
#include <cstring>

#include "bct/bounded_ode.hpp"
#include "bct/contact_pair.hpp"
#include "bct/pairspec.hpp"

using namespace bct;

namespace {

double wall() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

ContactPair saddle_slab() {
    Chart chart = Chart::box({-1, -1, -1}, {1, 1, 1});
    return ContactPair{chart, one_form_parse(chart, "-y", "0", "-1"),
                       one_form_parse(chart, "-y", "0", "1")};
}

template <typename F>
double timed(F&& fn) {
    const double t0 = wall();
    fn();
    return wall() - t0;
}

}  // namespace

int main(int argc, char** argv) {
    int n = 16;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::strcmp(argv[i], "--grid") == 0) n = std::atoi(argv[i + 1]);

    const ContactPair pair = saddle_slab();
    const Grid3 grid(pair.chart, n);
    std::printf("grid %d^3 (%zu nodes), %d thread(s)\n", n + 1, grid.size(), max_threads());

    BalancedPair bp = balance(pair, grid, ExecPolicy::Serial);
    PairScalars sc = pair_scalars(bp);

    std::printf("%-28s %10s %10s %8s %s\n", "kernel", "serial[s]", "parallel", "speedup",
                "identical");

    {
        std::vector<double> serial_vals, parallel_vals;
        const double ts = timed([&] {
            GridScalar g = GridScalar::sample(
                grid, [&](const Vec3& p) { return bp.X(p).norm(); }, ExecPolicy::Serial);
            serial_vals = g.values();
        });
        const double tp = timed([&] {
            GridScalar g = GridScalar::sample(
                grid, [&](const Vec3& p) { return bp.X(p).norm(); }, ExecPolicy::Parallel);
            parallel_vals = g.values();
        });
        std::printf("%-28s %10.4f %10.4f %8.2fx %s\n", "grid scalar sampling", ts, tp, ts / tp,
                    serial_vals == parallel_vals ? "yes" : "NO");
    }
    {
        double sup_serial = 0, sup_parallel = 0;
        const double ts = timed([&] {
            sup_serial = check_lie_identities(bp, sc, grid, 1e-9, ExecPolicy::Serial).sup_plus;
        });
        const double tp = timed([&] {
            sup_parallel =
                check_lie_identities(bp, sc, grid, 1e-9, ExecPolicy::Parallel).sup_plus;
        });
        std::printf("%-28s %10.4f %10.4f %8.2fx %s\n", "lie identity residuals", ts, tp, ts / tp,
                    sup_serial == sup_parallel ? "yes" : "NO");
    }
    {
        BoundedOdeConfig cfg;
        cfg.compute_residuals = false;
        SigmaFields s1, s2;
        const double ts =
            timed([&] { s1 = sigma_fields(bp, sc, grid, cfg, ExecPolicy::Serial); });
        const double tp =
            timed([&] { s2 = sigma_fields(bp, sc, grid, cfg, ExecPolicy::Parallel); });
        const bool same = s1.sigma_u == s2.sigma_u && s1.sigma_s == s2.sigma_s;
        std::printf("%-28s %10.4f %10.4f %8.2fx %s\n", "sigma bounded solves", ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }
    return 0;
}
