#pragma once

#include <random>

#include "bct/contact_pair.hpp"
#include "bct/liouville.hpp"

namespace bct::fixtures {

inline ContactPair saddle_slab() {
    Chart chart = Chart::box({-1, -1, -1}, {1, 1, 1});
    return ContactPair{chart, one_form_parse(chart, "-y", "0", "-1"),
                       one_form_parse(chart, "-y", "0", "1")};
}

// alpha_pm = e^{rt} du +- e^{-rt} ds built from the chart's eigen-covectors.
inline ContactPair anosov_pair() {
    Eigen::Matrix2i A;
    A << 2, 1, 1, 1;
    Chart chart = Chart::mapping_torus(A);
    const auto& d = chart.mapping_torus_data();
    const Expr t = expr::variable(2, "t");
    const Expr ert = expr::exp(expr::constant(d.rate) * t);
    const Expr emrt = expr::exp(expr::constant(-d.rate) * t);
    auto C = [](double v) { return expr::constant(v); };
    OneForm plus = one_form(chart, C(d.du.x()) * ert + C(d.ds.x()) * emrt,
                            C(d.du.y()) * ert + C(d.ds.y()) * emrt, C(0));
    OneForm minus = one_form(chart, C(d.du.x()) * ert - C(d.ds.x()) * emrt,
                             C(d.du.y()) * ert - C(d.ds.y()) * emrt, C(0));
    return ContactPair{chart, minus, plus};
}

inline FoliationSeed reeb_seed() {
    Chart chart = Chart::box({-0.7, -0.7, 0.0}, {0.7, 0.7, 1.0});
    return FoliationSeed{chart, one_form_parse(chart, "x", "y", "1 - x^2 - y^2"),
                         one_form_parse(chart, "-y/2", "x/2", "0")};
}

// Base tight pair on T^3 plus a small random trigonometric perturbation of
// every coefficient; amplitude 0 reproduces the base pair exactly.
inline ContactPair random_torus_pair(unsigned seed, double amplitude = 0.02) {
    Chart chart = Chart::torus3({1, 1, 1});
    const auto vars = chart.variable_names();
    const Expr tau = expr::constant(2.0 * M_PI);
    const Expr x = expr::variable(0, "x"), y = expr::variable(1, "y"),
               z = expr::variable(2, "z");
    const Expr cz = expr::cos(tau * z), sz = expr::sin(tau * z);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_int_distribution<int> pick_var(0, 2);
    auto bump = [&]() {
        const Expr coords[3] = {x, y, z};
        Expr acc = expr::constant(amplitude * unif(rng));
        for (int k = 0; k < 2; ++k) {
            const Expr v = coords[pick_var(rng)];
            const Expr phase = expr::constant(unif(rng) * M_PI);
            acc = acc + expr::constant(amplitude * unif(rng)) * expr::sin(tau * v + phase);
        }
        return acc;
    };

    OneForm minus = one_form(chart, cz + bump(), sz + bump(), bump());
    OneForm plus = one_form(chart, cz + bump(), expr::constant(0.0) - sz + bump(), bump());
    return ContactPair{chart, minus, plus};
}

}  // namespace bct::fixtures
