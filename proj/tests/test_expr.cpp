#include <doctest.h>

#include <cmath>
#include <random>

#include "bct/expr.hpp"

using namespace bct;
using expr::Expr;

namespace {

const std::vector<std::string> kXyz{"x", "y", "z"};

double eval(const Expr& e, double x, double y = 0, double z = 0) {
    const std::array<double, 3> p{x, y, z};
    return e.evaluate(p);
}

double eval_str(const std::string& s, double x, double y = 0, double z = 0) {
    return eval(expr::parse(s, kXyz), x, y, z);
}

// Random AST generator for the differentiation and round-trip properties.
Expr random_expr(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 7);
    std::uniform_real_distribution<double> c(-2.0, 2.0);
    std::uniform_int_distribution<int> var(0, 2);
    switch (kind(rng)) {
        case 0: return expr::constant(c(rng));
        case 1: {
            const int v = var(rng);
            return expr::variable(v, kXyz[v]);
        }
        case 2: return random_expr(rng, depth - 1) + random_expr(rng, depth - 1);
        case 3: return random_expr(rng, depth - 1) - random_expr(rng, depth - 1);
        case 4: return random_expr(rng, depth - 1) * random_expr(rng, depth - 1);
        case 5: return -random_expr(rng, depth - 1);
        case 6: {
            static const expr::Fun funs[] = {expr::Fun::Sin,  expr::Fun::Cos,
                                             expr::Fun::Sinh, expr::Fun::Tanh,
                                             expr::Fun::Exp,  expr::Fun::Asinh};
            std::uniform_int_distribution<int> f(0, 5);
            return expr::apply(funs[f(rng)], random_expr(rng, depth - 1));
        }
        default: {
            std::uniform_int_distribution<int> p(2, 3);
            return expr::pow(random_expr(rng, depth - 1),
                             expr::constant(static_cast<double>(p(rng))));
        }
    }
}

}  // namespace

TEST_CASE("parse and evaluate basics") {
    CHECK(eval_str("1 - x^2 - y^2", 0.0, 0.0, 0.7) == 1.0);
    CHECK(eval_str("1 - x^2 - y^2", 1.0, 0.0) == 0.0);
    CHECK(eval_str("sinh(2*0.5)", 0) == doctest::Approx(1.1752011936438014).epsilon(1e-14));
    // eigenvalue of [[2,1],[1,1]] recovered through exp(ln(.))
    CHECK(eval_str("exp(ln((3+sqrt(5))/2)*1)", 0) ==
          doctest::Approx(2.6180339887498949).epsilon(1e-15));
}

TEST_CASE("precedence and associativity") {
    CHECK(eval_str("2^3^2", 0) == 64.0);        // same precedence associates left
    CHECK(eval_str("-x^2", 2.0) == -4.0);       // ^ binds above unary minus
    CHECK(eval_str("6/3/2", 0) == 1.0);
    CHECK(eval_str("1-2-3", 0) == -4.0);
    CHECK(eval_str("2*-3", 0) == -6.0);
    CHECK(eval_str("x^-2", 2.0) == 0.25);
    CHECK(eval_str("1+2*3", 0) == 7.0);
}

TEST_CASE("errors carry byte offsets") {
    CHECK_THROWS_AS(expr::parse("y*dx", kXyz), UnknownIdentifier);
    try {
        expr::parse("y*dx", kXyz);
    } catch (const UnknownIdentifier& e) {
        CHECK(e.name == "dx");
        CHECK(e.offset == 2);
    }
    CHECK_THROWS_AS(expr::parse("2x", kXyz), SyntaxError);
    try {
        expr::parse("2x", kXyz);
    } catch (const SyntaxError& e) {
        CHECK(e.offset == 1);
    }
    CHECK_THROWS_AS(expr::parse("(1+2", kXyz), SyntaxError);
    CHECK_THROWS_AS(expr::parse("sin 3", kXyz), SyntaxError);
    CHECK_THROWS_AS(expr::parse("", kXyz), SyntaxError);
}

TEST_CASE("evaluation domain errors") {
    CHECK_THROWS_AS(eval_str("ln(-1)", 0), DomainError);
    CHECK_THROWS_AS(eval_str("ln(x)", 0.0), DomainError);
    CHECK_THROWS_AS(eval_str("1/x", 0.0), DomainError);
    CHECK_THROWS_AS(eval_str("sqrt(-x)", 1.0), DomainError);
    CHECK_THROWS_AS(eval_str("exp(x)", 1e9), DomainError);  // overflow is non-finite
}

TEST_CASE("symbolic differentiation on closed forms") {
    const Expr e = expr::parse("1 - x^2 - y^2", kXyz);
    const Expr dy = e.differentiate(1);
    for (double v : {-1.0, -0.3, 0.0, 0.6, 2.0})
        CHECK(eval(dy, 0.9, v) == doctest::Approx(-2.0 * v).epsilon(1e-15));

    const Expr ch = expr::parse("cosh(2*z)", kXyz);
    const Expr dz = ch.differentiate(2);
    for (double v : {-1.0, 0.2, 1.3})
        CHECK(eval(dz, 0, 0, v) == doctest::Approx(2.0 * std::sinh(2.0 * v)).epsilon(1e-14));
}

TEST_CASE("differentiation matches central differences on random expressions") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> pt(-0.8, 0.8);
    int checked = 0;
    for (int trial = 0; trial < 400 && checked < 120; ++trial) {
        const Expr e = random_expr(rng, 3);
        const std::array<double, 3> p{pt(rng), pt(rng), pt(rng)};
        const int var = trial % 3;
        try {
            const double h = 1e-5;
            std::array<double, 3> pp = p, pm = p;
            pp[var] += h;
            pm[var] -= h;
            const double fd = (e.evaluate(pp) - e.evaluate(pm)) / (2 * h);
            const double sym = e.differentiate(var).evaluate(p);
            if (std::abs(fd) > 1e6) continue;  // skip wildly stiff samples
            CHECK(std::abs(sym - fd) < 1e-6 * (1.0 + std::abs(sym)) + 1e-7);
            checked++;
        } catch (const DomainError&) {
            continue;
        }
    }
    CHECK(checked >= 100);
}

TEST_CASE("differentiation is linear and satisfies the product rule") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> pt(-0.7, 0.7);
    for (int trial = 0; trial < 40; ++trial) {
        const Expr a = random_expr(rng, 2), b = random_expr(rng, 2);
        const std::array<double, 3> p{pt(rng), pt(rng), pt(rng)};
        try {
            const double lin = (a + b).differentiate(0).evaluate(p);
            const double parts = a.differentiate(0).evaluate(p) + b.differentiate(0).evaluate(p);
            CHECK(lin == doctest::Approx(parts).epsilon(1e-12));
            const double prod = (a * b).differentiate(0).evaluate(p);
            const double leibniz = a.differentiate(0).evaluate(p) * b.evaluate(p) +
                                   a.evaluate(p) * b.differentiate(0).evaluate(p);
            CHECK(prod == doctest::Approx(leibniz).epsilon(1e-12));
        } catch (const DomainError&) {
            continue;
        }
    }
}

TEST_CASE("print/parse round trip evaluates identically") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pt(-0.9, 0.9);
    for (int trial = 0; trial < 30; ++trial) {
        const Expr e = random_expr(rng, 3);
        const Expr back = expr::parse(e.print(), kXyz);
        for (int k = 0; k < 100; ++k) {
            const std::array<double, 3> p{pt(rng), pt(rng), pt(rng)};
            try {
                const double v0 = e.evaluate(p);
                const double v1 = back.evaluate(p);
                CHECK(v0 == v1);  // bit-identical: printing preserves the tree
            } catch (const DomainError&) {
                continue;
            }
        }
    }
}
