#include "bct/fields.hpp"

#include <cmath>

#include "bct/errors.hpp"

namespace bct {

using expr::constant;

namespace {

std::array<double, 3> as_array(const Vec3& p) { return {p.x(), p.y(), p.z()}; }

Vec3 eval3(const std::array<Expr, 3>& c, const Vec3& p) {
    const auto q = as_array(p);
    return Vec3(c[0].evaluate(q), c[1].evaluate(q), c[2].evaluate(q));
}

}  // namespace

Vec3 OneForm::covector(const Vec3& p) const { return eval3(c, p); }
Vec3 TwoForm::coefficients(const Vec3& p) const { return eval3(c, p); }
double ThreeForm::coefficient(const Vec3& p) const { return c.evaluate(as_array(p)); }
Vec3 VectorField::operator()(const Vec3& p) const { return eval3(c, p); }

Mat3 VectorField::jacobian(const Vec3& p) const {
    Mat3 J;
    const auto q = as_array(p);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) J(i, j) = c[i].differentiate(j).evaluate(q);
    return J;
}

Expr VectorField::divergence_expr() const {
    return c[0].differentiate(0) + c[1].differentiate(1) + c[2].differentiate(2);
}

bool VectorField::is_zero() const {
    for (const auto& e : c) {
        double v;
        if (!e.is_constant(&v) || v != 0.0) return false;
    }
    return true;
}

TwoForm wedge(const OneForm& a, const OneForm& b) {
    TwoForm w{a.chart, {}};
    // (a ^ b) = (a1 b2 - a2 b1) dy^dz + (a2 b0 - a0 b2) dz^dx + (a0 b1 - a1 b0) dx^dy
    w.c[0] = a.c[1] * b.c[2] - a.c[2] * b.c[1];
    w.c[1] = a.c[2] * b.c[0] - a.c[0] * b.c[2];
    w.c[2] = a.c[0] * b.c[1] - a.c[1] * b.c[0];
    return w;
}

ThreeForm wedge(const OneForm& a, const TwoForm& b) {
    return ThreeForm{a.chart, a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2]};
}

ThreeForm wedge(const TwoForm& a, const OneForm& b) {
    return ThreeForm{a.chart, a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2]};
}

ThreeForm wedge(const TwoForm& a, const TwoForm& b) {
    (void)a;
    (void)b;
    throw DimensionError("wedge degree 2 + 2 exceeds the chart dimension 3");
}

TwoForm exterior_derivative(const OneForm& a) {
    TwoForm d{a.chart, {}};
    d.c[0] = a.c[2].differentiate(1) - a.c[1].differentiate(2);
    d.c[1] = a.c[0].differentiate(2) - a.c[2].differentiate(0);
    d.c[2] = a.c[1].differentiate(0) - a.c[0].differentiate(1);
    return d;
}

ThreeForm exterior_derivative(const TwoForm& a) {
    return ThreeForm{a.chart,
                     a.c[0].differentiate(0) + a.c[1].differentiate(1) + a.c[2].differentiate(2)};
}

OneForm interior_product(const VectorField& v, const TwoForm& a) {
    OneForm r{a.chart, {}};
    // i_v a = a-coefficients x v (cross product), as a covector
    r.c[0] = a.c[1] * v.c[2] - a.c[2] * v.c[1];
    r.c[1] = a.c[2] * v.c[0] - a.c[0] * v.c[2];
    r.c[2] = a.c[0] * v.c[1] - a.c[1] * v.c[0];
    return r;
}

TwoForm interior_product(const VectorField& v, const ThreeForm& a) {
    TwoForm r{a.chart, {}};
    r.c[0] = a.c * v.c[0];
    r.c[1] = a.c * v.c[1];
    r.c[2] = a.c * v.c[2];
    return r;
}

ScalarField interior_product(const VectorField& v, const OneForm& a) {
    return ScalarField{a.chart, a.c[0] * v.c[0] + a.c[1] * v.c[1] + a.c[2] * v.c[2]};
}

OneForm lie_derivative(const VectorField& v, const OneForm& a) {
    const TwoForm da = exterior_derivative(a);
    const OneForm ida = interior_product(v, da);
    const Expr av = interior_product(v, a).f;
    OneForm r{a.chart, {}};
    for (int i = 0; i < 3; ++i) r.c[i] = ida.c[i] + av.differentiate(i);
    return r;
}

ThreeForm frobenius_residual(const OneForm& a) { return wedge(a, exterior_derivative(a)); }

OneForm operator+(const OneForm& a, const OneForm& b) {
    return OneForm{a.chart, {a.c[0] + b.c[0], a.c[1] + b.c[1], a.c[2] + b.c[2]}};
}

OneForm operator-(const OneForm& a, const OneForm& b) {
    return OneForm{a.chart, {a.c[0] - b.c[0], a.c[1] - b.c[1], a.c[2] - b.c[2]}};
}

OneForm scale(const Expr& s, const OneForm& a) {
    return OneForm{a.chart, {s * a.c[0], s * a.c[1], s * a.c[2]}};
}

OneForm scale(double s, const OneForm& a) { return scale(constant(s), a); }

TwoForm scale(double s, const TwoForm& a) {
    const Expr k = constant(s);
    return TwoForm{a.chart, {k * a.c[0], k * a.c[1], k * a.c[2]}};
}

VectorField scale(const Expr& s, const VectorField& v) {
    return VectorField{v.chart, {s * v.c[0], s * v.c[1], s * v.c[2]}};
}

ScalarField directional_derivative(const VectorField& v, const ScalarField& f) {
    Expr r = v.c[0] * f.f.differentiate(0) + v.c[1] * f.f.differentiate(1) +
             v.c[2] * f.f.differentiate(2);
    return ScalarField{f.chart, r};
}

namespace {

// Compare a form at (v, 1) with its image at (Av, 0) through the gluing
// differential; forms that descend to the mapping torus agree exactly.
template <typename Apply>
double gluing_residual_impl(const Chart& chart, int n, Apply&& apply_on_frame) {
    if (!chart.is_mapping_torus()) return 0.0;
    const auto& mt = chart.mapping_torus_data();
    Mat3 G = Mat3::Identity();
    G.topLeftCorner<2, 2>() = mt.monodromy.cast<double>();
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec3 top(static_cast<double>(i) / n, static_cast<double>(j) / n, 1.0);
            const Vec3 bottom = chart.wrap(top).point;
            worst = std::max(worst, apply_on_frame(top, bottom, G));
        }
    return worst;
}

}  // namespace

double gluing_residual(const OneForm& a, int fiber_samples) {
    return gluing_residual_impl(
        a.chart, fiber_samples, [&](const Vec3& top, const Vec3& bottom, const Mat3& G) {
            double worst = 0.0;
            for (int k = 0; k < 3; ++k) {
                const Vec3 e = Vec3::Unit(k);
                worst = std::max(worst, std::abs(a.apply(top, e) - a.apply(bottom, G * e)));
            }
            return worst;
        });
}

double gluing_residual(const VectorField& v, int fiber_samples) {
    return gluing_residual_impl(v.chart, fiber_samples,
                                [&](const Vec3& top, const Vec3& bottom, const Mat3& G) {
                                    return (G * v(top) - v(bottom)).norm();
                                });
}

OneForm one_form(const Chart& chart, Expr cx, Expr cy, Expr cz) {
    return OneForm{chart, {std::move(cx), std::move(cy), std::move(cz)}};
}

OneForm one_form_parse(const Chart& chart, const std::string& cx, const std::string& cy,
                       const std::string& cz) {
    const auto vars = chart.variable_names();
    return OneForm{chart, {expr::parse(cx, vars), expr::parse(cy, vars), expr::parse(cz, vars)}};
}

VectorField vector_field(const Chart& chart, Expr cx, Expr cy, Expr cz) {
    return VectorField{chart, {std::move(cx), std::move(cy), std::move(cz)}};
}

ThreeForm three_form(const Chart& chart, Expr c) { return ThreeForm{chart, std::move(c)}; }

}  // namespace bct
