#pragma once

#include <array>
#include <string>

#include "bct/chart.hpp"
#include "bct/expr.hpp"
#include "bct/linalg.hpp"

namespace bct {

using expr::Expr;

// Scalar function on a chart with symbolic coefficients: exact partials.
struct ScalarField {
    Chart chart;
    Expr f;

    double operator()(const Vec3& p) const {
        const std::array<double, 3> q{p.x(), p.y(), p.z()};
        return f.evaluate(q);
    }
    ScalarField partial(int var) const { return {chart, f.differentiate(var)}; }
};

// One-form c0 dx + c1 dy + c2 dz (or da, db, dt on mapping tori).
struct OneForm {
    Chart chart;
    std::array<Expr, 3> c;

    Vec3 covector(const Vec3& p) const;
    double apply(const Vec3& p, const Vec3& v) const { return covector(p).dot(v); }
};

// Two-form c0 dy^dz + c1 dz^dx + c2 dx^dy.
struct TwoForm {
    Chart chart;
    std::array<Expr, 3> c;

    Vec3 coefficients(const Vec3& p) const;
    double apply(const Vec3& p, const Vec3& v, const Vec3& w) const {
        return coefficients(p).dot(v.cross(w));
    }
};

// Three-form c dx^dy^dz.
struct ThreeForm {
    Chart chart;
    Expr c;

    double coefficient(const Vec3& p) const;
};

struct VectorField {
    Chart chart;
    std::array<Expr, 3> c;

    Vec3 operator()(const Vec3& p) const;
    Mat3 jacobian(const Vec3& p) const;     // exact, via symbolic partials
    Expr divergence_expr() const;           // for the Euclidean chart volume
    bool is_zero() const;
};

// Exterior algebra, all exact on the symbolic coefficients.
TwoForm wedge(const OneForm& a, const OneForm& b);
ThreeForm wedge(const OneForm& a, const TwoForm& b);
ThreeForm wedge(const TwoForm& a, const OneForm& b);
// Degrees beyond the chart dimension throw DimensionError.
ThreeForm wedge(const TwoForm& a, const TwoForm& b);

TwoForm exterior_derivative(const OneForm& a);
ThreeForm exterior_derivative(const TwoForm& a);

OneForm interior_product(const VectorField& v, const TwoForm& a);
TwoForm interior_product(const VectorField& v, const ThreeForm& a);
ScalarField interior_product(const VectorField& v, const OneForm& a);

// Cartan formula i_v da + d(a(v)).
OneForm lie_derivative(const VectorField& v, const OneForm& a);

// a ^ da; zero certifies an integrable kernel, a uniform sign a contact form.
ThreeForm frobenius_residual(const OneForm& a);

OneForm operator+(const OneForm& a, const OneForm& b);
OneForm operator-(const OneForm& a, const OneForm& b);
OneForm scale(const Expr& s, const OneForm& a);
OneForm scale(double s, const OneForm& a);
TwoForm scale(double s, const TwoForm& a);
VectorField scale(const Expr& s, const VectorField& v);

// Directional derivative v . f as a symbolic scalar.
ScalarField directional_derivative(const VectorField& v, const ScalarField& f);

// Max over tangent frame of |alpha((v,1^-)) - alpha(A v,(0^+)) after gluing|
// on mapping-torus charts; 0 on other charts. `fiber_samples` per axis.
double gluing_residual(const OneForm& a, int fiber_samples = 7);
double gluing_residual(const VectorField& v, int fiber_samples = 7);

// Convenience constructors.
OneForm one_form(const Chart& chart, Expr cx, Expr cy, Expr cz);
OneForm one_form_parse(const Chart& chart, const std::string& cx, const std::string& cy,
                       const std::string& cz);
VectorField vector_field(const Chart& chart, Expr cx, Expr cy, Expr cz);
ThreeForm three_form(const Chart& chart, Expr c);

}  // namespace bct
