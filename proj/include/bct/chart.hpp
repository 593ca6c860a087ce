#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bct/linalg.hpp"

namespace bct {

// 3-torus R^3 / (p0 Z x p1 Z x p2 Z), coordinates (x, y, z).
struct Torus3 {
    std::array<double, 3> periods{1.0, 1.0, 1.0};
};

// Mapping torus of a hyperbolic A in SL(2,Z): T^2 x R / ((v,t) ~ (Av, t-1)),
// coordinates (a, b, t) with the fiber T^2 = R^2/Z^2 and t in [0,1).
// Eigen-covectors du, ds (du.A = mu du, ds.A = mu^{-1} ds) are normalized so
// that du ^ ds = da ^ db.
struct MappingTorus {
    Eigen::Matrix2i monodromy;
    double mu = 0.0;          // expanding eigenvalue, > 1
    double rate = 0.0;        // ln(mu)
    Vec2 du = Vec2::Zero();   // row eigen-covector for mu
    Vec2 ds = Vec2::Zero();   // row eigen-covector for 1/mu
    Vec2 eu = Vec2::Zero();   // fiber vector with du(eu)=1, ds(eu)=0
    Vec2 es = Vec2::Zero();   // fiber vector with du(es)=0, ds(es)=1

    static MappingTorus from_monodromy(const Eigen::Matrix2i& A);
};

// Axis-aligned box, open model of a chart of R^3, coordinates (x, y, z).
struct Box {
    std::array<double, 3> lo{-1.0, -1.0, -1.0};
    std::array<double, 3> hi{1.0, 1.0, 1.0};
};

struct WrapResult {
    Vec3 point;
    // Differential of the identification applied to tangent vectors
    // (identity except for mapping-torus t-wraps).
    Mat3 differential;
    bool wrapped = false;
};

class Chart {
  public:
    Chart() : kind_(Box{}) {}
    explicit Chart(Torus3 t) : kind_(t) {}
    explicit Chart(MappingTorus m) : kind_(m) {}
    explicit Chart(Box b) : kind_(b) {}

    static Chart torus3(std::array<double, 3> periods) { return Chart(Torus3{periods}); }
    static Chart mapping_torus(const Eigen::Matrix2i& A) {
        return Chart(MappingTorus::from_monodromy(A));
    }
    static Chart box(std::array<double, 3> lo, std::array<double, 3> hi) {
        return Chart(Box{lo, hi});
    }

    bool is_box() const { return std::holds_alternative<Box>(kind_); }
    bool is_torus3() const { return std::holds_alternative<Torus3>(kind_); }
    bool is_mapping_torus() const { return std::holds_alternative<MappingTorus>(kind_); }
    const MappingTorus& mapping_torus_data() const { return std::get<MappingTorus>(kind_); }
    const Box& box_data() const { return std::get<Box>(kind_); }
    const Torus3& torus3_data() const { return std::get<Torus3>(kind_); }

    // Variable names: (x,y,z) on Torus3/Box, (a,b,t) on mapping tori.
    std::vector<std::string> variable_names() const;

    // Canonical representative of p. Idempotent: wrap(wrap(p)) == wrap(p).
    WrapResult wrap(const Vec3& p) const;

    bool contains(const Vec3& p) const;  // false only for Box exits

    // Per-axis extent (periods, or box edge lengths).
    Vec3 extent() const;

    // Deterministic sample nodes: n points per periodic axis, n+1 inclusive
    // nodes per Box axis (so symmetric boxes sample their midplane).
    std::vector<Vec3> sample_grid(int n) const;
    std::array<int, 3> sample_shape(int n) const;

  private:
    std::variant<Torus3, MappingTorus, Box> kind_;
};

}  // namespace bct
