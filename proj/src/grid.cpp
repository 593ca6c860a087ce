#include "bct/grid.hpp"

#include <algorithm>
#include <cmath>

namespace bct {

Grid3::Grid3(Chart chart, int n) : chart_(std::move(chart)), n_(n) {
    shape_ = chart_.sample_shape(n);
    const Vec3 ext = chart_.extent();
    for (int i = 0; i < 3; ++i) step_[i] = ext[i] / n;
    points_ = chart_.sample_grid(n);
}

std::size_t Grid3::neighbor(std::size_t idx, int axis, int offset) const {
    auto ijk = unindex(idx);
    int v = ijk[axis] + offset;
    if (chart_.is_box()) {
        v = std::clamp(v, 0, shape_[axis] - 1);
    } else {
        v = ((v % shape_[axis]) + shape_[axis]) % shape_[axis];
    }
    ijk[axis] = v;
    return index(ijk[0], ijk[1], ijk[2]);
}

bool Grid3::interior(std::size_t idx) const {
    if (!chart_.is_box()) return true;
    const auto ijk = unindex(idx);
    for (int a = 0; a < 3; ++a)
        if (ijk[a] == 0 || ijk[a] == shape_[a] - 1) return false;
    return true;
}

GridScalar GridScalar::sample(const Grid3& grid, const std::function<double(const Vec3&)>& f,
                              ExecPolicy policy) {
    std::vector<double> v(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) { v[i] = f(grid.point(i)); });
    return GridScalar(grid, std::move(v));
}

double GridScalar::partial(std::size_t idx, int axis) const {
    const double h = grid_.step()[axis];
    const std::size_t ip = grid_.neighbor(idx, axis, +1);
    const std::size_t im = grid_.neighbor(idx, axis, -1);
    if (ip == idx) return (v_[idx] - v_[im]) / h;  // clamped Box face
    if (im == idx) return (v_[ip] - v_[idx]) / h;
    // t-stencils across a mapping-torus gluing read the neighbor fiber point
    // through the identification, so the data must be gluing-invariant
    return (v_[ip] - v_[im]) / (2.0 * h);
}

double GridScalar::interp_layer(int k, double x, double y) const {
    const Vec3 step = grid_.step();
    double lox = 0.0, loy = 0.0;
    if (grid_.chart().is_box()) {
        const auto& b = grid_.chart().box_data();
        lox = b.lo[0];
        loy = b.lo[1];
    }
    auto clamp_or_wrap = [&](double u, int axis, int* base, double* frac) {
        const int nmax = grid_.shape()[axis] - 1;
        if (grid_.chart().is_box()) u = std::clamp(u, 0.0, static_cast<double>(nmax));
        *base = static_cast<int>(std::floor(u));
        if (grid_.chart().is_box()) *base = std::min(*base, nmax - 1);
        *frac = u - *base;
    };
    int bi, bj;
    double fi, fj;
    clamp_or_wrap((x - lox) / step[0], 0, &bi, &fi);
    clamp_or_wrap((y - loy) / step[1], 1, &bj, &fj);
    auto wrap_idx = [&](int v, int axis) {
        if (grid_.chart().is_box()) return std::min(v, grid_.shape()[axis] - 1);
        return ((v % grid_.shape()[axis]) + grid_.shape()[axis]) % grid_.shape()[axis];
    };
    double acc = 0.0;
    for (int dj = 0; dj < 2; ++dj)
        for (int di = 0; di < 2; ++di) {
            const std::size_t idx =
                grid_.index(wrap_idx(bi + di, 0), wrap_idx(bj + dj, 1), wrap_idx(k, 2));
            acc += (di ? fi : 1.0 - fi) * (dj ? fj : 1.0 - fj) * v_[idx];
        }
    return acc;
}

double GridScalar::interpolate(const Vec3& p) const {
    const Vec3 q = grid_.chart().wrap(p).point;
    const Vec3 step = grid_.step();
    double loz = 0.0;
    if (grid_.chart().is_box()) loz = grid_.chart().box_data().lo[2];
    double uz = (q[2] - loz) / step[2];
    const int nz = grid_.shape()[2];
    if (grid_.chart().is_box()) uz = std::clamp(uz, 0.0, static_cast<double>(nz - 1));
    int kz = static_cast<int>(std::floor(uz));
    if (grid_.chart().is_box()) kz = std::min(kz, nz - 2);
    const double fz = uz - kz;

    const double lo_val = interp_layer(kz, q[0], q[1]);
    double hi_val;
    if (!grid_.chart().is_box() && grid_.chart().is_mapping_torus() && kz + 1 >= nz) {
        // The layer above t = 1 - h is the t = 0 layer read at the glued
        // fiber point A(a,b); the sampled scalar must be gluing-invariant.
        const Vec3 glued = grid_.chart().wrap(Vec3(q[0], q[1], 1.0)).point;
        hi_val = interp_layer(0, glued[0], glued[1]);
    } else {
        const int khi = grid_.chart().is_box() ? kz + 1 : (kz + 1) % nz;
        hi_val = interp_layer(khi, q[0], q[1]);
    }
    return (1.0 - fz) * lo_val + fz * hi_val;
}

double GridScalar::sup_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
}

GridOneForm sample_one_form(const Grid3& grid, const std::function<Vec3(const Vec3&)>& covector,
                            ExecPolicy policy) {
    std::array<std::vector<double>, 3> v;
    for (auto& comp : v) comp.resize(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 w = covector(grid.point(i));
        v[0][i] = w.x();
        v[1][i] = w.y();
        v[2][i] = w.z();
    });
    return GridOneForm{{GridScalar(grid, std::move(v[0])), GridScalar(grid, std::move(v[1])),
                        GridScalar(grid, std::move(v[2]))}};
}

GridTwoForm exterior_derivative(const GridOneForm& a) {
    const Grid3& g = a.c[0].grid();
    std::array<std::vector<double>, 3> v;
    for (auto& comp : v) comp.resize(g.size());
    parallel_for(g.size(), [&](std::size_t i) {
        v[0][i] = a.c[2].partial(i, 1) - a.c[1].partial(i, 2);
        v[1][i] = a.c[0].partial(i, 2) - a.c[2].partial(i, 0);
        v[2][i] = a.c[1].partial(i, 0) - a.c[0].partial(i, 1);
    });
    return GridTwoForm{{GridScalar(g, std::move(v[0])), GridScalar(g, std::move(v[1])),
                        GridScalar(g, std::move(v[2]))}};
}

GridThreeForm exterior_derivative(const GridTwoForm& a) {
    const Grid3& g = a.c[0].grid();
    std::vector<double> v(g.size());
    parallel_for(g.size(), [&](std::size_t i) {
        v[i] = a.c[0].partial(i, 0) + a.c[1].partial(i, 1) + a.c[2].partial(i, 2);
    });
    return GridThreeForm{GridScalar(g, std::move(v))};
}

}  // namespace bct
