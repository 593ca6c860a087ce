#include "bct/chart.hpp"

#include <cmath>

#include "bct/errors.hpp"

namespace bct {

MappingTorus MappingTorus::from_monodromy(const Eigen::Matrix2i& A) {
    const int det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    const int tr = A(0, 0) + A(1, 1);
    if (det != 1 || tr <= 2)
        throw InvalidSpec(
            "mapping-torus monodromy must lie in SL(2,Z) with trace > 2 "
            "(real eigenvalues mu > 1 > 1/mu > 0)");

    MappingTorus m;
    m.monodromy = A;
    const double trd = static_cast<double>(tr);
    const double disc = std::sqrt(trd * trd - 4.0);
    m.mu = (trd + disc) / 2.0;
    m.rate = std::log(m.mu);

    const Eigen::Matrix2d Ad = A.cast<double>();
    // Row eigen-covectors: w A = lambda w  <=>  A^T w^T = lambda w^T.
    Eigen::EigenSolver<Eigen::Matrix2d> es(Ad.transpose());
    Vec2 wu, ws;
    for (int i = 0; i < 2; ++i) {
        const double lam = es.eigenvalues()(i).real();
        const Vec2 w = es.eigenvectors().col(i).real();
        if (std::abs(lam - m.mu) < 1e-9 * m.mu) wu = w;
        if (std::abs(lam - 1.0 / m.mu) < 1e-9) ws = w;
    }
    // Normalize so that du ^ ds = da ^ db (positive fiber orientation).
    const double cross = wu.x() * ws.y() - wu.y() * ws.x();
    if (cross < 0) ws = -ws;
    const double scale = std::sqrt(std::abs(wu.x() * ws.y() - wu.y() * ws.x()));
    wu /= scale;
    ws /= scale;
    m.du = wu;
    m.ds = ws;

    Eigen::Matrix2d D;
    D << m.du.x(), m.du.y(), m.ds.x(), m.ds.y();
    const Eigen::Matrix2d Dinv = D.inverse();
    m.eu = Dinv.col(0);
    m.es = Dinv.col(1);
    return m;
}

std::vector<std::string> Chart::variable_names() const {
    if (is_mapping_torus()) return {"a", "b", "t"};
    return {"x", "y", "z"};
}

static double wrap_periodic(double v, double period) {
    double w = std::fmod(v, period);
    if (w < 0) w += period;
    // fmod can return exactly `period` after the negative adjustment
    if (w >= period) w -= period;
    return w;
}

WrapResult Chart::wrap(const Vec3& p) const {
    WrapResult r{p, Mat3::Identity(), false};
    if (const Torus3* t = std::get_if<Torus3>(&kind_)) {
        for (int i = 0; i < 3; ++i) {
            const double w = wrap_periodic(p[i], t->periods[i]);
            if (w != p[i]) r.wrapped = true;
            r.point[i] = w;
        }
        return r;
    }
    if (const MappingTorus* m = std::get_if<MappingTorus>(&kind_)) {
        double t = p[2];
        Vec2 v(p[0], p[1]);
        Eigen::Matrix2d G = Eigen::Matrix2d::Identity();
        const Eigen::Matrix2d Ad = m->monodromy.cast<double>();
        const Eigen::Matrix2d Ainv = Ad.inverse();
        // (v, t) ~ (Av, t-1): reaching t = 1 applies A to the fiber.
        while (t >= 1.0) {
            t -= 1.0;
            v = Ad * v;
            G = Ad * G;
            r.wrapped = true;
        }
        while (t < 0.0) {
            t += 1.0;
            v = Ainv * v;
            G = Ainv * G;
            r.wrapped = true;
        }
        Vec2 vw(wrap_periodic(v.x(), 1.0), wrap_periodic(v.y(), 1.0));
        if (vw != v) r.wrapped = true;
        r.point = Vec3(vw.x(), vw.y(), t);
        r.differential.setIdentity();
        r.differential.topLeftCorner<2, 2>() = G;
        return r;
    }
    return r;  // Box: no identifications
}

bool Chart::contains(const Vec3& p) const {
    if (const Box* b = std::get_if<Box>(&kind_)) {
        for (int i = 0; i < 3; ++i)
            if (p[i] < b->lo[i] || p[i] > b->hi[i]) return false;
    }
    return true;
}

Vec3 Chart::extent() const {
    if (const Torus3* t = std::get_if<Torus3>(&kind_))
        return Vec3(t->periods[0], t->periods[1], t->periods[2]);
    if (std::holds_alternative<MappingTorus>(kind_)) return Vec3(1.0, 1.0, 1.0);
    const Box& b = std::get<Box>(kind_);
    return Vec3(b.hi[0] - b.lo[0], b.hi[1] - b.lo[1], b.hi[2] - b.lo[2]);
}

std::array<int, 3> Chart::sample_shape(int n) const {
    if (is_box()) return {n + 1, n + 1, n + 1};
    return {n, n, n};
}

std::vector<Vec3> Chart::sample_grid(int n) const {
    const auto shape = sample_shape(n);
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(shape[0]) * shape[1] * shape[2]);
    Vec3 lo = Vec3::Zero(), step = Vec3::Zero();
    if (const Box* b = std::get_if<Box>(&kind_)) {
        for (int i = 0; i < 3; ++i) {
            lo[i] = b->lo[i];
            step[i] = (b->hi[i] - b->lo[i]) / n;
        }
    } else {
        const Vec3 ext = extent();
        for (int i = 0; i < 3; ++i) step[i] = ext[i] / n;
    }
    for (int k = 0; k < shape[2]; ++k)
        for (int j = 0; j < shape[1]; ++j)
            for (int i = 0; i < shape[0]; ++i)
                pts.emplace_back(lo[0] + i * step[0], lo[1] + j * step[1], lo[2] + k * step[2]);
    return pts;
}

}  // namespace bct
