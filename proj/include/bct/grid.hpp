#pragma once

#include <array>
#include <functional>
#include <vector>

#include "bct/chart.hpp"
#include "bct/parallel.hpp"

namespace bct {

// Deterministic sample grid over a chart: n cells per axis, nodes at cell
// corners (periodic axes drop the duplicate end node).
class Grid3 {
  public:
    Grid3() = default;
    Grid3(Chart chart, int n);

    const Chart& chart() const { return chart_; }
    int cells() const { return n_; }
    const std::array<int, 3>& shape() const { return shape_; }
    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }
    const Vec3& point(std::size_t i) const { return points_[i]; }
    Vec3 step() const { return step_; }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * shape_[1] + j) * shape_[0] + i;
    }
    std::array<int, 3> unindex(std::size_t idx) const {
        const int i = static_cast<int>(idx % shape_[0]);
        const int j = static_cast<int>((idx / shape_[0]) % shape_[1]);
        const int k = static_cast<int>(idx / (static_cast<std::size_t>(shape_[0]) * shape_[1]));
        return {i, j, k};
    }

    // Neighbor index along axis with offset +-1; periodic axes wrap, Box axes
    // clamp (caller can detect the clamp by comparing indices).
    std::size_t neighbor(std::size_t idx, int axis, int offset) const;

    bool interior(std::size_t idx) const;  // true away from Box faces

  private:
    Chart chart_;
    int n_ = 0;
    std::array<int, 3> shape_{0, 0, 0};
    Vec3 step_ = Vec3::Zero();
    std::vector<Vec3> points_;
};

// Scalar samples on a Grid3 with wrap-aware central differences and
// trilinear interpolation.
class GridScalar {
  public:
    GridScalar() = default;
    GridScalar(Grid3 grid, std::vector<double> values) : grid_(std::move(grid)), v_(std::move(values)) {}

    static GridScalar sample(const Grid3& grid, const std::function<double(const Vec3&)>& f,
                             ExecPolicy policy = ExecPolicy::Parallel);

    const Grid3& grid() const { return grid_; }
    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }
    double at(std::size_t i) const { return v_[i]; }

    // Central difference along `axis` at a node (one-sided on Box faces).
    double partial(std::size_t idx, int axis) const;

    double interpolate(const Vec3& p) const;

    double sup_abs() const;

  private:
    double interp_layer(int k, double x, double y) const;

    Grid3 grid_;
    std::vector<double> v_;
};

// Grid-sampled forms: the finite-difference exterior-derivative path for
// data that has no symbolic coefficients.
struct GridOneForm {
    std::array<GridScalar, 3> c;
};
struct GridTwoForm {
    std::array<GridScalar, 3> c;  // dy^dz, dz^dx, dx^dy
};
struct GridThreeForm {
    GridScalar c;
};

GridOneForm sample_one_form(const Grid3& grid, const std::function<Vec3(const Vec3&)>& covector,
                            ExecPolicy policy = ExecPolicy::Parallel);
GridTwoForm exterior_derivative(const GridOneForm& a);
GridThreeForm exterior_derivative(const GridTwoForm& a);

}  // namespace bct
