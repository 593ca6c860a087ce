#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace bct {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

// Signed angle from a to b around the axis n (all 3-vectors, n unit).
inline double signed_angle(const Vec3& a, const Vec3& b, const Vec3& n) {
    return std::atan2(n.dot(a.cross(b)), a.dot(b));
}

// Angle between the lines spanned by a and b, in [0, pi/2].
inline double line_angle(const Vec3& a, const Vec3& b) {
    const double c = std::abs(a.normalized().dot(b.normalized()));
    return std::acos(std::min(1.0, c));
}

// Fold a full-circle angle into (-pi/2, pi/2], identifying antipodal lines.
inline double fold_line_angle(double theta) {
    while (theta > 0.5 * M_PI) theta -= M_PI;
    while (theta <= -0.5 * M_PI) theta += M_PI;
    return theta;
}

}  // namespace bct
