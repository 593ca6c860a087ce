#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace bct {

// Dormand-Prince 5(4) embedded pair on a fixed-size state. The last stage
// reuses the derivative at the step end (FSAL).
template <int N>
struct Rk45 {
    using State = std::array<double, N>;

    template <typename Rhs>
    static void eval(const Rhs& f, double t, const State& y, State& dy) {
        f(t, y, dy);
    }

    // One attempted step from (t, y) with size h. Returns the max ratio
    // |error| / (atol + rtol*|y|); the step is acceptable when <= 1.
    template <typename Rhs>
    static double step(const Rhs& f, double t, const State& y, double h, const State& k1,
                       State& y_out, State& k_last, double atol, double rtol) {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

        State k2, k3, k4, k5, k6, tmp;
        for (int i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        eval(f, t + c2 * h, tmp, k2);
        for (int i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        eval(f, t + c3 * h, tmp, k3);
        for (int i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        eval(f, t + c4 * h, tmp, k4);
        for (int i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        eval(f, t + c5 * h, tmp, k5);
        for (int i = 0; i < N; ++i)
            tmp[i] = y[i] +
                     h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        eval(f, t + h, tmp, k6);
        for (int i = 0; i < N; ++i)
            y_out[i] = y[i] +
                       h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        eval(f, t + h, y_out, k_last);

        double err = 0.0;
        for (int i = 0; i < N; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k_last[i]);
            const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y_out[i]));
            err = std::max(err, std::abs(e) / sc);
        }
        return err;
    }
};

inline double rk45_next_step(double h, double err) {
    const double fac = (err <= 1e-30) ? 5.0 : 0.9 * std::pow(err, -0.2);
    return h * std::min(5.0, std::max(0.2, fac));
}

// Cubic Hermite interpolation on one knot interval.
inline double hermite(double t0, double y0, double d0, double t1, double y1, double d1, double t) {
    const double h = t1 - t0;
    if (h == 0.0) return y0;
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 +
           (s3 - s2) * h * d1;
}

}  // namespace bct
