#pragma once

#include <functional>
#include <vector>

#include "bct/fields.hpp"

namespace bct {

enum class Termination { HorizonReached, EscapedDomain, BlowUp, ConvergedToPoint };

const char* to_string(Termination t);

struct FlowOptions {
    double tol = 1e-10;
    double blowup_speed = 1e8;
    double stagnation_speed = 1e-12;
    double stagnation_window = 1.0;
    // Optional early stop; a hit terminates with ConvergedToPoint.
    std::function<bool(double, const Vec3&)> stop_predicate;
};

struct TrajectorySample {
    double t;
    Vec3 p;          // wrapped chart representative
    Vec3 velocity;   // field value at p
    double error;    // accepted local error estimate (scaled, <= tol)
};

struct Trajectory {
    std::vector<TrajectorySample> samples;  // timestamps strictly increasing
    Termination reason = Termination::HorizonReached;
    double end_time = 0.0;
    Vec3 end_point = Vec3::Zero();

    Vec3 at(double t) const;  // Hermite interpolation between knots
};

// Integrates p' = v(p) over the signed duration T, wrapping through chart
// identifications; Box exits terminate at the boundary crossing.
Trajectory flow_trajectory(const VectorField& v, const Vec3& p0, double T,
                           const FlowOptions& opts = {});

struct LinearizedFlow {
    Trajectory base;
    Mat3 matrix = Mat3::Identity();  // d(phi_T) at p0, gluing included
};

LinearizedFlow linearized_flow(const VectorField& v, const Vec3& p0, double T,
                               const FlowOptions& opts = {});

// States of (phi_t, d phi_t) at the requested times (ascending, from 0).
struct FlowCheckpoint {
    double t;
    Vec3 p;
    Mat3 M;
};
std::vector<FlowCheckpoint> linearized_checkpoints(const VectorField& v, const Vec3& p0,
                                                   const std::vector<double>& times,
                                                   const FlowOptions& opts = {});

}  // namespace bct
