#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bct/certificates.hpp"
#include "bct/contact_pair.hpp"
#include "bct/cylinder.hpp"
#include "bct/liouville.hpp"

namespace bct {

struct CertificateSpec {
    std::string kind;  // taut | strong_tight | hypertaut | volume_preserving
    std::optional<TwoForm> omega;
    std::optional<OneForm> beta;
    std::optional<OneForm> eta;      // plane field as a one-form kernel
    std::optional<VectorField> upsilon;
    std::string label;
};

struct CylinderSpec {
    CylinderField field;
    double x_lo = -1.0, x_hi = 1.0;
    std::optional<std::pair<double, double>> band;  // for the foliation approx
    int scan_points = 257;
    std::string source;  // expression text, echoed into reports
};

struct Tolerances {
    double contact = 0.0;            // strictness margin for contact signs
    double balance = 1e-9;
    double lie = 1e-9;
    double proportionality = 1e-6;   // Delta detection angle
    double sigma = 1e-8;             // bounded-value certificate target
    double frame_rate = 1e-8;        // r_u - r_s >= 2 - tol
    double reeb_cross = 1e-4;
    double kneser = 1e-3;
};

struct PairSpec {
    std::string name;
    Chart chart;
    std::optional<ContactPair> pair;
    std::optional<FoliationSeed> seed;
    std::vector<double> eps_grid;
    std::optional<CylinderSpec> cylinder;
    std::vector<CertificateSpec> certificates;
    Expr sigma_choice;  // smooth rescale for the Reeb analysis, default 0
    int grid = 16;
    double horizon = 10.0;
    double skeleton_delta = 1e-2;
    Tolerances tol;

    Grid3 make_grid() const { return Grid3(chart, grid); }
};

PairSpec parse_pair_spec(const std::string& json_text);
PairSpec load_pair_spec(const std::string& path);

}  // namespace bct
