#pragma once

#include <functional>

#include "bct/contact_pair.hpp"

namespace bct {

enum class CertificateKind { Taut, StrongTight, Hypertaut, VolumePreservingTransversal };

enum class CertificateFailure {
    None,
    NotClosed,
    NotDominating,
    NotDivergenceFree,
    NotTransverse,
};

const char* to_string(CertificateKind k);
const char* to_string(CertificateFailure f);

struct Certificate {
    CertificateKind kind = CertificateKind::Taut;
    bool verdict = false;
    CertificateFailure failure = CertificateFailure::None;
    double worst_margin = 0.0;  // min positivity margin over the grid
    Vec3 worst_point = Vec3::Zero();
    std::string detail;         // which structure failed, for pair checks
};

// A cooriented plane field given pointwise by its defining covector.
using CovectorField = std::function<Vec3(const Vec3&)>;

CovectorField covector_of(const OneForm& a);

// Oriented basis (v1, v2) of ker(n) such that (n-dual, v1, v2) is positively
// oriented in the chart.
std::pair<Vec3, Vec3> oriented_kernel_basis(const Vec3& n);

// omega closed (d omega ~ 0) and positive on oriented bases of eta.
Certificate taut_certificate(const TwoForm& omega, const CovectorField& eta, const Grid3& grid,
                             double closed_tol = 1e-9, ExecPolicy policy = ExecPolicy::Parallel);

// omega closed and positive on both xi_- and xi_+ of the pair.
Certificate strong_tightness_certificate(const ContactPair& pair, const TwoForm& omega,
                                         const Grid3& grid, double closed_tol = 1e-9,
                                         ExecPolicy policy = ExecPolicy::Parallel);

// d beta positive on oriented bases of eta.
Certificate hypertaut_certificate(const OneForm& beta, const CovectorField& eta, const Grid3& grid,
                                  ExecPolicy policy = ExecPolicy::Parallel);

// div(upsilon) ~ 0 and alpha(upsilon) > 0 for every defining covector.
Certificate volume_preserving_transversal(const VectorField& upsilon,
                                          const std::vector<CovectorField>& defining,
                                          const Grid3& grid, double div_tol = 1e-9,
                                          ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace bct
