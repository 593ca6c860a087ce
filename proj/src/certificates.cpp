#include "bct/certificates.hpp"

#include <cmath>

namespace bct {

const char* to_string(CertificateKind k) {
    switch (k) {
        case CertificateKind::Taut: return "Taut";
        case CertificateKind::StrongTight: return "StrongTight";
        case CertificateKind::Hypertaut: return "Hypertaut";
        case CertificateKind::VolumePreservingTransversal: return "VolumePreservingTransversal";
    }
    return "?";
}

const char* to_string(CertificateFailure f) {
    switch (f) {
        case CertificateFailure::None: return "None";
        case CertificateFailure::NotClosed: return "NotClosed";
        case CertificateFailure::NotDominating: return "NotDominating";
        case CertificateFailure::NotDivergenceFree: return "NotDivergenceFree";
        case CertificateFailure::NotTransverse: return "NotTransverse";
    }
    return "?";
}

CovectorField covector_of(const OneForm& a) {
    return [a](const Vec3& p) { return a.covector(p); };
}

std::pair<Vec3, Vec3> oriented_kernel_basis(const Vec3& n) {
    int least = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(n[k]) < std::abs(n[least])) least = k;
    Vec3 v1 = n.cross(Vec3::Unit(least)).normalized();
    Vec3 v2 = n.cross(v1).normalized();
    // make (n, v1, v2) positively oriented
    if (n.dot(v1.cross(v2)) < 0) std::swap(v1, v2);
    return {v1, v2};
}

namespace {

struct PositivityScan {
    double min_margin;
    Vec3 worst;
};

PositivityScan scan_two_form_on_planes(const TwoForm& omega, const CovectorField& eta,
                                       const Grid3& grid, ExecPolicy policy) {
    std::vector<double> margin(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        const Vec3 n = eta(p);
        const auto [v1, v2] = oriented_kernel_basis(n);
        margin[i] = omega.apply(p, v1, v2);
    });
    PositivityScan s{margin[0], grid.point(0)};
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (margin[i] < s.min_margin) {
            s.min_margin = margin[i];
            s.worst = grid.point(i);
        }
    return s;
}

double closedness_sup(const TwoForm& omega, const Grid3& grid, ExecPolicy policy) {
    const ThreeForm dw = exterior_derivative(omega);
    std::vector<double> v(grid.size());
    parallel_for(grid.size(), policy,
                 [&](std::size_t i) { v[i] = std::abs(dw.coefficient(grid.point(i))); });
    double sup = 0;
    for (double x : v) sup = std::max(sup, x);
    return sup;
}

}  // namespace

Certificate taut_certificate(const TwoForm& omega, const CovectorField& eta, const Grid3& grid,
                             double closed_tol, ExecPolicy policy) {
    Certificate c;
    c.kind = CertificateKind::Taut;
    c.verdict = false;
    const double dsup = closedness_sup(omega, grid, policy);
    if (dsup >= closed_tol) {
        c.failure = CertificateFailure::NotClosed;
        c.worst_margin = dsup;
        return c;
    }
    const PositivityScan s = scan_two_form_on_planes(omega, eta, grid, policy);
    c.worst_margin = s.min_margin;
    c.worst_point = s.worst;
    if (s.min_margin <= 0) {
        c.failure = CertificateFailure::NotDominating;
        return c;
    }
    c.verdict = true;
    return c;
}

Certificate strong_tightness_certificate(const ContactPair& pair, const TwoForm& omega,
                                         const Grid3& grid, double closed_tol,
                                         ExecPolicy policy) {
    Certificate c;
    c.kind = CertificateKind::StrongTight;
    c.verdict = false;
    const double dsup = closedness_sup(omega, grid, policy);
    if (dsup >= closed_tol) {
        c.failure = CertificateFailure::NotClosed;
        c.worst_margin = dsup;
        return c;
    }
    // xi_- is oriented as a plane by -alpha_-: on Delta_+ (alpha_+ = -u alpha_-)
    // the two oriented planes coincide, which is what makes a common
    // dominating form possible at all.
    const OneForm& am = pair.alpha_minus;
    const CovectorField minus_oriented = [am](const Vec3& p) { return (-am.covector(p)).eval(); };
    const PositivityScan sm = scan_two_form_on_planes(omega, minus_oriented, grid, policy);
    const PositivityScan sp =
        scan_two_form_on_planes(omega, covector_of(pair.alpha_plus), grid, policy);
    if (sm.min_margin < sp.min_margin) {
        c.worst_margin = sm.min_margin;
        c.worst_point = sm.worst;
        c.detail = "xi_minus";
    } else {
        c.worst_margin = sp.min_margin;
        c.worst_point = sp.worst;
        c.detail = "xi_plus";
    }
    if (c.worst_margin <= 0) {
        c.failure = CertificateFailure::NotDominating;
        return c;
    }
    c.verdict = true;
    return c;
}

Certificate hypertaut_certificate(const OneForm& beta, const CovectorField& eta, const Grid3& grid,
                                  ExecPolicy policy) {
    Certificate c;
    c.kind = CertificateKind::Hypertaut;
    c.verdict = false;
    const TwoForm dbeta = exterior_derivative(beta);
    const PositivityScan s = scan_two_form_on_planes(dbeta, eta, grid, policy);
    c.worst_margin = s.min_margin;
    c.worst_point = s.worst;
    if (s.min_margin <= 0) {
        c.failure = CertificateFailure::NotDominating;
        return c;
    }
    c.verdict = true;
    return c;
}

Certificate volume_preserving_transversal(const VectorField& upsilon,
                                          const std::vector<CovectorField>& defining,
                                          const Grid3& grid, double div_tol, ExecPolicy policy) {
    Certificate c;
    c.kind = CertificateKind::VolumePreservingTransversal;
    c.verdict = false;
    const Expr div = upsilon.divergence_expr();
    std::vector<double> dv(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        const std::array<double, 3> q{p.x(), p.y(), p.z()};
        dv[i] = std::abs(div.evaluate(q));
    });
    double dsup = 0;
    for (double x : dv) dsup = std::max(dsup, x);
    if (dsup >= div_tol) {
        c.failure = CertificateFailure::NotDivergenceFree;
        c.worst_margin = dsup;
        return c;
    }

    std::vector<double> margin(grid.size());
    parallel_for(grid.size(), policy, [&](std::size_t i) {
        const Vec3 p = grid.point(i);
        double m = std::numeric_limits<double>::infinity();
        for (const auto& cov : defining) m = std::min(m, cov(p).dot(upsilon(p)));
        margin[i] = m;
    });
    PositivityScan s{margin[0], grid.point(0)};
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (margin[i] < s.min_margin) {
            s.min_margin = margin[i];
            s.worst = grid.point(i);
        }
    c.worst_margin = s.min_margin;
    c.worst_point = s.worst;
    if (s.min_margin <= 0) {
        c.failure = CertificateFailure::NotTransverse;
        return c;
    }
    c.verdict = true;
    return c;
}

}  // namespace bct
