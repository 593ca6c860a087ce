#include "bct/pairspec.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bct/errors.hpp"

namespace bct {

using nlohmann::json;

namespace {

Chart chart_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "box") {
        std::array<double, 3> lo{}, hi{};
        for (int i = 0; i < 3; ++i) {
            lo[i] = j.at("lo").at(i).get<double>();
            hi[i] = j.at("hi").at(i).get<double>();
            if (!(hi[i] > lo[i])) throw InvalidSpec("box chart needs hi > lo per axis");
        }
        return Chart::box(lo, hi);
    }
    if (kind == "torus3") {
        std::array<double, 3> periods{1, 1, 1};
        if (j.contains("periods"))
            for (int i = 0; i < 3; ++i) periods[i] = j.at("periods").at(i).get<double>();
        for (double p : periods)
            if (!(p > 0)) throw InvalidSpec("torus3 periods must be positive");
        return Chart::torus3(periods);
    }
    if (kind == "mapping_torus") {
        Eigen::Matrix2i A;
        const auto& m = j.at("monodromy");
        A << m.at(0).at(0).get<int>(), m.at(0).at(1).get<int>(), m.at(1).at(0).get<int>(),
            m.at(1).at(1).get<int>();
        return Chart::mapping_torus(A);
    }
    throw InvalidSpec("unknown chart kind '" + kind + "'");
}

std::array<std::string, 3> covector_keys(const Chart& chart) {
    if (chart.is_mapping_torus()) return {"da", "db", "dt"};
    return {"dx", "dy", "dz"};
}

OneForm one_form_from_json(const Chart& chart, const json& j) {
    const auto keys = covector_keys(chart);
    const auto vars = chart.variable_names();
    std::array<Expr, 3> c;
    for (int i = 0; i < 3; ++i) {
        const std::string src = j.contains(keys[i]) ? j.at(keys[i]).get<std::string>() : "0";
        c[i] = expr::parse(src, vars);
    }
    return OneForm{chart, c};
}

TwoForm two_form_from_json(const Chart& chart, const json& j) {
    const bool mt = chart.is_mapping_torus();
    const std::array<std::string, 3> keys =
        mt ? std::array<std::string, 3>{"dbdt", "dtda", "dadb"}
           : std::array<std::string, 3>{"dydz", "dzdx", "dxdy"};
    const auto vars = chart.variable_names();
    std::array<Expr, 3> c;
    for (int i = 0; i < 3; ++i) {
        const std::string src = j.contains(keys[i]) ? j.at(keys[i]).get<std::string>() : "0";
        c[i] = expr::parse(src, vars);
    }
    return TwoForm{chart, c};
}

VectorField vector_field_from_json(const Chart& chart, const json& j) {
    const bool mt = chart.is_mapping_torus();
    const std::array<std::string, 3> keys = mt ? std::array<std::string, 3>{"a", "b", "t"}
                                               : std::array<std::string, 3>{"x", "y", "z"};
    const auto vars = chart.variable_names();
    std::array<Expr, 3> c;
    for (int i = 0; i < 3; ++i) {
        const std::string src = j.contains(keys[i]) ? j.at(keys[i]).get<std::string>() : "0";
        c[i] = expr::parse(src, vars);
    }
    return VectorField{chart, c};
}

}  // namespace

PairSpec parse_pair_spec(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("pair spec is not valid JSON: ") + e.what());
    }
    try {
        PairSpec spec;
        spec.name = j.value("name", "unnamed");
        spec.chart = chart_from_json(j.at("chart"));
        if (j.contains("alpha_minus") || j.contains("alpha_plus")) {
            ContactPair pair{spec.chart, one_form_from_json(spec.chart, j.at("alpha_minus")),
                             one_form_from_json(spec.chart, j.at("alpha_plus"))};
            spec.pair = std::move(pair);
        }
        if (j.contains("seed")) {
            const auto& s = j.at("seed");
            FoliationSeed seed{spec.chart, one_form_from_json(spec.chart, s.at("alpha")),
                               one_form_from_json(spec.chart, s.at("beta"))};
            spec.seed = std::move(seed);
            if (s.contains("eps_grid"))
                for (const auto& e : s.at("eps_grid")) spec.eps_grid.push_back(e.get<double>());
        }
        if (spec.eps_grid.empty())
            spec.eps_grid = {1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001};
        if (j.contains("cylinder")) {
            const auto& c = j.at("cylinder");
            CylinderSpec cs;
            cs.source = c.at("F").get<std::string>();
            cs.field = CylinderField::from_expr(cs.source, c.value("sup", 1.0),
                                                c.value("lipschitz", -1.0));
            cs.x_lo = c.value("x_lo", -1.0);
            cs.x_hi = c.value("x_hi", 1.0);
            cs.scan_points = c.value("scan_points", 257);
            if (c.contains("band"))
                cs.band = std::make_pair(c.at("band").at(0).get<double>(),
                                         c.at("band").at(1).get<double>());
            spec.cylinder = std::move(cs);
        }
        if (j.contains("certificates")) {
            for (const auto& c : j.at("certificates")) {
                CertificateSpec cert;
                cert.kind = c.at("kind").get<std::string>();
                cert.label = c.value("label", cert.kind);
                if (c.contains("omega")) cert.omega = two_form_from_json(spec.chart, c.at("omega"));
                if (c.contains("beta")) cert.beta = one_form_from_json(spec.chart, c.at("beta"));
                if (c.contains("eta")) cert.eta = one_form_from_json(spec.chart, c.at("eta"));
                if (c.contains("upsilon"))
                    cert.upsilon = vector_field_from_json(spec.chart, c.at("upsilon"));
                spec.certificates.push_back(std::move(cert));
            }
        }
        spec.sigma_choice = expr::parse(j.value("sigma_choice", std::string("0")),
                                        spec.chart.variable_names());
        spec.grid = j.value("grid", 16);
        if (spec.grid < 2) throw InvalidSpec("grid must be at least 2");
        spec.horizon = j.value("horizon", 10.0);
        spec.skeleton_delta = j.value("skeleton_delta", 1e-2);
        if (j.contains("tolerances")) {
            const auto& t = j.at("tolerances");
            spec.tol.balance = t.value("balance", spec.tol.balance);
            spec.tol.lie = t.value("lie", spec.tol.lie);
            spec.tol.proportionality = t.value("proportionality", spec.tol.proportionality);
            spec.tol.sigma = t.value("sigma", spec.tol.sigma);
            spec.tol.frame_rate = t.value("frame_rate", spec.tol.frame_rate);
            spec.tol.reeb_cross = t.value("reeb_cross", spec.tol.reeb_cross);
            spec.tol.kneser = t.value("kneser", spec.tol.kneser);
        }
        return spec;
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("pair spec is missing required fields: ") + e.what());
    }
}

PairSpec load_pair_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open pair spec '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_pair_spec(ss.str());
}

}  // namespace bct
