#pragma once

// File formats: channel JSON, region and boundary CSV, and JSON encodings of
// certificates and reports.

#include "mseregion/counterexample.hpp"
#include "mseregion/kkt_solver.hpp"
#include "mseregion/region_analysis.hpp"
#include "mseregion/two_user_boundary.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace mseregion::io {

using nlohmann::json;

/// Parses {"n": N, "k": K, "entries": [[[re, im], ... K], ... N]}.
inline ChannelSet channels_from_json(const json& doc)
{
    detail::require(doc.is_object(), "channel file must hold a JSON object");
    detail::require(doc.contains("n") && doc["n"].is_number_integer(), "channel file needs an integer \"n\"");
    detail::require(doc.contains("k") && doc["k"].is_number_integer(), "channel file needs an integer \"k\"");
    detail::require(doc.contains("entries") && doc["entries"].is_array(), "channel file needs an \"entries\" array");
    const auto n = doc["n"].get<long long>();
    const auto k = doc["k"].get<long long>();
    detail::require(n >= 1 && k >= 1, "\"n\" and \"k\" must be positive");
    const json& rows = doc["entries"];
    detail::require(static_cast<long long>(rows.size()) == n, "\"entries\" must have n rows");

    CMatrix h(n, k);
    for (long long r = 0; r < n; ++r) {
        const json& row = rows[static_cast<std::size_t>(r)];
        detail::require(row.is_array() && static_cast<long long>(row.size()) == k,
                        "row " + std::to_string(r) + " must have k entries");
        for (long long c = 0; c < k; ++c) {
            const json& z = row[static_cast<std::size_t>(c)];
            detail::require(z.is_array() && z.size() == 2 && z[0].is_number() && z[1].is_number(),
                            "entries must be [re, im] pairs");
            h(r, c) = Complex(z[0].get<double>(), z[1].get<double>());
        }
    }
    return ChannelSet(std::move(h));
}

inline json channels_to_json(const ChannelSet& channels)
{
    const CMatrix& h = channels.matrix();
    json rows = json::array();
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < h.cols(); ++c) {
            row.push_back({h(r, c).real(), h(r, c).imag()});
        }
        rows.push_back(std::move(row));
    }
    return {{"n", h.rows()}, {"k", h.cols()}, {"entries", std::move(rows)}};
}

inline std::string read_text(const std::string& path)
{
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    detail::require(static_cast<bool>(out), "cannot write " + path);
    out << text;
}

inline json parse_json(const std::string& text, const std::string& what)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError("malformed JSON in " + what + ": " + e.what());
    }
}

inline ChannelSet load_channels(const std::string& path)
{
    return channels_from_json(parse_json(read_text(path), path));
}

/// Reads a JSON array of reals, e.g. "[0.22, 0.54, 0.24]".
inline RVector real_vector_from_json(const json& doc, const std::string& what)
{
    detail::require(doc.is_array() && !doc.empty(), what + " must be a nonempty JSON array");
    RVector out(static_cast<Eigen::Index>(doc.size()));
    for (std::size_t i = 0; i < doc.size(); ++i) {
        detail::require(doc[i].is_number(), what + " must contain numbers only");
        out[static_cast<Eigen::Index>(i)] = doc[i].get<double>();
    }
    return out;
}

inline json to_json(const RVector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

/// Shortest representation that parses back to the same double.
inline std::string format_real(double value)
{
    return json(value).dump();
}

inline json to_json(const KktResiduals& r)
{
    return {{"stationarity", to_json(r.stationarity)},
            {"primal_sign", to_json(r.primal_sign)},
            {"complementarity", to_json(r.complementarity)},
            {"dual_sign", to_json(r.dual_sign)},
            {"budget_violation", r.budget_violation},
            {"budget_complementarity", r.budget_complementarity},
            {"lambda_sign", r.lambda_sign},
            {"budget_slack", r.budget_slack}};
}

inline json to_json(const KktCertificate& c, double sigma2)
{
    return {{"powers", to_json(c.powers.values())},
            {"lambda", c.lambda},
            {"mu", to_json(c.mu)},
            {"objective", c.objective},
            {"residuals", to_json(c.residuals)},
            {"converged", c.converged},
            {"iterations", c.iterations},
            {"sigma2_assumed", sigma2}};
}

inline json to_json(const StationaryPointReport& report, double sigma2)
{
    json clusters = json::array();
    for (const auto& cluster : report.clusters) {
        json entry = to_json(cluster.certificate, sigma2);
        entry["members"] = cluster.members;
        clusters.push_back(std::move(entry));
    }
    return {{"cluster_count", report.clusters.size()},
            {"clusters", std::move(clusters)},
            {"runs", report.runs},
            {"unconverged", report.unconverged},
            {"cluster_radius", report.cluster_radius}};
}

inline json to_json(const SegmentReport& report)
{
    json points = json::array();
    for (const auto& p : report.points) {
        points.push_back(
            {{"t", p.t}, {"target", to_json(p.target.values())}, {"margin", p.margin}, {"dominated", p.dominated}});
    }
    return {{"a", to_json(report.a.values())},
            {"b", to_json(report.b.values())},
            {"margin_a", report.margin_a},
            {"margin_b", report.margin_b},
            {"points", std::move(points)},
            {"nonconvex_witness", report.nonconvex_witness}};
}

inline json to_json(const ConvexityReport& report)
{
    return {{"certified", report.certified},
            {"worst_discriminant", report.worst_discriminant},
            {"worst_relative", report.worst_relative},
            {"worst_p", report.worst_p},
            {"strict", report.strict},
            {"cauchy_schwarz_held", report.cauchy_schwarz_held},
            {"monotone", report.monotone},
            {"classification", to_string(report.classification)},
            {"grid", report.grid}};
}

inline json to_json(const CounterexampleReport& report, double sigma2)
{
    json checks = json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"name", c.name},
                          {"published", c.published},
                          {"computed", c.computed},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass}});
    }
    return {{"checks", std::move(checks)},
            {"all_pass", report.all_pass},
            {"stationary_points", to_json(report.stationary, sigma2)},
            {"published_point_1", to_json(report.published_point_1, sigma2)},
            {"published_point_2", to_json(report.published_point_2, sigma2)},
            {"published_residuals_1", to_json(report.published_residuals_1)},
            {"published_residuals_2", to_json(report.published_residuals_2)},
            {"mse_triple_1", to_json(report.triple_1.values())},
            {"mse_triple_2", to_json(report.triple_2.values())},
            {"segment", to_json(report.segment)}};
}

/// Columns p, eps1, eps2, deps1, deps2, ddeps1, ddeps2, discriminant,
/// g_prime, g_double_prime; derivative fields empty at the endpoints.
inline std::string boundary_csv(const std::vector<BoundarySample>& samples)
{
    std::ostringstream out;
    out << "p,eps1,eps2,deps1,deps2,ddeps1,ddeps2,discriminant,g_prime,g_double_prime\n";
    for (const auto& s : samples) {
        out << format_real(s.p) << ',' << format_real(s.eps1) << ',' << format_real(s.eps2);
        if (s.derivatives) {
            const auto& d = *s.derivatives;
            for (double v : {d.first.deps1, d.first.deps2, d.second.ddeps1, d.second.ddeps2, d.discriminant.value,
                             d.g.g_prime, d.g.g_double_prime}) {
                out << ',' << format_real(v);
            }
        } else {
            out << ",,,,,,,";
        }
        out << '\n';
    }
    return out.str();
}

/// Columns p_1..p_K, eps_1..eps_K.
inline std::string region_csv(const RegionSampleSet& set, Eigen::Index users)
{
    std::ostringstream out;
    for (Eigen::Index k = 0; k < users; ++k) {
        out << (k ? "," : "") << "p_" << (k + 1);
    }
    for (Eigen::Index k = 0; k < users; ++k) {
        out << ",eps_" << (k + 1);
    }
    out << '\n';
    for (const auto& point : set.points) {
        for (Eigen::Index k = 0; k < users; ++k) {
            out << (k ? "," : "") << format_real(point.powers[k]);
        }
        for (Eigen::Index k = 0; k < users; ++k) {
            out << ',' << format_real(point.mse[k]);
        }
        out << '\n';
    }
    return out.str();
}

/// Splits CSV text into rows of fields; the header row is returned first.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        std::istringstream cells(line);
        while (std::getline(cells, field, ',')) {
            fields.push_back(field);
        }
        if (line.back() == ',') {
            fields.emplace_back();
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

} // namespace mseregion::io
