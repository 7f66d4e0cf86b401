#pragma once

// Three-user instance with a nonconvex MSE region: H = [[1,0,1],[0,1,1]],
// P = 10, w = (0.22, 0.54, 0.24). The noise variance is not part of the
// published instance; sigma^2 = 1 reproduces the published MSE triples.

#include "mseregion/kkt_solver.hpp"
#include "mseregion/region_analysis.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace mseregion {

struct PublishedCheck {
    std::string name;
    double published = 0.0;
    double computed = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct CounterexampleReport {
    StationaryPointReport stationary;
    /// Certificates of the two published primal/dual points.
    KktCertificate published_point_1;
    KktCertificate published_point_2;
    KktResiduals published_residuals_1;
    KktResiduals published_residuals_2;
    MseTuple triple_1;
    MseTuple triple_2;
    SegmentReport segment;
    std::vector<PublishedCheck> checks;
    bool all_pass = false;
};

struct CounterexampleOptions {
    std::size_t starts = 64;
    std::uint64_t seed = 0;
    std::size_t segment_steps = 9;
    unsigned threads = 1;
    MembershipOptions membership{};
    KktOptions kkt{};
};

namespace counterexample {

inline constexpr double noise_variance = 1.0;
inline constexpr double power_budget = 10.0;

inline ChannelSet channels()
{
    CMatrix h(2, 3);
    h << 1.0, 0.0, 1.0, 0.0, 1.0, 1.0;
    return ChannelSet(std::move(h));
}

inline SystemConfig config() { return {noise_variance, power_budget}; }

inline WeightVector weights() { return WeightVector((RVector(3) << 0.22, 0.54, 0.24).finished()); }

struct PublishedPoint {
    RVector powers;
    double lambda;
    RVector mu;
    double objective;
    double objective_tolerance;
    RVector mse;
};

inline PublishedPoint point_1()
{
    return {(RVector(3) << 3.6753, 6.3247, 0.0).finished(), 0.0101, (RVector(3) << 0.0, 0.0, 0.0266).finished(),
            0.36078, 1e-4, (RVector(3) << 0.2139, 0.1365, 1.0).finished()};
}

inline PublishedPoint point_2()
{
    return {(RVector(3) << 0.0, 7.0794, 2.9206).finished(), 0.0115, (RVector(3) << 0.007, 0.0, 0.0).finished(),
            0.3828, 5e-4, (RVector(3) << 1.0, 0.1977, 0.2335).finished()};
}

} // namespace counterexample

inline CounterexampleReport counterexample_suite(const CounterexampleOptions& opts = {})
{
    const ChannelSet h = counterexample::channels();
    const SystemConfig cfg = counterexample::config();
    const WeightVector w = counterexample::weights();
    const auto published = std::vector{counterexample::point_1(), counterexample::point_2()};

    StationaryPointReport stationary = enumerate_stationary_points(h, cfg, w, opts.starts, opts.seed, opts.kkt, opts.threads);

    std::vector<PublishedCheck> checks;
    auto check = [&](std::string name, double expected, double computed, double tol) {
        checks.push_back({std::move(name), expected, computed, tol, std::abs(expected - computed) <= tol});
    };
    checks.push_back({"stationary cluster count", 2.0, static_cast<double>(stationary.clusters.size()), 0.0,
                      stationary.clusters.size() == 2});

    std::vector<KktCertificate> certificates;
    std::vector<KktResiduals> residuals;
    std::vector<MseTuple> triples;
    for (std::size_t i = 0; i < published.size(); ++i) {
        const auto& point = published[i];
        const std::string tag = "point " + std::to_string(i + 1) + " ";
        const PowerAllocation powers(point.powers);

        // Published values replayed through the KKT system.
        KktResiduals r = kkt_residuals(h, cfg, w, powers, point.lambda, point.mu);
        check(tag + "published KKT residual", 0.0, max_kkt_violation(r, cfg), 5e-4);
        residuals.push_back(std::move(r));

        check(tag + "objective at published powers", point.objective, weighted_sum_mse(h, powers, cfg, w.values()),
              point.objective_tolerance);
        MseTuple triple = mse_tuple(h, powers, cfg);
        for (Eigen::Index k = 0; k < 3; ++k) {
            check(tag + "mse " + std::to_string(k + 1), point.mse[k], triple[k], 1e-3);
        }
        triples.push_back(std::move(triple));

        // Nearest solver cluster to the published powers.
        const StationaryCluster* nearest = nullptr;
        for (const auto& cluster : stationary.clusters) {
            if (nearest == nullptr || (cluster.certificate.powers.values() - point.powers).norm() <
                                          (nearest->certificate.powers.values() - point.powers).norm()) {
                nearest = &cluster;
            }
        }
        if (nearest == nullptr) {
            checks.push_back({tag + "solver cluster found", 1.0, 0.0, 0.0, false});
            certificates.push_back(certify(h, cfg, w, powers, opts.kkt));
            continue;
        }
        const KktCertificate& cert = nearest->certificate;
        check(tag + "solver objective", point.objective, cert.objective, point.objective_tolerance);
        for (Eigen::Index k = 0; k < 3; ++k) {
            check(tag + "solver power " + std::to_string(k + 1), point.powers[k], cert.powers[k], 1e-3);
        }
        check(tag + "solver lambda", point.lambda, cert.lambda, 1e-3);
        for (Eigen::Index k = 0; k < 3; ++k) {
            check(tag + "solver mu " + std::to_string(k + 1), point.mu[k], cert.mu[k], 1e-3);
        }
        certificates.push_back(cert);
    }

    MembershipOptions membership = opts.membership;
    membership.threads = opts.threads;
    SegmentReport segment = segment_test(h, cfg, triples[0], triples[1], opts.segment_steps, membership);
    checks.push_back({"segment lies outside the region", 1.0, segment.nonconvex_witness ? 1.0 : 0.0, 0.0,
                      segment.nonconvex_witness});

    bool all = true;
    for (const auto& c : checks) {
        all = all && c.pass;
    }
    return {std::move(stationary), certificates[0], certificates[1], residuals[0], residuals[1], triples[0],
            triples[1], std::move(segment), std::move(checks), all};
}

} // namespace mseregion
