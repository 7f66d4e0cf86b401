#pragma once

// Weighted sum-MSE minimization over the power set
//     minimize sum_k w_k eps_k(p)  s.t.  sum_k p_k <= P,  p_k >= 0
// with KKT verification and multistart enumeration of stationary points.

#include "mseregion/core_model.hpp"
#include "mseregion/parallel.hpp"
#include "mseregion/projected_descent.hpp"
#include "mseregion/simplex.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace mseregion {

/// Nonnegative weights, not all zero.
class WeightVector {
public:
    explicit WeightVector(RVector weights) : weights_(std::move(weights))
    {
        detail::require(weights_.size() >= 1, "weight vector is empty");
        detail::require(weights_.allFinite(), "weights must be finite");
        detail::require((weights_.array() >= 0.0).all(), "weights must be nonnegative");
        detail::require(weights_.sum() > 0.0, "weights must not all be zero");
    }

    [[nodiscard]] const RVector& values() const noexcept { return weights_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return weights_.size(); }

private:
    RVector weights_;
};

/// Signed residuals of the seven KKT conditions; zero means satisfied.
struct KktResiduals {
    /// h_k^H X^-1 (w_k X - S) X^-1 h_k - (lambda - mu_k)
    RVector stationarity;
    /// min(p_k, 0)
    RVector primal_sign;
    /// p_k mu_k
    RVector complementarity;
    /// min(mu_k, 0)
    RVector dual_sign;
    /// max(sum p - P, 0)
    double budget_violation = 0.0;
    /// lambda (sum p - P)
    double budget_complementarity = 0.0;
    /// min(lambda, 0)
    double lambda_sign = 0.0;
    /// P - sum p
    double budget_slack = 0.0;
};

struct Multipliers {
    double lambda = 0.0;
    RVector mu;
};

struct KktCertificate {
    PowerAllocation powers;
    double lambda = 0.0;
    RVector mu;
    double objective = 0.0;
    KktResiduals residuals;
    bool converged = false;
    std::size_t iterations = 0;
};

struct KktOptions {
    DescentOptions descent{};
    /// Stationarity and complementarity tolerance for a converged certificate.
    double tol_kkt = 1e-7;
    /// p_k <= tol_active_rel * P counts as the face p_k = 0.
    double tol_active_rel = 1e-8;
};

struct StationaryCluster {
    KktCertificate certificate;
    /// Number of converged runs that landed in this cluster.
    std::size_t members = 0;
};

struct StationaryPointReport {
    std::vector<StationaryCluster> clusters;
    std::size_t runs = 0;
    std::size_t unconverged = 0;
    std::uint64_t seed = 0;
    double cluster_radius = 0.0;
};

namespace detail {

inline void require_weights(const WeightVector& weights, const ChannelSet& channels)
{
    require(weights.size() == channels.users(), "weight vector length does not match the number of users");
}

inline bool budget_is_tight(const PowerAllocation& powers, const SystemConfig& cfg)
{
    return cfg.power_budget() - powers.total() <= cfg.feasibility_tolerance();
}

} // namespace detail

/// Evaluates every KKT condition at (p, lambda, mu). Stationarity is computed
/// from the matrix expression with S = sum_l w_l p_l h_l h_l^H, independently
/// of weighted_mse_gradient.
inline KktResiduals kkt_residuals(const ChannelSet& channels, const SystemConfig& cfg, const WeightVector& weights,
                                  const PowerAllocation& powers, double lambda, const RVector& mu)
{
    detail::require_consistent(channels, powers);
    detail::require_weights(weights, channels);
    detail::require(mu.size() == channels.users(), "mu length does not match the number of users");

    const CMatrix& h = channels.matrix();
    const CMatrix x = receive_covariance(channels, powers, cfg);
    CMatrix s = CMatrix::Zero(h.rows(), h.rows());
    for (Eigen::Index l = 0; l < h.cols(); ++l) {
        s.noalias() += weights.values()[l] * powers[l] * h.col(l) * h.col(l).adjoint();
    }
    Eigen::LLT<CMatrix> llt(x);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("receive covariance is not positive definite");
    }
    const CMatrix u = llt.solve(h);

    const Eigen::Index users = channels.users();
    KktResiduals out;
    out.stationarity.resize(users);
    out.primal_sign.resize(users);
    out.complementarity.resize(users);
    out.dual_sign.resize(users);
    for (Eigen::Index k = 0; k < users; ++k) {
        const CMatrix middle = weights.values()[k] * x - s;
        const double form = (u.col(k).adjoint() * middle * u.col(k))(0, 0).real();
        out.stationarity[k] = form - (lambda - mu[k]);
        out.primal_sign[k] = std::min(powers[k], 0.0);
        out.complementarity[k] = powers[k] * mu[k];
        out.dual_sign[k] = std::min(mu[k], 0.0);
    }
    const double excess = powers.total() - cfg.power_budget();
    out.budget_violation = std::max(excess, 0.0);
    out.budget_complementarity = lambda * excess;
    out.lambda_sign = std::min(lambda, 0.0);
    out.budget_slack = -excess;
    return out;
}

/// Largest violation in units comparable to tol_kkt (the budget
/// complementarity is normalized by P).
inline double max_kkt_violation(const KktResiduals& r, const SystemConfig& cfg)
{
    double worst = 0.0;
    auto absmax = [](const RVector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; };
    worst = std::max({worst, absmax(r.stationarity), absmax(r.primal_sign), absmax(r.complementarity),
                      absmax(r.dual_sign), std::abs(r.lambda_sign)});
    worst = std::max(worst, std::abs(r.budget_complementarity) / cfg.power_budget());
    worst = std::max(worst, r.budget_violation / cfg.power_budget());
    return worst;
}

/// Nonnegative multipliers consistent with the active set of p: lambda is the
/// largest negative gradient over active users when the budget is tight
/// (zero otherwise); inactive users get mu_k = max(lambda + grad_k, 0).
inline Multipliers recover_multipliers(const ChannelSet& channels, const SystemConfig& cfg,
                                       const WeightVector& weights, const PowerAllocation& powers,
                                       double tol_active_rel = 1e-8)
{
    detail::require_consistent(channels, powers);
    detail::require_weights(weights, channels);
    const RVector gradient = weighted_mse_gradient(channels, powers, cfg, weights.values());
    const double tol_active = tol_active_rel * cfg.power_budget();
    const Eigen::Index users = channels.users();

    Multipliers out;
    out.mu = RVector::Zero(users);
    if (detail::budget_is_tight(powers, cfg)) {
        for (Eigen::Index k = 0; k < users; ++k) {
            if (powers[k] > tol_active) {
                out.lambda = std::max(out.lambda, -gradient[k]);
            }
        }
    }
    for (Eigen::Index k = 0; k < users; ++k) {
        if (powers[k] <= tol_active) {
            out.mu[k] = std::max(out.lambda + gradient[k], 0.0);
        }
    }
    return out;
}

inline KktCertificate certify(const ChannelSet& channels, const SystemConfig& cfg, const WeightVector& weights,
                              const PowerAllocation& powers, const KktOptions& opts = {})
{
    const Multipliers mult = recover_multipliers(channels, cfg, weights, powers, opts.tol_active_rel);
    KktResiduals residuals = kkt_residuals(channels, cfg, weights, powers, mult.lambda, mult.mu);
    const double objective = weighted_sum_mse(channels, powers, cfg, weights.values());
    const bool ok = max_kkt_violation(residuals, cfg) <= opts.tol_kkt;
    return {powers, mult.lambda, mult.mu, objective, std::move(residuals), ok, 0};
}

/// Projected gradient descent from a feasible start, then KKT certification.
inline KktCertificate minimize_weighted_sum_mse(const ChannelSet& channels, const SystemConfig& cfg,
                                                const WeightVector& weights, const PowerAllocation& start,
                                                const KktOptions& opts = {}, std::vector<double>* trace = nullptr)
{
    detail::require_consistent(channels, start);
    detail::require_weights(weights, channels);
    detail::require(start.is_feasible(cfg), "start point exceeds the power budget");

    auto evaluate = [&](const RVector& p) {
        WeightedEvaluation e = evaluate_weighted(channels, PowerAllocation(p), cfg, weights.values());
        return std::pair<double, RVector>{e.objective, std::move(e.gradient)};
    };
    DescentOptions descent = opts.descent;
    descent.record_trace = trace != nullptr;
    DescentResult result = projected_descent(evaluate, start.values(), cfg.power_budget(), descent);
    if (trace != nullptr) {
        *trace = std::move(result.trace);
    }

    KktCertificate cert = certify(channels, cfg, weights, PowerAllocation(result.point), opts);
    cert.converged = cert.converged && result.converged;
    cert.iterations = result.iterations;
    return cert;
}

/// Start points for the multistart: `random_starts` uniform draws from the
/// power set (generated sequentially from `seed`), then the vertices and the
/// centroid.
inline std::vector<RVector> multistart_points(Eigen::Index users, double budget, std::size_t random_starts,
                                              std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<RVector> starts;
    starts.reserve(random_starts + static_cast<std::size_t>(users) + 2);
    for (std::size_t i = 0; i < random_starts; ++i) {
        starts.push_back(sample_power_set(users, budget, rng));
    }
    for (RVector& landmark : power_set_landmarks(users, budget)) {
        starts.push_back(std::move(landmark));
    }
    return starts;
}

/// Runs the local solver from every start and clusters converged runs by
/// Euclidean distance of the powers (radius 1e-3 P). Clusters are returned
/// sorted by objective; each carries its lowest-objective member.
inline StationaryPointReport enumerate_stationary_points(const ChannelSet& channels, const SystemConfig& cfg,
                                                         const WeightVector& weights, std::size_t starts,
                                                         std::uint64_t seed, const KktOptions& opts = {},
                                                         unsigned threads = 1)
{
    detail::require(starts >= 1, "at least one start is required");
    detail::require_weights(weights, channels);
    const std::vector<RVector> points = multistart_points(channels.users(), cfg.power_budget(), starts, seed);
    const std::vector<KktCertificate> runs =
        parallel_map<KktCertificate>(points.size(), threads, [&](std::size_t i) {
            return minimize_weighted_sum_mse(channels, cfg, weights, PowerAllocation(points[i]), opts);
        });

    StationaryPointReport report;
    report.runs = runs.size();
    report.seed = seed;
    report.cluster_radius = 1e-3 * cfg.power_budget();
    std::vector<RVector> anchors;
    for (const KktCertificate& run : runs) {
        if (!run.converged) {
            ++report.unconverged;
            continue;
        }
        std::size_t slot = anchors.size();
        for (std::size_t c = 0; c < anchors.size(); ++c) {
            if ((anchors[c] - run.powers.values()).norm() <= report.cluster_radius) {
                slot = c;
                break;
            }
        }
        if (slot == anchors.size()) {
            anchors.push_back(run.powers.values());
            report.clusters.push_back({run, 1});
        } else {
            auto& cluster = report.clusters[slot];
            ++cluster.members;
            if (run.objective < cluster.certificate.objective) {
                cluster.certificate = run;
            }
        }
    }
    std::stable_sort(report.clusters.begin(), report.clusters.end(), [](const auto& a, const auto& b) {
        return a.certificate.objective < b.certificate.objective;
    });
    return report;
}

} // namespace mseregion
