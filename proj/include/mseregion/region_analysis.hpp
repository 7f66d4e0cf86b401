#pragma once

// Achievable MSE region for any number of users: sampling, dominated
// membership and line-segment nonconvexity witnesses.
//
// A target tuple t is "in the region" when some feasible p reaches it from
// below, eps_k(p) <= t_k for all k. Membership is decided by the margin
//     min_p max_k (eps_k(p) - t_k)
// over the power set, computed by log-sum-exp smoothing with decreasing
// temperature followed by a trust-region linear-programming polish of the
// exact max.

#include "mseregion/core_model.hpp"
#include "mseregion/parallel.hpp"
#include "mseregion/projected_descent.hpp"
#include "mseregion/simplex.hpp"
#include "mseregion/small_lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mseregion {

enum class SampleMode { Grid, Random };

struct RegionPoint {
    PowerAllocation powers;
    MseTuple mse;
};

struct RegionSampleSet {
    std::vector<RegionPoint> points;
    Eigen::Index resolution = 0;
    std::uint64_t seed = 0;
    SampleMode mode = SampleMode::Grid;
};

struct MembershipOptions {
    std::vector<double> temperatures{1e-1, 1e-2, 1e-3};
    std::size_t random_starts = 8;
    std::uint64_t seed = 0;
    /// Absolute tolerance in MSE units for "dominated".
    double tol_member = 1e-6;
    std::size_t polish_iterations = 400;
    DescentOptions smoothing{1.0, 0.5, 1e-4, 2.0, 1e8, 1e-10, 2000, 80, false};
    unsigned threads = 1;
};

struct MembershipVerdict {
    MseTuple target;
    double margin = 0.0;
    PowerAllocation witness_powers;
    bool dominated = false;
};

struct SegmentPoint {
    double t = 0.0;
    MseTuple target;
    double margin = 0.0;
    bool dominated = false;
};

struct SegmentReport {
    MseTuple a;
    MseTuple b;
    double margin_a = 0.0;
    double margin_b = 0.0;
    std::vector<SegmentPoint> points;
    bool nonconvex_witness = false;
};

inline constexpr std::uint64_t max_region_samples = 10'000'000;

inline RegionSampleSet sample_region(const ChannelSet& channels, const SystemConfig& cfg, Eigen::Index resolution,
                                     SampleMode mode, std::uint64_t seed, unsigned threads = 1)
{
    detail::require(resolution >= 2, "region resolution must be at least 2");
    const Eigen::Index users = channels.users();
    const double budget = cfg.power_budget();

    std::vector<RVector> powers;
    if (mode == SampleMode::Grid) {
        const std::uint64_t count = lattice_point_count(users, resolution);
        detail::require(count <= max_region_samples,
                        "grid of " + std::to_string(count) + " points exceeds " +
                            std::to_string(max_region_samples) + "; use random sampling instead");
        powers.reserve(count);
        for_each_lattice_point(users, resolution, budget, [&](const RVector& p) { powers.push_back(p); });
    } else {
        detail::require(static_cast<std::uint64_t>(resolution) <= max_region_samples,
                        "too many random samples requested");
        std::mt19937_64 rng(seed);
        powers.reserve(static_cast<std::size_t>(resolution));
        for (Eigen::Index i = 0; i < resolution; ++i) {
            powers.push_back(sample_power_set(users, budget, rng));
        }
    }

    RegionSampleSet out;
    out.resolution = resolution;
    out.seed = seed;
    out.mode = mode;
    out.points = parallel_map<RegionPoint>(powers.size(), threads, [&](std::size_t i) {
        PowerAllocation p(powers[i]);
        MseTuple eps = mse_tuple(channels, p, cfg);
        return RegionPoint{std::move(p), std::move(eps)};
    });
    return out;
}

namespace detail {

struct MinimaxState {
    RVector excess;   // eps_k - t_k
    RMatrix jacobian; // row k = grad eps_k
    double value = 0.0;
};

inline MinimaxState minimax_state(const ChannelSet& channels, const SystemConfig& cfg, const RVector& target,
                                  const RVector& p)
{
    const PowerAllocation powers(p);
    const CouplingMatrix coupling(channels, powers, cfg);
    MinimaxState s;
    s.excess = mse_from_coupling(coupling, powers) - target;
    s.jacobian = mse_jacobian_from_coupling(coupling, powers);
    s.value = s.excess.maxCoeff();
    return s;
}

/// tau log sum exp(v_k / tau) and its gradient.
inline std::pair<double, RVector> smoothed_max(const MinimaxState& s, double tau)
{
    const double top = s.value;
    const RVector shifted = ((s.excess.array() - top) / tau).exp().matrix();
    const double total = shifted.sum();
    const RVector softmax = shifted / total;
    return {top + tau * std::log(total), s.jacobian.transpose() * softmax};
}

/// Trust-region sequential linear programming on max_k (eps_k(p) - t_k):
/// each step minimizes the linearized max over the power set intersected
/// with a box of half-width delta around p.
inline RVector polish_minimax(const ChannelSet& channels, const SystemConfig& cfg, const RVector& target, RVector p,
                              std::size_t max_iterations)
{
    const double budget = cfg.power_budget();
    const Eigen::Index users = p.size();
    double delta = 1e-2 * budget;
    MinimaxState state = minimax_state(channels, cfg, target, p);

    for (std::size_t it = 0; it < max_iterations && delta > 1e-13 * budget; ++it) {
        const RVector lo = (p.array() - delta).cwiseMax(0.0).matrix();
        const RVector hi = p.array() + delta;
        const RVector offset = state.excess + state.jacobian * (lo - p);
        const double top = offset.maxCoeff();

        RMatrix a = RMatrix::Zero(2 * users + 1, users + 1);
        RVector b(2 * users + 1);
        RVector c = RVector::Zero(users + 1);
        a.topLeftCorner(users, users) = state.jacobian;
        a.block(0, users, users, 1).setOnes();
        b.head(users) = (top - offset.array()).matrix();
        a.block(users, 0, users, users).setIdentity();
        b.segment(users, users) = hi - lo;
        a.block(2 * users, 0, 1, users).setOnes();
        b[2 * users] = std::max(0.0, budget - lo.sum());
        c[users] = 1.0;

        const LpResult lp = solve_small_lp(a, b, c);
        if (!lp.optimal) {
            break;
        }
        const double model = top - lp.x[users];
        const double predicted = state.value - model;
        if (predicted <= 1e-15 * std::max(1.0, std::abs(state.value))) {
            break;
        }
        const RVector candidate = project_onto_power_set(lo + lp.x.head(users), budget);
        MinimaxState next = minimax_state(channels, cfg, target, candidate);
        const double ratio = (state.value - next.value) / predicted;
        if (ratio >= 0.01) {
            const bool on_box = ((candidate - p).cwiseAbs().array() >= 0.999 * delta).any();
            p = candidate;
            state = std::move(next);
            if (ratio > 0.75 && on_box) {
                delta *= 2.0;
            } else if (ratio < 0.25) {
                delta *= 0.25;
            }
        } else {
            delta *= 0.25;
        }
    }
    return p;
}

inline std::pair<double, RVector> membership_from_start(const ChannelSet& channels, const SystemConfig& cfg,
                                                        const RVector& target, const RVector& start,
                                                        const MembershipOptions& opts)
{
    RVector p = start;
    for (double tau : opts.temperatures) {
        auto evaluate = [&](const RVector& q) { return smoothed_max(minimax_state(channels, cfg, target, q), tau); };
        p = projected_descent(evaluate, p, cfg.power_budget(), opts.smoothing).point;
    }
    p = polish_minimax(channels, cfg, target, p, opts.polish_iterations);
    return {minimax_state(channels, cfg, target, p).value, p};
}

} // namespace detail

/// Value of max_k (eps_k(p) - t_k) at a given allocation.
inline double dominance_excess(const ChannelSet& channels, const SystemConfig& cfg, const MseTuple& target,
                               const PowerAllocation& powers)
{
    detail::require(target.size() == channels.users(), "target length does not match the number of users");
    return (mse_tuple(channels, powers, cfg).values() - target.values()).maxCoeff();
}

inline MembershipVerdict dominated_membership(const ChannelSet& channels, const SystemConfig& cfg,
                                              const MseTuple& target, const MembershipOptions& opts = {})
{
    detail::require(target.size() == channels.users(), "target length does not match the number of users");
    const Eigen::Index users = channels.users();
    const double budget = cfg.power_budget();

    std::vector<RVector> starts = power_set_landmarks(users, budget);
    std::mt19937_64 rng(opts.seed);
    for (std::size_t i = 0; i < opts.random_starts; ++i) {
        starts.push_back(sample_power_set(users, budget, rng));
    }

    const auto runs = parallel_map<std::pair<double, RVector>>(starts.size(), opts.threads, [&](std::size_t i) {
        return detail::membership_from_start(channels, cfg, target.values(), starts[i], opts);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        if (runs[i].first < runs[best].first) {
            best = i;
        }
    }
    const double margin = runs[best].first;
    return {target, margin, PowerAllocation(runs[best].second), margin <= opts.tol_member};
}

/// Membership along the open segment between two achievable tuples at
/// t = i / (steps + 1), i = 1..steps.
inline SegmentReport segment_test(const ChannelSet& channels, const SystemConfig& cfg, const MseTuple& a,
                                  const MseTuple& b, std::size_t steps, const MembershipOptions& opts = {})
{
    detail::require(steps >= 1, "segment test needs at least one interior step");
    detail::require(a.size() == channels.users() && b.size() == channels.users(),
                    "segment endpoints must have one entry per user");

    MembershipOptions inner = opts;
    inner.threads = 1;
    const MembershipVerdict va = dominated_membership(channels, cfg, a, inner);
    const MembershipVerdict vb = dominated_membership(channels, cfg, b, inner);
    detail::require(va.dominated, "segment endpoint a is not achievable (margin " + std::to_string(va.margin) + ")");
    detail::require(vb.dominated, "segment endpoint b is not achievable (margin " + std::to_string(vb.margin) + ")");

    SegmentReport report{a, b, va.margin, vb.margin, {}, false};
    report.points = parallel_map<SegmentPoint>(steps, opts.threads, [&](std::size_t i) {
        const double t = static_cast<double>(i + 1) / static_cast<double>(steps + 1);
        MseTuple target(((1.0 - t) * a.values() + t * b.values()).eval());
        const MembershipVerdict v = dominated_membership(channels, cfg, target, inner);
        return SegmentPoint{t, std::move(target), v.margin, v.dominated};
    });
    for (const SegmentPoint& point : report.points) {
        report.nonconvex_witness = report.nonconvex_witness || !point.dominated;
    }
    return report;
}

/// Appends `extra` users whose channels repeat the last column. With zero
/// power on the new users the original MSEs are unchanged and the new users
/// sit at MSE 1.
inline ChannelSet embed_inactive_users(const ChannelSet& channels, Eigen::Index extra)
{
    detail::require(extra >= 0, "number of extra users must be nonnegative");
    const CMatrix& h = channels.matrix();
    CMatrix out(h.rows(), h.cols() + extra);
    out.leftCols(h.cols()) = h;
    for (Eigen::Index j = 0; j < extra; ++j) {
        out.col(h.cols() + j) = h.col(h.cols() - 1);
    }
    return ChannelSet(std::move(out));
}

/// Pads a tuple with entries equal to one (inactive users).
inline MseTuple pad_with_inactive(const MseTuple& eps, Eigen::Index extra)
{
    RVector out = RVector::Ones(eps.size() + extra);
    out.head(eps.size()) = eps.values();
    return MseTuple(std::move(out));
}

/// Pads an allocation with zero powers.
inline PowerAllocation pad_with_silent(const PowerAllocation& powers, Eigen::Index extra)
{
    RVector out = RVector::Zero(powers.size() + extra);
    out.head(powers.size()) = powers.values();
    return PowerAllocation(std::move(out));
}

} // namespace mseregion
